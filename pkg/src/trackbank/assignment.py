"""Maximum-weight rectangular bipartite assignment.

The solver is a Kuhn-Munkres core run on negated weights, with rectangular
inputs padded to square at weight 0 (padded matches are dropped from the
result). Ties between equal-total optima are broken deterministically: the
returned pair list is the lexicographically smallest, i.e. lower row indices
are matched where possible and each row takes the lowest column index
consistent with optimality.

`brute_force_assignment` enumerates every maximal matching and serves as the
test oracle; both functions share the tie-break contract and compute totals
as a row-ordered float sum so equality checks are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = ["Assignment", "solve_max_assignment", "brute_force_assignment"]

BRUTE_FORCE_MAX_SIDE = 8

# absolute-per-scale slack used only to shortlist tie candidates from the
# dual potentials; candidates are confirmed with an exact total comparison
_TIE_EPS = 1e-9

_INF = float("inf")


@dataclass(frozen=True)
class Assignment:
    """Row/col pairing, sorted by row index."""

    pairs: tuple[tuple[int, int], ...]

    def total_weight(self, w) -> float:
        w = np.asarray(w, dtype=np.float64)
        total = 0.0
        for r, c in self.pairs:
            total += float(w[r, c])
        return total


def _validate(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError(f"weight matrix must be 2D, got shape {w.shape}")
    if w.size and not np.all(np.isfinite(w)):
        raise ValueError("weight matrix entries must be finite")
    return w


def _km_min(cost: list[list[float]]) -> tuple[list[int], list[float], list[float]]:
    """Square minimization core.

    Returns (col matched to each row, row potentials u, col potentials v),
    potentials 1-based with a dummy 0 slot.
    """
    n = len(cost)
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row (1-based) matched to col j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [_INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = cost[i0 - 1]
            ui0 = u[i0]
            delta = _INF
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    match = [-1] * n
    for j in range(1, n + 1):
        match[p[j] - 1] = j - 1
    return match, u, v


def _pad_square(w: np.ndarray) -> list[list[float]]:
    rows, cols = w.shape
    n = max(rows, cols)
    out = []
    for r in range(n):
        if r < rows:
            out.append([-float(w[r, c]) if c < cols else 0.0 for c in range(n)])
        else:
            out.append([0.0] * n)
    return out


def _solve_once(w: np.ndarray):
    """One padded solve: (real pairs, row-ordered total, u, v, match)."""
    rows, cols = w.shape
    if rows == 0 or cols == 0:
        return [], 0.0, [], [], []
    cost = _pad_square(w)
    match, u, v = _km_min(cost)
    pairs = [(r, match[r]) for r in range(rows) if match[r] < cols]
    total = 0.0
    for r, c in pairs:
        total += float(w[r, c])
    return pairs, total, u, v, match


def _row_order_total(w: np.ndarray, pairs) -> float:
    total = 0.0
    for r, c in sorted(pairs):
        total += float(w[r, c])
    return total


def _has_ties(w: np.ndarray, match: list[int], u: list[float], v: list[float]) -> bool:
    """True when some row has a tight alternative column under the duals.

    Tightness is necessary for membership in any optimal matching, so a
    unique tight column per row certifies a unique optimum.
    """
    rows, cols = w.shape
    n = max(rows, cols)
    scale = 1.0 + float(np.max(np.abs(w))) if w.size else 1.0
    tol = _TIE_EPS * scale
    for r in range(rows):
        for c in range(n):
            if c == match[r]:
                continue
            entry = -float(w[r, c]) if c < cols else 0.0
            if abs(entry - u[r + 1] - v[c + 1]) <= tol:
                return True
    return False


def _lexicographic_refine(w: np.ndarray, best_total: float) -> list[tuple[int, int]]:
    """Fix rows in order to the smallest column admitting an optimal total."""
    rows, cols = w.shape
    scale = 1.0 + float(np.max(np.abs(w)))
    tol = _TIE_EPS * scale
    fixed: list[tuple[int, int]] = []
    free_cols = list(range(cols))
    for r in range(rows):
        rest_rows = list(range(r + 1, rows))
        chosen = None
        if free_cols:
            sub = w[np.ix_([r] + rest_rows, free_cols)]
            _, _, u, v, match = _solve_once(sub)
            matched_col = free_cols[match[0]] if match[0] < len(free_cols) else None
            candidates = []
            for k, c in enumerate(free_cols):
                if c == matched_col:
                    candidates.append(c)
                    continue
                if abs(-float(sub[0, k]) - u[1] - v[k + 1]) <= tol:
                    candidates.append(c)
            for c in sorted(candidates):
                rest_cols = [cc for cc in free_cols if cc != c]
                sub_pairs, _, _, _, _ = _solve_once(w[np.ix_(rest_rows, rest_cols)])
                trial = list(fixed) + [(r, c)] + [
                    (rest_rows[rr], rest_cols[cc]) for rr, cc in sub_pairs
                ]
                if _row_order_total(w, trial) == best_total:
                    chosen = c
                    break
            if chosen is None and matched_col is not None:
                chosen = matched_col  # numerical fallback, still optimal
        if chosen is None:
            continue  # row r stays unmatched (rows outnumber columns)
        fixed.append((r, chosen))
        free_cols.remove(chosen)
    return fixed


def solve_max_assignment(w) -> Assignment:
    """Maximum-total maximal matching with deterministic tie-breaking."""
    w = _validate(w)
    rows, cols = w.shape
    if rows == 0 or cols == 0:
        return Assignment(pairs=())
    pairs, total, u, v, match = _solve_once(w)
    if _has_ties(w, match, u, v):
        pairs = _lexicographic_refine(w, total)
    return Assignment(pairs=tuple(sorted(pairs)))


def brute_force_assignment(w) -> Assignment:
    """Exhaustive oracle; refuses matrices with min side above 8."""
    w = _validate(w)
    rows, cols = w.shape
    if min(rows, cols) > BRUTE_FORCE_MAX_SIDE:
        raise ValueError(
            f"brute force refuses min side {min(rows, cols)} > {BRUTE_FORCE_MAX_SIDE}"
        )
    if rows == 0 or cols == 0:
        return Assignment(pairs=())

    k = min(rows, cols)
    best_total = -_INF
    best_flat: tuple[int, ...] | None = None
    best_pairs: tuple[tuple[int, int], ...] = ()
    for row_subset in itertools.combinations(range(rows), k):
        for col_perm in itertools.permutations(range(cols), k):
            total = 0.0
            for r, c in zip(row_subset, col_perm):
                total += float(w[r, c])
            pairs = tuple(zip(row_subset, col_perm))
            flat = tuple(itertools.chain.from_iterable(pairs))
            if total > best_total or (total == best_total and flat < best_flat):
                best_total = total
                best_flat = flat
                best_pairs = pairs
    return Assignment(pairs=best_pairs)
