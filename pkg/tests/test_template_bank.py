import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackbank.matching import appearance_weight
from trackbank.template_bank import (
    MatchingThresholds,
    Template,
    TemplateBank,
    dttm_update,
    init_bank,
    moving_average_update,
)

THR = MatchingThresholds()


def unit(v):
    a = np.asarray(v, dtype=np.float64)
    return a / np.linalg.norm(a)


def test_init_bank():
    bank = init_bank(unit([1, 2, 2]), 5)
    assert len(bank.templates) == 1
    assert bank.templates[0].use_count == 0
    assert bank.templates[0].born_frame == 0
    sim, idx = appearance_weight(bank, unit([1, 2, 2]))
    assert sim == pytest.approx(1.0) and idx == 0


def test_init_bank_capacity_error():
    with pytest.raises(ValueError):
        init_bank(unit([1, 0]), 0)


def test_grow_on_confident_dissimilar():
    bank = init_bank(unit([1, 0]), 5)
    grown = dttm_update(bank, unit([0, 1]), 0.9, 0.3, 0, THR, frame=4)
    assert len(grown.templates) == 2
    assert grown.templates[0].use_count == 1  # attaining template credited
    assert grown.templates[1].born_frame == 4
    assert grown.templates[1].use_count == 0


def test_no_growth_when_similar():
    bank = init_bank(unit([1, 0]), 5)
    same = dttm_update(bank, unit([1, 0.1]), 0.9, 0.8, 0, THR, frame=4)
    assert len(same.templates) == 1
    assert same.templates[0].use_count == 1


def test_no_growth_when_unconfident():
    bank = init_bank(unit([1, 0]), 5)
    out = dttm_update(bank, unit([0, 1]), 0.4, 0.1, 0, THR, frame=4)
    assert len(out.templates) == 1


def test_boundary_values_are_strict():
    bank = init_bank(unit([1, 0]), 5)
    # conf exactly at sigma_conf or app_sim exactly at sigma_app: no new template
    assert len(dttm_update(bank, unit([0, 1]), 0.5, 0.3, 0, THR, 1).templates) == 1
    assert len(dttm_update(bank, unit([0, 1]), 0.9, 0.5, 0, THR, 1).templates) == 1


def test_lfu_eviction():
    bank = TemplateBank(
        templates=(
            Template(embedding=unit([1, 0]), born_frame=0, use_count=5),
            Template(embedding=unit([0, 1]), born_frame=3, use_count=0),
        ),
        capacity=2,
    )
    out = dttm_update(bank, unit([1, 1]), 0.9, 0.2, 0, THR, frame=7)
    # the use_count-0 template born at 3 is evicted (new template is use 0
    # too, but younger); size stays at capacity
    assert len(out.templates) == 2
    assert out.templates[0].use_count == 6
    assert out.templates[1].born_frame == 7


def test_lfu_tie_evicts_oldest():
    bank = TemplateBank(
        templates=(
            Template(embedding=unit([1, 0, 0]), born_frame=0, use_count=0),
            Template(embedding=unit([0, 1, 0]), born_frame=2, use_count=0),
            Template(embedding=unit([0, 0, 1]), born_frame=5, use_count=0),
        ),
        capacity=3,
    )
    # after crediting index 1, the zero-use tie is {born 0, born 5, born 9};
    # the oldest loses — the initial template is evictable like any other
    out = dttm_update(bank, unit([1, 1, 1]), 0.9, 0.2, 1, THR, frame=9)
    assert [t.born_frame for t in out.templates] == [2, 5, 9]
    assert [t.use_count for t in out.templates] == [1, 0, 0]


def test_fresh_template_evicted_when_others_are_used():
    bank = TemplateBank(
        templates=(
            Template(embedding=unit([1, 0]), born_frame=0, use_count=2),
            Template(embedding=unit([0, 1]), born_frame=2, use_count=2),
        ),
        capacity=2,
    )
    # every incumbent outranks the use-0 newcomer, which is evicted at birth
    out = dttm_update(bank, unit([1, 1]), 0.9, 0.2, 0, THR, frame=9)
    assert [t.born_frame for t in out.templates] == [0, 2]


def test_moving_average_endpoints():
    t = Template(embedding=np.array([1.0, 0.0]), born_frame=0)
    assert np.array_equal(moving_average_update(t, np.array([0.0, 1.0]), 0.0).embedding, t.embedding)
    assert np.array_equal(
        moving_average_update(t, np.array([0.0, 1.0]), 1.0).embedding, np.array([0.0, 1.0])
    )


def test_moving_average_blend():
    t = Template(embedding=np.array([1.0, 0.0]), born_frame=0)
    out = moving_average_update(t, np.array([0.0, 1.0]), 0.3)
    assert np.allclose(out.embedding, [0.7, 0.3], atol=0)


def test_moving_average_closed_form():
    rng = np.random.default_rng(5)
    e0 = rng.standard_normal(6)
    obs = rng.standard_normal(6)
    t = Template(embedding=e0.copy(), born_frame=0)
    mnt = 0.3
    for _ in range(50):
        t = moving_average_update(t, obs, mnt)
    decay = (1 - mnt) ** 50
    expected = decay * e0 + (1 - decay) * obs
    assert np.max(np.abs(t.embedding - expected)) < 1e-9


def test_thresholds_validation():
    with pytest.raises(ValueError):
        MatchingThresholds(sigma_det=1.5)
    with pytest.raises(ValueError):
        MatchingThresholds(min_match_weight=2.5)
    with pytest.raises(ValueError):
        MatchingThresholds(momentum=-0.1)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.integers(5, 60))
def test_capacity_bound_and_lfu_property(capacity, seed, steps):
    rng = np.random.default_rng(seed)
    bank = init_bank(unit(rng.standard_normal(4)), capacity)
    for frame in range(1, steps + 1):
        e = unit(rng.standard_normal(4))
        conf = float(rng.uniform(0, 1))
        sim, idx = appearance_weight(bank, e)
        # candidate pool at eviction time: use counts after the attaining
        # increment plus the would-be new template (born this frame, use 0)
        pool = {t.born_frame: t.use_count for t in bank.templates}
        pool[bank.templates[idx].born_frame] += 1
        if conf > THR.sigma_conf and sim < THR.sigma_app:
            pool[frame] = pool.get(frame, 0)
        bank = dttm_update(bank, e, conf, sim, idx, THR, frame)
        assert 1 <= len(bank.templates) <= capacity
        after = {t.born_frame for t in bank.templates}
        evicted = set(pool) - after
        if evicted:
            assert len(evicted) == 1
            evictee = evicted.pop()
            assert pool[evictee] <= min(pool[b] for b in after)


def test_noop_gate_keeps_embeddings():
    rng = np.random.default_rng(8)
    bank = init_bank(unit([1, 0, 0]), 4)
    frozen = [t.embedding.copy() for t in bank.templates]
    for frame in range(1, 30):
        e = unit(rng.standard_normal(3))
        bank = dttm_update(bank, e, 0.9, 0.75, 0, THR, frame)  # app_sim >= sigma_app
    assert len(bank.templates) == 1
    assert np.array_equal(bank.templates[0].embedding, frozen[0])
    assert bank.templates[0].use_count == 29
