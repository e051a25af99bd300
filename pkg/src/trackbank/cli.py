"""Command-line surface.

Every subcommand is a thin client over the HTTP service: by default the
requests run against an in-process application instance, and --server
points the same commands at a remote deployment. File parsing/writing stays
on the client side so local artifacts round-trip byte-identically.
"""

from __future__ import annotations

import json
import sys

import click

from .io import (
    frames_from_wire,
    frames_to_wire,
    parse_detection_stream,
    parse_ground_truth,
    parse_trajectories,
    trajectories_to_wire,
    write_detection_stream,
    write_ground_truth,
    write_trajectories,
)
from .simulator import PRESET_NAMES


class ServiceClient:
    """Uniform POST/GET against either an in-process app or a remote URL."""

    def __init__(self, server: str | None = None):
        if server is None:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)
        else:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=120.0)

    def post(self, path: str, payload: dict) -> dict:
        return self._handle(self._client.post(path, json=payload))

    def get(self, path: str) -> dict:
        return self._handle(self._client.get(path))

    @staticmethod
    def _handle(resp):
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise click.ClickException(f"service error ({resp.status_code}): {detail}")
        if resp.status_code == 204:
            return {}
        return resp.json()


def _write_json(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


server_option = click.option(
    "--server", default=None, metavar="URL", help="Remote service URL (default: in-process)."
)


@click.group()
def main():
    """Online multi-object association: simulate, track, evaluate."""


@main.command()
@click.option("--preset", "preset_name", type=click.Choice(PRESET_NAMES), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dets", required=True, type=click.Path(dir_okay=False))
@click.option("--out-gt", required=True, type=click.Path(dir_okay=False))
@click.option("--out-first-frame", type=click.Path(dir_okay=False), default=None)
@server_option
def simulate(preset_name, config_path, seed, out_dets, out_gt, out_first_frame, server):
    """Generate a deterministic scenario: detections + ground truth."""
    if (preset_name is None) == (config_path is None):
        raise click.UsageError("provide exactly one of --preset or --config")
    payload = {"seed": seed, "include_first_frame": out_first_frame is not None}
    if preset_name is not None:
        payload["preset"] = preset_name
    else:
        with open(config_path, "r", encoding="utf-8") as fh:
            payload["scenario"] = json.load(fh)
    body = ServiceClient(server).post("/simulate", payload)
    write_detection_stream(frames_from_wire(body["stream"]), out_dets)
    _write_json(body["ground_truth"], out_gt)
    if out_first_frame is not None:
        write_detection_stream(frames_from_wire(body["first_frame"]), out_first_frame)
    click.echo(f"wrote {out_dets} and {out_gt}")


@main.command()
@click.option("--dets", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--first-frame-gt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@server_option
def track(dets, first_frame_gt, config_path, out, server):
    """Associate a detection stream against first-frame identities."""
    run_config = {}
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            run_config = json.load(fh)
    try:
        stream = parse_detection_stream(dets)
        first = parse_detection_stream(first_frame_gt)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    body = ServiceClient(server).post(
        "/track",
        {
            "first_frame": frames_to_wire(first),
            "stream": frames_to_wire(stream),
            "config": run_config,
        },
    )
    trajectories, banks = _trajectories_from_body(body["trajectories"])
    write_trajectories(trajectories, banks, out)
    click.echo(f"wrote {out} ({len(trajectories)} targets, {len(body['frames'])} frames)")


def _trajectories_from_body(doc):
    from .io import trajectories_from_wire

    try:
        return trajectories_from_wire(doc)
    except ValueError as exc:
        raise click.ClickException(f"bad service response: {exc}")


@main.command(name="eval")
@click.option("--trajs", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-report", required=True, type=click.Path(dir_okay=False))
@click.option("--boundary-tolerance", type=int, default=1, show_default=True)
@click.option("--iou-floor", type=float, default=0.5, show_default=True)
@server_option
def eval_cmd(trajs, gt, out_report, boundary_tolerance, iou_floor, server):
    """Score trajectories against ground truth (J, F, identity switches)."""
    try:
        trajectories, banks = parse_trajectories(trajs)
        ground_truth = parse_ground_truth(gt)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    from .io import ground_truth_to_wire

    body = ServiceClient(server).post(
        "/evaluate",
        {
            "trajectories": trajectories_to_wire(trajectories, banks),
            "ground_truth": ground_truth_to_wire(ground_truth),
            "boundary_tolerance": boundary_tolerance,
            "iou_floor": iou_floor,
        },
    )
    _write_json(body["report"], out_report)
    r = body["report"]
    click.echo(
        f"J-mean {r['j_mean']:.4f}  F-mean {r['f_mean']:.4f}  "
        f"J&F {r['jf_mean']:.4f}  id_switches {r['id_switches']}"
    )


@main.command(name="tan-check")
@click.option("--seed", type=int, default=0, show_default=True)
@server_option
def tan_check(seed, server):
    """Run the fusion-kernel invariant and gradient suites."""
    body = ServiceClient(server).post("/tan-check", {"seed": seed})
    width = max(len(c["name"]) for c in body["checks"])
    for check in body["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        click.echo(f"{status}  {check['name']:<{width}}  {check['detail']}")
    if not body["passed"]:
        raise click.ClickException("one or more fusion checks failed")
    click.echo("all checks passed")


@main.command()
@click.option("--preset", "preset_name", default="association", show_default=True)
@click.option("--frames", type=int, default=1000, show_default=True)
@click.option("--mode", type=click.Choice(["dttm", "moving_average", "iou_only"]), default="dttm")
@click.option("--seed", type=int, default=0, show_default=True)
@server_option
def bench(preset_name, frames, mode, seed, server):
    """Time the association engine, excluding input generation."""
    body = ServiceClient(server).post(
        "/bench", {"preset": preset_name, "frames": frames, "mode": mode, "seed": seed}
    )
    click.echo(
        f"{body['preset']}: {body['num_targets']} targets, dim {body['embedding_dim']}, "
        f"{body['num_frames']} frames in {body['total_seconds']:.3f} s "
        f"({1000 * body['seconds_per_frame']:.3f} ms/frame)"
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
