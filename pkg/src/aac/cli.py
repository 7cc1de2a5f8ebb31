"""Command-line client for the workbench service.

Every subcommand builds a request and sends it through HTTP. Without
``--server`` the service app is mounted in-process, so commands run locally
with no daemon while still exercising the exact request path a remote client
would; with ``--server http://host:port`` the same requests go over the wire
and artifacts land on the server's filesystem.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, Optional

import numpy as np


def make_client(server: Optional[str]):
    if server:
        import httpx
        return httpx.Client(base_url=server,
                            timeout=httpx.Timeout(30.0, read=None, write=None))
    from fastapi.testclient import TestClient

    from .service import app
    return TestClient(app)


def _config_overrides(args) -> Dict[str, Dict[str, str]]:
    sections: Dict[str, Dict[str, str]] = {"run": {}, "env": {}, "adviser": {}, "sac": {}}
    if getattr(args, "env", None):
        sections["env"]["name"] = args.env
    if getattr(args, "strategy", None):
        sections["run"]["strategy"] = args.strategy
    if getattr(args, "seed", None) is not None:
        sections["run"]["seed"] = str(args.seed)
    if getattr(args, "epochs", None) is not None:
        sections["run"]["epochs"] = str(args.epochs)
    if getattr(args, "episodes_per_epoch", None) is not None:
        sections["run"]["episodes_per_epoch"] = str(args.episodes_per_epoch)
    if getattr(args, "eval_episodes", None) is not None:
        sections["run"]["eval_episodes"] = str(args.eval_episodes)
    if getattr(args, "seeds", None) is not None:
        sections["run"]["matrix_seeds"] = str(args.seeds)
    if getattr(args, "out", None):
        sections["run"]["out"] = args.out
    if getattr(args, "paper_scale", False):
        sections["run"]["paper_scale"] = "true"
    if getattr(args, "her", None) is not None:
        sections["sac"]["her"] = "true" if args.her else "false"
    return {k: v for k, v in sections.items() if v}


def _config_text(args) -> Optional[str]:
    if getattr(args, "config", None):
        return Path(args.config).read_text()
    return None


def _post(client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code == 400:
        detail = response.json().get("detail", response.text)
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(2)
    if response.status_code != 200:
        print(f"error: {path} returned {response.status_code}: {response.text}",
              file=sys.stderr)
        raise SystemExit(1)
    return response.json()


def _print_eval(metrics: dict) -> None:
    if metrics.get("empty"):
        print("eval: no episodes requested (empty metrics)")
        return
    print("eval: episodes={episodes} success_rate={success_rate:.3f} "
          "final_goal_error_median={final_goal_error_median:.6g} "
          "tail_goal_error_median={tail_goal_error_median:.6g} "
          "mean_return={mean_return:.6g}".format(**metrics))


def _print_artifacts(result: dict) -> None:
    for path in result.get("artifacts", []):
        print(f"wrote {path}")


def parse_axis(text: str) -> list:
    """Either 'lo:hi:count' (inclusive linspace) or a comma list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [float(v) for v in text.split(",")]


def parse_matrix(text: str) -> list:
    """Rows separated by ';', entries by ',': '1,0;0,1'."""
    return [[float(v) for v in row.split(",")] for row in text.split(";")]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file")
    p.add_argument("--env", help="environment name")
    p.add_argument("--strategy", help="none | eval_adviser | train_adviser | train_eval_adviser")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--episodes-per-epoch", type=int, dest="episodes_per_epoch")
    p.add_argument("--eval-episodes", type=int, dest="eval_episodes")
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--paper-scale", action="store_true", dest="paper_scale",
                   help="full-size settings instead of desk-scale defaults")
    p.add_argument("--her", action=argparse.BooleanOptionalAction, default=None,
                   help="hindsight relabeling on/off")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aac",
                                     description="adviser-actor-critic workbench client")
    parser.add_argument("--server", help="remote service URL (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train then evaluate one configuration")
    _add_run_flags(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_run_flags(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--no-trajectories", action="store_true")

    p_matrix = sub.add_parser("matrix", help="run the 4x2 strategy/algorithm matrix")
    _add_run_flags(p_matrix)
    p_matrix.add_argument("--seeds", type=int, help="seeds per cell")

    p_stab = sub.add_parser("stability", help="Routh classification over a gain grid")
    p_stab.add_argument("--kp-eff", type=parse_axis, default=parse_axis("-1:5:7"))
    p_stab.add_argument("--kd-eff", type=parse_axis, default=parse_axis("-1:5:7"))
    p_stab.add_argument("--ki", type=parse_axis, default=parse_axis("-1:5:7"))
    p_stab.add_argument("--traces", choices=["default", "none"], default="default")
    p_stab.add_argument("--trace-stride", type=int, default=10)
    p_stab.add_argument("--out", default="runs/stability")

    p_con = sub.add_parser("contraction", help="iterated steady-state correction")
    group = p_con.add_mutually_exclusive_group(required=True)
    group.add_argument("--matrix", type=parse_matrix, help="inline rows '1,0;0,1'")
    group.add_argument("--matrix-file", help="CSV file of matrix rows")
    p_con.add_argument("--e0", type=parse_axis, required=True)
    p_con.add_argument("--iterations", type=int, default=20)
    p_con.add_argument("--out", default="runs/contraction")

    p_step = sub.add_parser("step-response", help="time response of the error loop")
    p_step.add_argument("--kp", type=float, required=True)
    p_step.add_argument("--ki", type=float, required=True)
    p_step.add_argument("--kd", type=float, required=True)
    p_step.add_argument("--a0", type=float, default=0.0)
    p_step.add_argument("--a1", type=float, default=0.0)
    p_step.add_argument("--disturbance", type=float, default=0.0)
    p_step.add_argument("--horizon", type=float, default=50.0)
    p_step.add_argument("--dt", type=float, default=1e-3)
    p_step.add_argument("--e0", type=float, default=1.0)
    p_step.add_argument("--stride", type=int, default=10)
    p_step.add_argument("--out", default="runs/step_response")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    client = make_client(args.server)
    try:
        if args.command == "train":
            result = _post(client, "/train", {
                "config_text": _config_text(args),
                "overrides": _config_overrides(args),
            })
            _print_artifacts(result)
            _print_eval(result["eval"])
        elif args.command == "eval":
            result = _post(client, "/evaluate", {
                "checkpoint": args.checkpoint,
                "config_text": _config_text(args),
                "overrides": _config_overrides(args),
                "dump_trajectories": not args.no_trajectories,
            })
            _print_artifacts(result)
            _print_eval(result["eval"])
        elif args.command == "matrix":
            result = _post(client, "/matrix", {
                "config_text": _config_text(args),
                "overrides": _config_overrides(args),
            })
            _print_artifacts(result)
            for row in result["summary"]:
                print("cell {algo}/{strategy}: median_final_goal_error="
                      "{median_final_goal_error:.6g} mean_return={mean_return:.6g}"
                      .format(**row))
        elif args.command == "stability":
            traces = []
            if args.traces == "default":
                from .runs import DEFAULT_TRACES
                traces = DEFAULT_TRACES
            result = _post(client, "/stability/grid", {
                "kp_eff": args.kp_eff, "kd_eff": args.kd_eff, "ki": args.ki,
                "traces": traces, "out_dir": args.out,
                "trace_stride": args.trace_stride,
            })
            _print_artifacts(result)
            counts: Dict[str, int] = {}
            for row in result["rows"]:
                counts[row["classification"]] = counts.get(row["classification"], 0) + 1
            print("grid:", json.dumps(counts, sort_keys=True))
        elif args.command == "contraction":
            matrix = args.matrix
            if matrix is None:
                rows = Path(args.matrix_file).read_text().strip().splitlines()
                matrix = [[float(v) for v in row.split(",")]
                          for row in rows if not row.startswith("#")]
            result = _post(client, "/contraction", {
                "b_matrix": matrix, "e0": args.e0,
                "iterations": args.iterations, "out_dir": args.out,
            })
            _print_artifacts(result)
            print(f"spectral_radius={result['spectral_radius']:.6g} "
                  f"norms={['%.4g' % n for n in result['error_norms'][:6]]}...")
        elif args.command == "step-response":
            result = _post(client, "/step-response", {
                "kp": args.kp, "ki": args.ki, "kd": args.kd, "a0": args.a0,
                "a1": args.a1, "disturbance": args.disturbance,
                "horizon": args.horizon, "dt": args.dt, "e0": args.e0,
                "out_dir": args.out, "stride": args.stride,
            })
            _print_artifacts(result)
            print(f"classification={result['classification']} "
                  f"diverged={result['diverged']} final_error={result['final_error']:.6g}")
    finally:
        client.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
