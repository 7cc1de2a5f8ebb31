"""Run orchestration: the operations behind every service endpoint and CLI
subcommand. Each run writes versioned CSV artifacts plus the resolved
configuration echo into its output directory and returns a summary dict that
the service serialises as-is.
"""

from __future__ import annotations

import itertools
import traceback
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import stability
from .adviser import AdviserGains
from .config import STRATEGIES, STRATEGY_GAINS, RunConfig, to_ini
from .core import extended_observation_dim
from .nn import load_checkpoint, save_checkpoint
from .rl import SacAgent, SacConfig, evaluate, train

SCHEMA_PREFIX = "# schema: aac/"

STRATEGY_LABELS = {
    "none": "No adviser",
    "eval_adviser": "Evaluate adviser",
    "train_adviser": "Train adviser",
    "train_eval_adviser": "Train + evaluate adviser",
}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float) or isinstance(value, np.floating):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, schema: str, header: Sequence[str],
              rows: Sequence[Sequence], extra_comments: Sequence[str] = ()) -> None:
    lines = [f"{SCHEMA_PREFIX}{schema} v1"]
    lines.extend(f"# {c}" for c in extra_comments)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: Path, expect_schema: str):
    """Parse one of our CSVs, rejecting schema drift."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(SCHEMA_PREFIX):
        raise ValueError(f"{path}: missing schema header")
    schema = lines[0][len(SCHEMA_PREFIX):]
    if schema != f"{expect_schema} v1":
        raise ValueError(f"{path}: schema {schema!r}, expected '{expect_schema} v1'")
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    header = body[0].split(",") if body else []
    rows = [ln.split(",") for ln in body[1:]]
    return header, rows


# -- training runs ---------------------------------------------------------------

def build_agent(cfg: RunConfig, env) -> SacAgent:
    ext_dim = extended_observation_dim(env.obs_dim, env.goal_dim)
    return SacAgent(ext_dim, env.action_low, env.action_high, cfg.sac,
                    seed=cfg.seed + 1000)


def save_agent(path: Path, agent: SacAgent, cfg: RunConfig) -> None:
    meta = {
        "env_name": cfg.env_name,
        "obs_dim": agent.obs_dim,
        "action_dim": agent.action_dim,
        "hidden_dim": agent.config.hidden_dim,
        "hidden_layers": agent.config.hidden_layers,
        "activation": agent.config.activation,
    }
    save_checkpoint(path, agent.state_arrays(), meta)


def load_agent(path: Path) -> SacAgent:
    arrays, meta = load_checkpoint(path)
    sac = SacConfig(hidden_dim=int(meta["hidden_dim"]),
                    hidden_layers=int(meta["hidden_layers"]),
                    activation=meta["activation"])
    agent = SacAgent(int(meta["obs_dim"]), arrays["action_low"],
                     arrays["action_high"], sac, seed=0)
    agent.load_state_arrays(arrays)
    return agent


def _metrics_dict(metrics) -> dict:
    return {
        "episodes": metrics.episodes,
        "success_rate": metrics.success_rate,
        "final_goal_error_median": metrics.final_goal_error_median,
        "tail_goal_error_median": metrics.tail_goal_error_median,
        "mean_return": metrics.mean_return,
        "empty": metrics.empty,
    }


def _write_eval_artifacts(out: Path, metrics, env, prefix: str = "eval") -> List[str]:
    artifacts = []
    m_path = out / f"{prefix}_metrics.csv"
    write_csv(m_path, "eval_metrics",
              ["episodes", "success_rate", "final_goal_error_median",
               "tail_goal_error_median", "mean_return"],
              [[metrics.episodes, metrics.success_rate, metrics.final_goal_error_median,
                metrics.tail_goal_error_median, metrics.mean_return]])
    artifacts.append(str(m_path))
    e_path = out / f"{prefix}_episodes.csv"
    write_csv(e_path, "eval_episodes",
              ["episode", "steps", "return", "final_goal_error", "tail_goal_error",
               "success"],
              [[p["episode"], p["steps"], p["return"], p["final_goal_error"],
                p["tail_goal_error"], p["success"]] for p in metrics.per_episode])
    artifacts.append(str(e_path))
    if metrics.trajectory_rows:
        t_path = out / f"{prefix}_trajectories.csv"
        header = (["episode", "t"]
                  + [f"s_{i}" for i in range(env.obs_dim)]
                  + [f"a_{i}" for i in range(env.action_dim)]
                  + [f"g_a_{i}" for i in range(env.goal_dim)]
                  + [f"g_d_{i}" for i in range(env.goal_dim)]
                  + ["reward", "terminated", "truncated"])
        write_csv(t_path, "trajectories", header, metrics.trajectory_rows)
        artifacts.append(str(t_path))
    return artifacts


def run_train(cfg: RunConfig) -> dict:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []

    resolved = out / "resolved_config.ini"
    resolved.write_text(to_ini(cfg))
    artifacts.append(str(resolved))

    env = cfg.make_env()
    agent = build_agent(cfg, env)
    rows = train(agent, env, cfg.train_gains_or_none(), cfg.epochs,
                 cfg.episodes_per_epoch, seed=cfg.seed,
                 integral_clamp=cfg.integral_clamp)

    log_path = out / "training_log.csv"
    write_csv(log_path, "training_log",
              ["epoch", "mean_return", "median_final_goal_error", "success_rate",
               "alpha", "critic_loss", "policy_loss", "steps", "updates"],
              [[r.epoch, r.mean_return, r.median_final_goal_error, r.success_rate,
                r.alpha, r.critic_loss, r.policy_loss, r.steps, r.updates]
               for r in rows])
    artifacts.append(str(log_path))

    eval_env = cfg.make_env()
    metrics = evaluate(agent, eval_env, cfg.eval_gains_or_none(), cfg.eval_episodes,
                       seed=cfg.seed + 2000, integral_clamp=cfg.integral_clamp)
    artifacts.extend(_write_eval_artifacts(out, metrics, eval_env))

    ckpt = out / "checkpoint.bin"
    save_agent(ckpt, agent, cfg)
    artifacts.append(str(ckpt))

    return {
        "out_dir": str(out),
        "artifacts": artifacts,
        "resolved_config": to_ini(cfg),
        "train_log": [{"epoch": r.epoch, "mean_return": r.mean_return,
                       "median_final_goal_error": r.median_final_goal_error,
                       "success_rate": r.success_rate, "alpha": r.alpha}
                      for r in rows],
        "eval": _metrics_dict(metrics),
    }


def run_eval(cfg: RunConfig, checkpoint: str, dump_trajectories: bool = True) -> dict:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    agent = load_agent(Path(checkpoint))
    env = cfg.make_env()
    expected = extended_observation_dim(env.obs_dim, env.goal_dim)
    if agent.obs_dim != expected:
        raise ValueError(f"checkpoint expects observation width {agent.obs_dim}, "
                         f"environment {cfg.env_name} provides {expected}")
    metrics = evaluate(agent, env, cfg.eval_gains_or_none(), cfg.eval_episodes,
                       seed=cfg.seed + 2000, integral_clamp=cfg.integral_clamp,
                       record_trajectories=dump_trajectories)
    resolved = out / "resolved_config.ini"
    resolved.write_text(to_ini(cfg))
    artifacts = [str(resolved)] + _write_eval_artifacts(out, metrics, env)
    return {"out_dir": str(out), "artifacts": artifacts,
            "resolved_config": to_ini(cfg), "eval": _metrics_dict(metrics)}


def run_matrix(cfg: RunConfig) -> dict:
    """All eight (algorithm x strategy) cells across the configured seeds.

    Failed cells are recorded and skipped; the summary aggregates whatever
    completed.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cell_rows = []
    results: Dict[tuple, List[dict]] = {}

    for algo, strategy in itertools.product(("sac", "sac_her"), STRATEGIES):
        for k in range(cfg.matrix_seeds):
            seed = cfg.seed + k
            cell_cfg = replace(
                cfg,
                strategy=strategy,
                seed=seed,
                sac=replace(cfg.sac, her=(algo == "sac_her")),
                out_dir=str(out / "cells" / algo / strategy / f"seed{seed}"),
            )
            # The matrix compares the strategy presets, so per-run gain
            # overrides from the base config are not carried into cells.
            preset_train, preset_eval = STRATEGY_GAINS[strategy]
            cell_cfg = replace(cell_cfg,
                               train_gains=AdviserGains(*preset_train),
                               eval_gains=AdviserGains(*preset_eval))
            try:
                res = run_train(cell_cfg)
                ev = res["eval"]
                row = {"status": "ok", **ev}
            except Exception as exc:  # keep the sweep alive; mark the cell
                row = {"status": f"failed: {type(exc).__name__}", "episodes": 0,
                       "success_rate": float("nan"),
                       "final_goal_error_median": float("nan"),
                       "tail_goal_error_median": float("nan"),
                       "mean_return": float("nan"), "empty": True}
                (out / "cells").mkdir(exist_ok=True)
                (out / "cells" / f"failure_{algo}_{strategy}_seed{seed}.txt").write_text(
                    traceback.format_exc())
            cell_rows.append([algo, strategy, STRATEGY_LABELS[strategy], seed,
                              row["status"], row["final_goal_error_median"],
                              row["tail_goal_error_median"], row["mean_return"],
                              row["success_rate"]])
            results.setdefault((algo, strategy), []).append(row)

    cells_path = out / "matrix_cells.csv"
    write_csv(cells_path, "matrix_cells",
              ["algo", "strategy", "label", "seed", "status", "final_goal_error",
               "tail_goal_error", "mean_return", "success_rate"], cell_rows)

    summary_rows = []
    for (algo, strategy), rows in results.items():
        ok = [r for r in rows if r["status"] == "ok"]
        def med(key):
            return float(np.median([r[key] for r in ok])) if ok else float("nan")
        summary_rows.append([
            algo, strategy, STRATEGY_LABELS[strategy], len(ok),
            med("final_goal_error_median"), med("tail_goal_error_median"),
            float(np.mean([r["mean_return"] for r in ok])) if ok else float("nan"),
            med("success_rate"),
        ])
    summary_path = out / "matrix_summary.csv"
    write_csv(summary_path, "matrix_summary",
              ["algo", "strategy", "label", "seeds_ok", "median_final_goal_error",
               "median_tail_goal_error", "mean_return", "median_success_rate"],
              summary_rows)

    resolved = out / "resolved_config.ini"
    resolved.write_text(to_ini(cfg))
    return {"out_dir": str(out),
            "artifacts": [str(resolved), str(cells_path), str(summary_path)],
            "cells": [dict(zip(["algo", "strategy", "label", "seed", "status",
                                "final_goal_error", "tail_goal_error", "mean_return",
                                "success_rate"], row)) for row in cell_rows],
            "summary": [dict(zip(["algo", "strategy", "label", "seeds_ok",
                                  "median_final_goal_error", "median_tail_goal_error",
                                  "mean_return", "median_success_rate"], row))
                        for row in summary_rows]}


# -- analysis runs ---------------------------------------------------------------

def run_stability_grid(kp_eff: Sequence[float], kd_eff: Sequence[float],
                       ki: Sequence[float], out_dir: Optional[str] = None,
                       traces: Optional[Sequence[dict]] = None,
                       trace_stride: int = 10) -> dict:
    grid_rows = []
    for kp, kd, k_i in itertools.product(kp_eff, kd_eff, ki):
        verdict = stability.routh_classify(kp, kd, k_i)
        roots = stability.characteristic_roots(kp, kd, k_i)
        grid_rows.append([kp, kd, k_i, verdict.classification,
                          float(np.max(roots.real))])

    artifacts = []
    trace_results = []
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        grid_path = out / "stability_grid.csv"
        write_csv(grid_path, "stability_grid",
                  ["kp_eff", "kd_eff", "ki", "classification", "max_root_real"],
                  grid_rows)
        artifacts.append(str(grid_path))

    for case in traces or []:
        traj = stability.simulate_effective_dynamics(
            case["kp_eff"], case["kd_eff"], case["ki"],
            disturbance=case.get("disturbance", 0.0),
            dt=case.get("dt", 1e-3), horizon=case.get("horizon", 60.0),
            e0=case.get("e0", 1.0))
        verdict = stability.routh_classify(case["kp_eff"], case["kd_eff"], case["ki"])
        trace_results.append({"name": case["name"],
                              "classification": verdict.classification,
                              "diverged": traj.diverged,
                              "final_error": float(traj.error[-1])})
        if out is not None:
            t_path = out / f"trace_{case['name']}.csv"
            idx = np.arange(0, traj.t.size, max(1, int(trace_stride)))
            write_csv(t_path, "error_trace",
                      ["t", "integral", "error", "error_rate"],
                      [[traj.t[i], traj.integral[i], traj.error[i], traj.error_rate[i]]
                       for i in idx],
                      extra_comments=[f"case: {case['name']}",
                                      f"diverged: {int(traj.diverged)}"])
            artifacts.append(str(t_path))

    return {"rows": [{"kp_eff": r[0], "kd_eff": r[1], "ki": r[2],
                      "classification": r[3], "max_root_real": r[4]}
                     for r in grid_rows],
            "traces": trace_results, "artifacts": artifacts}


def run_contraction(b_matrix, e0, iterations: int,
                    out_dir: Optional[str] = None) -> dict:
    report = stability.contraction_analysis(b_matrix, e0, iterations)
    artifacts = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "contraction.csv"
        write_csv(path, "contraction",
                  ["iteration", "error_norm", "spectral_radius"],
                  [[i, norm, report.spectral_radius]
                   for i, norm in enumerate(report.error_norm_sequence)])
        artifacts.append(str(path))
    return {"spectral_radius": report.spectral_radius,
            "error_norms": list(report.error_norm_sequence),
            "artifacts": artifacts}


def run_step_response(kp: float, ki: float, kd: float, a0: float = 0.0,
                      a1: float = 0.0, disturbance: float = 0.0,
                      horizon: float = 50.0, dt: float = 1e-3, e0: float = 1.0,
                      out_dir: Optional[str] = None, stride: int = 10) -> dict:
    model = stability.ErrorDynamicsModel(a0=a0, a1=a1,
                                         gains=AdviserGains(kp=kp, ki=ki, kd=kd),
                                         disturbance=disturbance, dt=dt,
                                         horizon=horizon, e0=e0)
    traj = stability.simulate_error_dynamics(model)
    verdict = stability.routh_classify(model.kp_eff, model.kd_eff, ki)
    artifacts = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "step_response.csv"
        idx = np.arange(0, traj.t.size, max(1, int(stride)))
        write_csv(path, "error_trace",
                  ["t", "integral", "error", "error_rate"],
                  [[traj.t[i], traj.integral[i], traj.error[i], traj.error_rate[i]]
                   for i in idx],
                  extra_comments=[f"diverged: {int(traj.diverged)}"])
        artifacts.append(str(path))
    return {"classification": verdict.classification,
            "kp_eff": model.kp_eff, "kd_eff": model.kd_eff, "ki": ki,
            "diverged": traj.diverged, "final_error": float(traj.error[-1]),
            "artifacts": artifacts}


DEFAULT_TRACES = [
    {"name": "asymptotic", "kp_eff": 2.0, "kd_eff": 2.0, "ki": 1.0,
     "disturbance": 0.5, "horizon": 60.0},
    {"name": "marginal", "kp_eff": 1.0, "kd_eff": 1.0, "ki": 1.0,
     "disturbance": 0.5, "horizon": 60.0},
    {"name": "unstable", "kp_eff": 1.0, "kd_eff": -1.0, "ki": 1.0,
     "disturbance": 0.5, "horizon": 60.0},
]
