"""Run configuration: flat INI sections, strategy presets, and the resolved echo.

Precedence, lowest to highest: built-in defaults (including the adviser-gain
presets attached to the chosen strategy), the config file, ``AAC_<SECTION>_<KEY>``
environment variables, then explicit overrides (CLI flags or request fields).
Strategy ``none`` always forces both gain sets back to the identity (1, 0, 0).

Every run writes the fully-resolved configuration it actually used
(``resolved_config.ini``); feeding that file back reproduces the run byte for
byte.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from .adviser import AdviserGains
from .envs import ENV_REGISTRY, EnvConfig, make_env
from .rl import SacConfig

STRATEGIES = ("none", "eval_adviser", "train_adviser", "train_eval_adviser")

# Gain presets per strategy: (train kp, ki, kd), (eval kp, ki, kd).
STRATEGY_GAINS: Dict[str, Tuple[Tuple[float, float, float], Tuple[float, float, float]]] = {
    "none": ((1.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
    "eval_adviser": ((1.0, 0.0, 0.0), (1.3, 0.1, 0.1)),
    "train_adviser": ((1.3, 0.01, 0.01), (1.0, 0.0, 0.0)),
    "train_eval_adviser": ((1.3, 0.01, 0.01), (1.3, 0.1, 0.1)),
}

ENV_VAR_PREFIX = "AAC_"
SECTIONS = ("run", "env", "adviser", "sac")

# Desk-scale defaults keep a full strategy-matrix run on one CPU core
# tractable; --paper-scale restores the full-size settings.
DESK_DEFAULTS = {"epochs": 20, "max_steps": 200, "episodes_per_epoch": 10,
                 "hidden_dim": 64, "matrix_seeds": 5}
PAPER_DEFAULTS = {"epochs": 51, "max_steps": 1000, "episodes_per_epoch": 50,
                  "hidden_dim": 128, "matrix_seeds": 5}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclass
class RunConfig:
    env_name: str = "point_mass"
    dt: Optional[float] = None
    max_steps: int = 200
    physics: Dict[str, float] = field(default_factory=dict)

    strategy: str = "none"
    train_gains: AdviserGains = field(default_factory=AdviserGains.identity)
    eval_gains: AdviserGains = field(default_factory=AdviserGains.identity)
    integral_clamp: Optional[float] = None  # None -> environment default

    sac: SacConfig = field(default_factory=SacConfig)

    seed: int = 0
    epochs: int = 20
    episodes_per_epoch: int = 10
    eval_episodes: int = 20
    matrix_seeds: int = 5
    paper_scale: bool = False
    out_dir: str = "runs/latest"

    def make_env(self):
        return make_env(EnvConfig(name=self.env_name, dt=self.dt,
                                  max_steps=self.max_steps, physics=dict(self.physics)))

    def train_gains_or_none(self) -> Optional[AdviserGains]:
        """Gains for collection, or None for the plain (adviser-free) path.

        The strategy decides which code path runs; an advised strategy keeps
        the adviser in the loop even when its gains are the identity.
        """
        if self.strategy in ("train_adviser", "train_eval_adviser"):
            return self.train_gains
        return None

    def eval_gains_or_none(self) -> Optional[AdviserGains]:
        if self.strategy in ("eval_adviser", "train_eval_adviser"):
            return self.eval_gains
        return None


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key '{key}': expected a boolean, got {raw!r}")


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got {raw!r}") from None


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got {raw!r}") from None


def _env_var_overrides(environ: Mapping[str, str]) -> Dict[str, Dict[str, str]]:
    out: Dict[str, Dict[str, str]] = {}
    for name, value in environ.items():
        if not name.startswith(ENV_VAR_PREFIX):
            continue
        rest = name[len(ENV_VAR_PREFIX):]
        section, _, key = rest.partition("_")
        section = section.lower()
        if section not in SECTIONS or not key:
            raise ConfigError(f"key '{name}': environment override must look like "
                              f"AAC_<SECTION>_<KEY> with section in {SECTIONS}")
        out.setdefault(section, {})[key.lower()] = value
    return out


def _read_ini(text: str) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from None
    sections: Dict[str, Dict[str, str]] = {}
    for section in parser.sections():
        low = section.lower()
        if low not in SECTIONS:
            raise ConfigError(f"key '[{section}]': unknown section; "
                              f"expected one of {SECTIONS}")
        sections[low] = {k.lower(): v for k, v in parser.items(section)}
    return sections


def _merge(base: Dict[str, Dict[str, str]], extra: Mapping[str, Mapping[str, str]]):
    for section, items in extra.items():
        base.setdefault(section, {}).update({k.lower(): str(v) for k, v in items.items()})


RUN_KEYS = {"strategy", "seed", "epochs", "episodes_per_epoch", "eval_episodes",
            "matrix_seeds", "paper_scale", "out"}
ENV_KEYS = {"name", "dt", "max_steps"}
ADVISER_KEYS = {"train_kp", "train_ki", "train_kd", "eval_kp", "eval_ki", "eval_kd",
                "integral_clamp"}
SAC_KEYS = {"gamma", "tau", "batch_size", "lr_actor", "lr_critic", "lr_alpha",
            "alpha_init", "hidden_dim", "hidden_layers", "activation",
            "buffer_capacity", "min_buffer", "her", "her_k"}


def resolve(file_text: Optional[str] = None,
            overrides: Optional[Mapping[str, Mapping[str, str]]] = None,
            environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Layer file, environment-variable, and explicit overrides into a RunConfig."""
    sections: Dict[str, Dict[str, str]] = {}
    if file_text:
        _merge(sections, _read_ini(file_text))
    _merge(sections, _env_var_overrides(environ if environ is not None else os.environ))
    if overrides:
        _merge(sections, overrides)

    run = sections.get("run", {})
    env_sec = sections.get("env", {})
    adviser_sec = sections.get("adviser", {})
    sac_sec = sections.get("sac", {})

    for key in run:
        if key not in RUN_KEYS:
            raise ConfigError(f"key 'run.{key}': unknown option")
    for key in adviser_sec:
        if key not in ADVISER_KEYS:
            raise ConfigError(f"key 'adviser.{key}': unknown option")
    for key in sac_sec:
        if key not in SAC_KEYS:
            raise ConfigError(f"key 'sac.{key}': unknown option")

    env_name = env_sec.get("name", "point_mass")
    if env_name not in ENV_REGISTRY:
        raise ConfigError(f"key 'env.name': unknown environment {env_name!r}; "
                          f"choose from {sorted(ENV_REGISTRY)}")
    physics_keys = set(ENV_REGISTRY[env_name].physics_defaults)
    physics: Dict[str, float] = {}
    for key, raw in env_sec.items():
        if key in ENV_KEYS:
            continue
        if key not in physics_keys:
            raise ConfigError(f"key 'env.{key}': unknown option for {env_name}")
        physics[key] = _parse_float(raw, f"env.{key}")

    paper_scale = _parse_bool(run["paper_scale"], "run.paper_scale") \
        if "paper_scale" in run else False
    scale = PAPER_DEFAULTS if paper_scale else DESK_DEFAULTS

    strategy = run.get("strategy", "none")
    if strategy not in STRATEGIES:
        raise ConfigError(f"key 'run.strategy': unknown strategy {strategy!r}; "
                          f"choose from {STRATEGIES}")
    preset_train, preset_eval = STRATEGY_GAINS[strategy]

    def gain(prefix: str, preset: Tuple[float, float, float]) -> AdviserGains:
        vals = []
        for i, part in enumerate(("kp", "ki", "kd")):
            key = f"{prefix}_{part}"
            vals.append(_parse_float(adviser_sec[key], f"adviser.{key}")
                        if key in adviser_sec else preset[i])
        try:
            return AdviserGains(*vals)
        except ValueError as exc:
            raise ConfigError(f"key 'adviser.{prefix}_*': {exc}") from None

    train_gains = gain("train", preset_train)
    eval_gains = gain("eval", preset_eval)
    if strategy == "none":
        train_gains = AdviserGains.identity()
        eval_gains = AdviserGains.identity()

    sac = SacConfig(
        gamma=_parse_float(sac_sec["gamma"], "sac.gamma") if "gamma" in sac_sec else 0.995,
        tau=_parse_float(sac_sec["tau"], "sac.tau") if "tau" in sac_sec else 0.005,
        batch_size=_parse_int(sac_sec["batch_size"], "sac.batch_size")
        if "batch_size" in sac_sec else 64,
        lr_actor=_parse_float(sac_sec["lr_actor"], "sac.lr_actor")
        if "lr_actor" in sac_sec else 3e-4,
        lr_critic=_parse_float(sac_sec["lr_critic"], "sac.lr_critic")
        if "lr_critic" in sac_sec else 5e-4,
        lr_alpha=_parse_float(sac_sec["lr_alpha"], "sac.lr_alpha")
        if "lr_alpha" in sac_sec else 3e-4,
        alpha_init=_parse_float(sac_sec["alpha_init"], "sac.alpha_init")
        if "alpha_init" in sac_sec else 0.2,
        hidden_dim=_parse_int(sac_sec["hidden_dim"], "sac.hidden_dim")
        if "hidden_dim" in sac_sec else scale["hidden_dim"],
        hidden_layers=_parse_int(sac_sec["hidden_layers"], "sac.hidden_layers")
        if "hidden_layers" in sac_sec else 3,
        activation=sac_sec.get("activation", "selu"),
        buffer_capacity=_parse_int(sac_sec["buffer_capacity"], "sac.buffer_capacity")
        if "buffer_capacity" in sac_sec else 1_000_000,
        min_buffer=_parse_int(sac_sec["min_buffer"], "sac.min_buffer")
        if "min_buffer" in sac_sec else 1000,
        her=_parse_bool(sac_sec["her"], "sac.her") if "her" in sac_sec else False,
        her_k=_parse_int(sac_sec["her_k"], "sac.her_k") if "her_k" in sac_sec else 4,
    )
    if sac.activation not in ("selu", "silu"):
        raise ConfigError(f"key 'sac.activation': unknown activation {sac.activation!r}")

    cfg = RunConfig(
        env_name=env_name,
        dt=_parse_float(env_sec["dt"], "env.dt") if "dt" in env_sec else None,
        max_steps=_parse_int(env_sec["max_steps"], "env.max_steps")
        if "max_steps" in env_sec else scale["max_steps"],
        physics=physics,
        strategy=strategy,
        train_gains=train_gains,
        eval_gains=eval_gains,
        integral_clamp=_parse_float(adviser_sec["integral_clamp"], "adviser.integral_clamp")
        if "integral_clamp" in adviser_sec else None,
        sac=sac,
        seed=_parse_int(run["seed"], "run.seed") if "seed" in run else 0,
        epochs=_parse_int(run["epochs"], "run.epochs") if "epochs" in run else scale["epochs"],
        episodes_per_epoch=_parse_int(run["episodes_per_epoch"], "run.episodes_per_epoch")
        if "episodes_per_epoch" in run else scale["episodes_per_epoch"],
        eval_episodes=_parse_int(run["eval_episodes"], "run.eval_episodes")
        if "eval_episodes" in run else 20,
        matrix_seeds=_parse_int(run["matrix_seeds"], "run.matrix_seeds")
        if "matrix_seeds" in run else scale["matrix_seeds"],
        paper_scale=paper_scale,
        out_dir=run.get("out", "runs/latest"),
    )
    if cfg.epochs < 1:
        raise ConfigError("key 'run.epochs': must be >= 1")
    if cfg.episodes_per_epoch < 1:
        raise ConfigError("key 'run.episodes_per_epoch': must be >= 1")
    return cfg


def to_ini(cfg: RunConfig) -> str:
    """Serialise the fully-resolved configuration; re-resolving reproduces it."""
    parser = configparser.ConfigParser(interpolation=None)
    parser["run"] = {
        "strategy": cfg.strategy,
        "seed": str(cfg.seed),
        "epochs": str(cfg.epochs),
        "episodes_per_epoch": str(cfg.episodes_per_epoch),
        "eval_episodes": str(cfg.eval_episodes),
        "matrix_seeds": str(cfg.matrix_seeds),
        "paper_scale": str(cfg.paper_scale).lower(),
        "out": cfg.out_dir,
    }
    env_items = {"name": cfg.env_name, "max_steps": str(cfg.max_steps)}
    if cfg.dt is not None:
        env_items["dt"] = repr(cfg.dt)
    for key in sorted(cfg.physics):
        env_items[key] = repr(cfg.physics[key])
    parser["env"] = env_items
    adviser_items = {
        "train_kp": repr(cfg.train_gains.kp),
        "train_ki": repr(cfg.train_gains.ki),
        "train_kd": repr(cfg.train_gains.kd),
        "eval_kp": repr(cfg.eval_gains.kp),
        "eval_ki": repr(cfg.eval_gains.ki),
        "eval_kd": repr(cfg.eval_gains.kd),
    }
    if cfg.integral_clamp is not None:
        adviser_items["integral_clamp"] = repr(cfg.integral_clamp)
    parser["adviser"] = adviser_items
    parser["sac"] = {
        "gamma": repr(cfg.sac.gamma),
        "tau": repr(cfg.sac.tau),
        "batch_size": str(cfg.sac.batch_size),
        "lr_actor": repr(cfg.sac.lr_actor),
        "lr_critic": repr(cfg.sac.lr_critic),
        "lr_alpha": repr(cfg.sac.lr_alpha),
        "alpha_init": repr(cfg.sac.alpha_init),
        "hidden_dim": str(cfg.sac.hidden_dim),
        "hidden_layers": str(cfg.sac.hidden_layers),
        "activation": cfg.sac.activation,
        "buffer_capacity": str(cfg.sac.buffer_capacity),
        "min_buffer": str(cfg.sac.min_buffer),
        "her": str(cfg.sac.her).lower(),
        "her_k": str(cfg.sac.her_k),
    }
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()
