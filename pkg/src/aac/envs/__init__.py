"""Goal-conditioned simulators behind one contract."""

from .base import EnvConfig, EnvStepResult, GoalEnv
from .line1d import Line1DEnv
from .planar_arm import PlanarArmEnv
from .point_mass import PointMassEnv
from .quad_vel import QuadVelEnv

ENV_REGISTRY = {
    PointMassEnv.name: PointMassEnv,
    PlanarArmEnv.name: PlanarArmEnv,
    QuadVelEnv.name: QuadVelEnv,
    Line1DEnv.name: Line1DEnv,
}


def make_env(config: EnvConfig) -> GoalEnv:
    try:
        cls = ENV_REGISTRY[config.name]
    except KeyError:
        raise ValueError(f"unknown environment name: {config.name!r}; "
                         f"choose from {sorted(ENV_REGISTRY)}") from None
    return cls(config)


__all__ = [
    "EnvConfig",
    "EnvStepResult",
    "GoalEnv",
    "ENV_REGISTRY",
    "make_env",
    "PointMassEnv",
    "PlanarArmEnv",
    "QuadVelEnv",
    "Line1DEnv",
]
