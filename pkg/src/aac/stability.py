"""Closed-loop analysis of the per-dimension error dynamics.

The advised error channel reduces, dimension by dimension, to a third-order
linear loop: integrator state z = integral of e, error e, and error rate,
driven by the PID feedback and a constant disturbance. Its characteristic
polynomial is

    s^3 + kd_eff * s^2 + kp_eff * s + ki

where the effective gains fold the plant coefficients into the controller
gains (kp_eff = kp - a0, kd_eff = kd - a1). The module provides a cubic
Routh table classifier, companion-matrix roots as an independent oracle,
a fixed-step RK4 simulator of the time-domain loop, and the
iterated-correction contraction analysis governed by the spectral radius
of (I - B).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .adviser import AdviserGains

STABLE = "Stable"
MARGINAL = "Marginal"
UNSTABLE = "Unstable"

ROUTH_ZERO_TOL = 1e-12
DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class StabilityVerdict:
    classification: str
    routh_first_column: List[float]


@dataclass(frozen=True)
class ErrorDynamicsModel:
    """Second-order plant (coefficients a0, a1) under PID feedback.

    State is (integral of e, e, de/dt); the loop integrates
        d(int_e) = e
        d(e)     = edot
        d(edot)  = a0*e + a1*edot + eps + d
    with eps = -(kp*e + ki*int_e + kd*edot) and constant disturbance d.
    """

    a0: float
    a1: float
    gains: AdviserGains
    disturbance: float = 0.0
    dt: float = 1e-3
    horizon: float = 50.0
    e0: float = 1.0

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (self.horizon >= self.dt):
            raise ValueError("horizon must be >= dt")

    @property
    def kp_eff(self) -> float:
        return self.gains.kp - self.a0

    @property
    def kd_eff(self) -> float:
        return self.gains.kd - self.a1


@dataclass(frozen=True)
class ErrorTrajectory:
    t: np.ndarray
    integral: np.ndarray
    error: np.ndarray
    error_rate: np.ndarray
    diverged: bool = False


@dataclass(frozen=True)
class ContractionReport:
    b_matrix: np.ndarray
    spectral_radius: float
    error_norm_sequence: List[float]


def routh_classify(kp_eff: float, kd_eff: float, ki: float,
                   tol: float = ROUTH_ZERO_TOL) -> StabilityVerdict:
    """Classify s^3 + kd_eff s^2 + kp_eff s + ki by its Routh first column.

    First column: 1, kd_eff, (kp_eff*kd_eff - ki)/kd_eff, ki. Stable needs
    all entries strictly positive, which reduces to kd_eff > 0, ki > 0, and
    kp_eff*kd_eff > ki. Any negative entry means Unstable; entries inside the
    +-tol band are treated as boundary zeros (Marginal).
    """
    for v in (kp_eff, kd_eff, ki):
        if not np.isfinite(v):
            raise ValueError("gains must be finite")
    margin = kp_eff * kd_eff - ki
    if abs(kd_eff) > tol:
        third = margin / kd_eff
    else:
        third = 0.0
    column = [1.0, float(kd_eff), float(third), float(ki)]

    entries = [kd_eff, ki] + ([third] if abs(kd_eff) > tol else [])
    if any(v < -tol for v in entries):
        cls = UNSTABLE
    elif abs(kd_eff) <= tol or abs(ki) <= tol or abs(third) <= tol:
        cls = MARGINAL
    else:
        cls = STABLE
    return StabilityVerdict(classification=cls, routh_first_column=column)


def companion_matrix(kp_eff: float, kd_eff: float, ki: float) -> np.ndarray:
    """Companion form of s^3 + kd_eff s^2 + kp_eff s + ki."""
    return np.array([
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [-ki, -kp_eff, -kd_eff],
    ])


def characteristic_roots(kp_eff: float, kd_eff: float, ki: float) -> np.ndarray:
    """The three closed-loop poles, via companion-matrix eigenvalues."""
    return np.linalg.eigvals(companion_matrix(kp_eff, kd_eff, ki))


def characteristic_roots_batch(kp_eff: np.ndarray, kd_eff: np.ndarray,
                               ki: np.ndarray) -> np.ndarray:
    """Vectorised roots for parameter sweeps: returns shape (n, 3)."""
    kp_eff = np.asarray(kp_eff, dtype=np.float64)
    n = kp_eff.shape[0]
    mats = np.zeros((n, 3, 3))
    mats[:, 0, 1] = 1.0
    mats[:, 1, 2] = 1.0
    mats[:, 2, 0] = -np.asarray(ki, dtype=np.float64)
    mats[:, 2, 1] = -kp_eff
    mats[:, 2, 2] = -np.asarray(kd_eff, dtype=np.float64)
    return np.linalg.eigvals(mats)


def simulate_error_dynamics(model: ErrorDynamicsModel) -> ErrorTrajectory:
    """Fixed-step RK4 integration of the closed error loop.

    Integration stops early with ``diverged=True`` once any state magnitude
    exceeds ``DIVERGENCE_LIMIT``.
    """
    return simulate_effective_dynamics(model.kp_eff, model.kd_eff, model.gains.ki,
                                       disturbance=model.disturbance, dt=model.dt,
                                       horizon=model.horizon, e0=model.e0)


def simulate_effective_dynamics(kp_eff: float, kd_eff: float, ki: float,
                                disturbance: float = 0.0, dt: float = 1e-3,
                                horizon: float = 50.0, e0: float = 1.0) -> ErrorTrajectory:
    """RK4 on the effective-gain form; accepts any sign of gain."""
    if not (dt > 0 and horizon >= dt):
        raise ValueError("need dt > 0 and horizon >= dt")
    d = disturbance
    h = dt
    n_steps = int(round(horizon / h))

    ts = np.empty(n_steps + 1)
    zs = np.empty(n_steps + 1)
    es = np.empty(n_steps + 1)
    rs = np.empty(n_steps + 1)

    z, e, r = 0.0, e0, 0.0
    ts[0], zs[0], es[0], rs[0] = 0.0, z, e, r
    diverged = False
    filled = 1

    for i in range(1, n_steps + 1):
        # d(edot) = -ki*z - kp_eff*e - kd_eff*edot + d
        k1z, k1e, k1r = e, r, -ki * z - kp_eff * e - kd_eff * r + d
        z2, e2, r2 = z + 0.5 * h * k1z, e + 0.5 * h * k1e, r + 0.5 * h * k1r
        k2z, k2e, k2r = e2, r2, -ki * z2 - kp_eff * e2 - kd_eff * r2 + d
        z3, e3, r3 = z + 0.5 * h * k2z, e + 0.5 * h * k2e, r + 0.5 * h * k2r
        k3z, k3e, k3r = e3, r3, -ki * z3 - kp_eff * e3 - kd_eff * r3 + d
        z4, e4, r4 = z + h * k3z, e + h * k3e, r + h * k3r
        k4z, k4e, k4r = e4, r4, -ki * z4 - kp_eff * e4 - kd_eff * r4 + d
        z += h * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0
        e += h * (k1e + 2.0 * k2e + 2.0 * k3e + k4e) / 6.0
        r += h * (k1r + 2.0 * k2r + 2.0 * k3r + k4r) / 6.0

        ts[i], zs[i], es[i], rs[i] = i * h, z, e, r
        filled = i + 1
        if max(abs(z), abs(e), abs(r)) > DIVERGENCE_LIMIT:
            diverged = True
            break

    return ErrorTrajectory(t=ts[:filled], integral=zs[:filled], error=es[:filled],
                           error_rate=rs[:filled], diverged=diverged)


def contraction_analysis(b_matrix, e0, iterations: int) -> ContractionReport:
    """Iterate e_{k+1} = (I - B) e_k and record the 2-norm at every step."""
    B = np.asarray(b_matrix, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"B must be square, got shape {B.shape}")
    e = np.asarray(e0, dtype=np.float64)
    if e.shape != (B.shape[0],):
        raise ValueError(f"e0 shape {e.shape} does not match B shape {B.shape}")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")

    M = np.eye(B.shape[0]) - B
    rho = float(np.max(np.abs(np.linalg.eigvals(M)))) if B.shape[0] else 0.0
    norms = [float(np.linalg.norm(e))]
    for _ in range(iterations):
        e = M @ e
        norms.append(float(np.linalg.norm(e)))
    return ContractionReport(b_matrix=B, spectral_radius=rho,
                             error_norm_sequence=norms)


def closed_loop_steady_state(kp_eff: float, kd_eff: float, ki: float, d0: float,
                             horizon: float = 100.0, dt: float = 1e-3,
                             tail_fraction: float = 0.2) -> float:
    """Steady-state error under a constant disturbance, measured in the time
    domain as the mean of the simulated error over the trailing window.

    With integral action (ki > 0) the offset is zero; with ki = 0 the
    integrator state decouples (pole at the origin makes the cubic verdict
    Marginal) and the remaining PD loop settles at d0 / kp_eff, accepted here
    when kd_eff > 0 and kp_eff > 0.
    """
    if abs(ki) > ROUTH_ZERO_TOL:
        verdict = routh_classify(kp_eff, kd_eff, ki)
        if verdict.classification != STABLE:
            raise ValueError(f"steady state undefined for {verdict.classification} gains")
    elif not (kd_eff > ROUTH_ZERO_TOL and kp_eff > ROUTH_ZERO_TOL):
        raise ValueError("with ki = 0, steady state needs kd_eff > 0 and kp_eff > 0")

    traj = simulate_effective_dynamics(kp_eff, kd_eff, ki, disturbance=d0,
                                       dt=dt, horizon=horizon)
    if traj.diverged:
        raise ValueError("trajectory diverged; gains are not stable in practice")
    n_tail = max(1, int(len(traj.error) * tail_fraction))
    return float(np.mean(traj.error[-n_tail:]))
