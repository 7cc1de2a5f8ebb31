"""Request and response models for the HTTP service.

Config-bearing requests mirror the INI sections as string maps so that one
resolution path (``aac.config.resolve``) serves files, environment variables,
HTTP clients, and CLI flags identically.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class ConfigSections(BaseModel):
    """Overrides keyed exactly like the INI file sections."""

    run: Dict[str, str] = Field(default_factory=dict)
    env: Dict[str, str] = Field(default_factory=dict)
    adviser: Dict[str, str] = Field(default_factory=dict)
    sac: Dict[str, str] = Field(default_factory=dict)

    def as_mapping(self) -> Dict[str, Dict[str, str]]:
        return {"run": self.run, "env": self.env, "adviser": self.adviser,
                "sac": self.sac}


class TrainRequest(BaseModel):
    config_text: Optional[str] = None
    overrides: ConfigSections = Field(default_factory=ConfigSections)


class EvalRequest(BaseModel):
    checkpoint: str
    config_text: Optional[str] = None
    overrides: ConfigSections = Field(default_factory=ConfigSections)
    dump_trajectories: bool = True


class MatrixRequest(BaseModel):
    config_text: Optional[str] = None
    overrides: ConfigSections = Field(default_factory=ConfigSections)


class EvalMetricsModel(BaseModel):
    episodes: int
    success_rate: float
    final_goal_error_median: float
    tail_goal_error_median: float
    mean_return: float
    empty: bool


class TrainResponse(BaseModel):
    out_dir: str
    artifacts: List[str]
    resolved_config: str
    train_log: List[dict]
    eval: EvalMetricsModel


class EvalResponse(BaseModel):
    out_dir: str
    artifacts: List[str]
    resolved_config: str
    eval: EvalMetricsModel


class MatrixResponse(BaseModel):
    out_dir: str
    artifacts: List[str]
    cells: List[dict]
    summary: List[dict]


class TraceCase(BaseModel):
    name: str
    kp_eff: float
    kd_eff: float
    ki: float
    disturbance: float = 0.0
    horizon: float = 60.0
    dt: float = 1e-3
    e0: float = 1.0


class StabilityGridRequest(BaseModel):
    kp_eff: List[float]
    kd_eff: List[float]
    ki: List[float]
    traces: List[TraceCase] = Field(default_factory=list)
    out_dir: Optional[str] = None
    trace_stride: int = 10


class StabilityGridResponse(BaseModel):
    rows: List[dict]
    traces: List[dict]
    artifacts: List[str]


class ContractionRequest(BaseModel):
    b_matrix: List[List[float]]
    e0: List[float]
    iterations: int = 20
    out_dir: Optional[str] = None


class ContractionResponse(BaseModel):
    spectral_radius: float
    error_norms: List[float]
    artifacts: List[str]


class StepResponseRequest(BaseModel):
    kp: float
    ki: float
    kd: float
    a0: float = 0.0
    a1: float = 0.0
    disturbance: float = 0.0
    horizon: float = 50.0
    dt: float = 1e-3
    e0: float = 1.0
    out_dir: Optional[str] = None
    stride: int = 10


class StepResponseResponse(BaseModel):
    classification: str
    kp_eff: float
    kd_eff: float
    ki: float
    diverged: bool
    final_error: float
    artifacts: List[str]
