"""FastAPI service wrapping the workbench.

Endpoints run synchronously and write their CSV artifacts into the request's
output directory on the server's filesystem; responses carry the summary
numbers plus the artifact paths. The CLI talks to this app either over HTTP
or through an in-process ASGI transport (its default), so local runs go
through the very same request path a remote client would use.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import runs
from ..config import ConfigError, resolve
from . import models

app = FastAPI(title="aac workbench",
              description="PID-advised actor-critic training and stability analysis")


def _resolve_or_400(config_text, overrides: models.ConfigSections):
    try:
        return resolve(file_text=config_text, overrides=overrides.as_mapping())
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/train", response_model=models.TrainResponse)
def train_endpoint(req: models.TrainRequest) -> dict:
    cfg = _resolve_or_400(req.config_text, req.overrides)
    return runs.run_train(cfg)


@app.post("/evaluate", response_model=models.EvalResponse)
def evaluate_endpoint(req: models.EvalRequest) -> dict:
    cfg = _resolve_or_400(req.config_text, req.overrides)
    try:
        return runs.run_eval(cfg, req.checkpoint, dump_trajectories=req.dump_trajectories)
    except (FileNotFoundError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


@app.post("/matrix", response_model=models.MatrixResponse)
def matrix_endpoint(req: models.MatrixRequest) -> dict:
    cfg = _resolve_or_400(req.config_text, req.overrides)
    return runs.run_matrix(cfg)


@app.post("/stability/grid", response_model=models.StabilityGridResponse)
def stability_endpoint(req: models.StabilityGridRequest) -> dict:
    return runs.run_stability_grid(
        req.kp_eff, req.kd_eff, req.ki, out_dir=req.out_dir,
        traces=[t.model_dump() for t in req.traces], trace_stride=req.trace_stride)


@app.post("/contraction", response_model=models.ContractionResponse)
def contraction_endpoint(req: models.ContractionRequest) -> dict:
    try:
        return runs.run_contraction(req.b_matrix, req.e0, req.iterations,
                                    out_dir=req.out_dir)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


@app.post("/step-response", response_model=models.StepResponseResponse)
def step_response_endpoint(req: models.StepResponseRequest) -> dict:
    try:
        return runs.run_step_response(
            kp=req.kp, ki=req.ki, kd=req.kd, a0=req.a0, a1=req.a1,
            disturbance=req.disturbance, horizon=req.horizon, dt=req.dt,
            e0=req.e0, out_dir=req.out_dir, stride=req.stride)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
