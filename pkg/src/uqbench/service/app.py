"""FastAPI service wrapping the experiment pipeline and scoring.

Runs live in a workspace directory (env UQBENCH_WORKSPACE, default
./uqbench-runs); a run_id names one run directory. Training and evaluation
are synchronous: desk-scale configs finish in seconds to a few minutes.

Launch with: uvicorn uqbench.service.app:app
"""

from __future__ import annotations

import math
import os
import re
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..checkpoint import load_checkpoint
from ..exceptions import ConfigError, NumericalDivergenceError, UqbenchError
from ..heads import HEAD_LABELS, HEAD_MODEL, HEADS, score_head
from ..jsonio import read_json, write_json_atomic
from ..pipeline import ExperimentConfig, build_datasets, evaluate, load_manifest, train_pipeline, write_datasets
from ..plots import export_plots
from ..rng import RngStream
from . import schemas

_RUN_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def _clean_nan(obj):
    """JSON responses must not carry NaN/inf; map them to None."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean_nan(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean_nan(v) for v in obj]
    return obj


def create_app(workspace: str | Path | None = None) -> FastAPI:
    root = Path(workspace if workspace is not None else os.environ.get("UQBENCH_WORKSPACE", "uqbench-runs"))
    app = FastAPI(title="uqbench", version=__version__)

    def run_dir_for(run_id: str, must_exist: bool = False) -> Path:
        if not _RUN_ID_RE.match(run_id):
            raise HTTPException(status_code=400, detail=f"invalid run_id {run_id!r}")
        run_dir = root / run_id
        if must_exist and not run_dir.exists():
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return run_dir

    def resolve(request: schemas.RunRequest) -> tuple[str, Path, ExperimentConfig]:
        try:
            config = ExperimentConfig.from_dict(request.config.to_config_dict())
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        run_id = request.run_id or f"run-{config.content_hash()}"
        run_dir = run_dir_for(run_id)
        return run_id, run_dir, config

    def config_of(run_dir: Path) -> ExperimentConfig:
        path = run_dir / "config.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"run has no config.json at {path}")
        return ExperimentConfig.from_dict(read_json(path))

    def summaries_payload(summaries) -> dict:
        return {head: _clean_nan(summary.to_dict()) for head, summary in summaries.items()}

    @app.exception_handler(UqbenchError)
    async def _uqbench_error(request, exc: UqbenchError):
        from fastapi.responses import JSONResponse

        status = 400 if isinstance(exc, ConfigError) else 500
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/data/generate", response_model=schemas.GenerateResponse)
    def generate(request: schemas.RunRequest):
        run_id, run_dir, config = resolve(request)
        data = build_datasets(config)
        files = write_datasets(config, data, run_dir)
        return schemas.GenerateResponse(run_id=run_id, run_dir=str(run_dir), files=files)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(request: schemas.RunRequest):
        run_id, run_dir, config = resolve(request)
        try:
            manifest = train_pipeline(config, run_dir)
        except NumericalDivergenceError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return schemas.TrainResponse(run_id=run_id, run_dir=str(run_dir), manifest=manifest)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_run(request: schemas.EvaluateRequest):
        run_dir = run_dir_for(request.run_id, must_exist=True)
        config = config_of(run_dir)
        try:
            summaries = evaluate(config, run_dir, tests=None if request.tests is None else tuple(request.tests))
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return schemas.EvaluateResponse(
            run_id=request.run_id, run_dir=str(run_dir), summaries=summaries_payload(summaries)
        )

    @app.post("/sweep", response_model=schemas.EvaluateResponse)
    def sweep_run(request: schemas.EvaluateRequest):
        request.tests = ["snr-sweep"]
        return evaluate_run(request)

    @app.post("/plots", response_model=schemas.PlotResponse)
    def plots(request: schemas.PlotRequest):
        run_dir = run_dir_for(request.run_id, must_exist=True)
        rels = export_plots(run_dir)
        manifest_path = run_dir / "manifest.json"
        if manifest_path.exists():
            manifest = read_json(manifest_path)
            manifest["artifacts"] = sorted(dict.fromkeys(manifest.get("artifacts", []) + rels))
            write_json_atomic(manifest_path, manifest)
        return schemas.PlotResponse(run_id=request.run_id, plots=rels)

    @app.post("/runs", response_model=schemas.RunResponse)
    def run_all(request: schemas.RunRequest):
        run_id, run_dir, config = resolve(request)
        manifest = train_pipeline(config, run_dir)
        summaries = evaluate(config, run_dir)
        rels = export_plots(run_dir)
        manifest = read_json(run_dir / "manifest.json")
        manifest["artifacts"] = sorted(dict.fromkeys(manifest.get("artifacts", []) + rels))
        write_json_atomic(run_dir / "manifest.json", manifest)
        return schemas.RunResponse(
            run_id=run_id, run_dir=str(run_dir), manifest=manifest, summaries=summaries_payload(summaries)
        )

    @app.get("/runs/{run_id}/manifest", response_model=schemas.ManifestResponse)
    def manifest(run_id: str):
        run_dir = run_dir_for(run_id, must_exist=True)
        try:
            return schemas.ManifestResponse(run_id=run_id, manifest=load_manifest(run_dir))
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/score", response_model=schemas.ScoreResponse)
    def score(request: schemas.ScoreRequest):
        if request.head not in HEADS:
            raise HTTPException(status_code=400, detail=f"unknown head {request.head!r}; valid: {list(HEADS)}")
        run_dir = run_dir_for(request.run_id, must_exist=True)
        manifest = load_manifest(run_dir)
        rel = manifest["checkpoints"].get(HEAD_MODEL[request.head])
        if rel is None:
            raise HTTPException(status_code=404, detail=f"run has no model for head {request.head!r}")
        model, _, _ = load_checkpoint(run_dir / rel)
        features = np.asarray(request.features, dtype=float)
        if features.ndim != 2 or features.shape[1] != model.input_dim:
            raise HTTPException(
                status_code=400,
                detail=f"features must be (n, {model.input_dim}), got {list(features.shape)}",
            )
        scores = score_head(
            model, features, request.head, mc_passes=request.mc_passes, rng=RngStream(request.seed)
        )
        normalizer = float(np.log(model.num_classes))
        records = [
            schemas.UncertaintyRecordModel(
                sample_id=r.sample_id,
                predicted_class=r.predicted_class,
                entropy_nats=r.entropy_nats,
                entropy_norm=r.entropy_nats / normalizer,
                mc_variance=r.mc_variance,
                precision=r.precision,
                u_mass=r.u_mass,
            )
            for r in scores.records(np.arange(features.shape[0]))
        ]
        return schemas.ScoreResponse(
            run_id=request.run_id, head=request.head, label=HEAD_LABELS[request.head], records=records
        )

    return app


app = create_app()
