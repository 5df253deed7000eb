"""HTTP calibration API: parameter tuning with live per-stage previews."""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .. import __version__
from ..config import Config, dump_config, parse_config
from ..errors import ConfigError, Scan2IfcError
from ..ifc.model import build_model
from ..ifc.step import serialize
from .state import STAGES, CalibrationSession


class SessionInfo(BaseModel):
    path: str
    count: int
    bounds_min: list[float]
    bounds_max: list[float]
    tool_version: str


class ParamUpdate(BaseModel):
    input: dict = Field(default_factory=dict)
    calibration: dict = Field(default_factory=dict)


class ParamError(BaseModel):
    field: str
    message: str


class StageRunResponse(BaseModel):
    stage: str
    cached: bool
    elapsed_ms: float
    artifacts: dict
    previews: dict


def create_app(session: CalibrationSession, frontend_dir=None) -> FastAPI:
    app = FastAPI(title="scan2ifc calibration service", version=__version__)
    app.state.session = session

    @app.get("/api/session", response_model=SessionInfo)
    def get_session():
        lo, hi = session.cloud.bounds
        return SessionInfo(
            path=session.cloud_path,
            count=session.cloud.count,
            bounds_min=[float(v) for v in lo],
            bounds_max=[float(v) for v in hi],
            tool_version=__version__,
        )

    @app.get("/api/params")
    def get_params():
        from dataclasses import asdict

        data = {"input": asdict(session.cfg.input), "calibration": asdict(session.cfg.calibration)}
        data["calibration"]["z_section_boundaries"] = list(
            data["calibration"]["z_section_boundaries"]
        )
        return data

    @app.put("/api/params")
    def put_params(update: ParamUpdate):
        from dataclasses import replace

        from ..config import _apply, _KERNEL_ALIASES

        trial = Config(
            input=replace(session.cfg.input),
            calibration=replace(session.cfg.calibration,
                                openings=replace(session.cfg.calibration.openings)),
        )
        try:
            _apply(trial.input, update.input, "input")
            calib = dict(update.calibration)
            openings = calib.pop("openings", {})
            if not isinstance(openings, dict):
                raise ConfigError("calibration.openings", "must be a table")
            _apply(trial.calibration, calib, "calibration",
                   aliases={k: "kernel_cells" for k in _KERNEL_ALIASES})
            _apply(trial.calibration.openings, openings, "calibration.openings")
            trial.validate()
        except ConfigError as exc:
            raise HTTPException(
                status_code=400,
                detail=[ParamError(field=exc.field, message=str(exc)).model_dump()],
            ) from None
        session.cfg = trial
        return {"ok": True, "stale": [s for s in STAGES if not session.fresh(s)]}

    @app.get("/api/config")
    def get_config():
        return Response(content=dump_config(session.cfg), media_type="application/toml")

    @app.put("/api/config")
    def put_config(body: dict):
        text = body.get("toml", "")
        try:
            session.cfg = parse_config(text)
        except ConfigError as exc:
            raise HTTPException(
                status_code=400,
                detail=[ParamError(field=exc.field, message=str(exc)).model_dump()],
            ) from None
        return {"ok": True}

    @app.post("/api/stage/{stage}/run", response_model=StageRunResponse)
    def run_stage(stage: str):
        if stage not in STAGES:
            raise HTTPException(status_code=404, detail=f"unknown stage {stage!r}")
        missing = session.prerequisite_missing(stage)
        if missing:
            raise HTTPException(
                status_code=409,
                detail=f"stage {stage!r} requires {missing!r} to run first with current parameters",
            )
        try:
            entry, cached = session.run_stage(stage)
        except Scan2IfcError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return StageRunResponse(
            stage=stage,
            cached=cached,
            elapsed_ms=entry.elapsed_ms,
            artifacts=entry.artifacts,
            previews={k: f"/api/preview/{v}.png" for k, v in entry.previews.items()},
        )

    @app.get("/api/preview/{pid}.png")
    def get_preview(pid: str):
        if pid not in session.previews:
            raise HTTPException(status_code=404, detail="unknown preview")
        media_type, data = session.previews[pid]
        return Response(content=data, media_type=media_type)

    @app.post("/api/export")
    def export(seed: int = 0, deterministic: bool = True):
        for stage in STAGES:
            missing = session.prerequisite_missing(stage)
            if missing:
                raise HTTPException(status_code=409, detail=f"run stage {missing!r} first")
            try:
                session.run_stage(stage)
            except Scan2IfcError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
        slabs_stage = session.stages["slabs"].result
        walls_stage = session.stages["walls"].result
        openings_stage = session.stages["openings"].result
        zones_stage = session.stages["zones"].result
        try:
            model = build_model(
                slabs_stage.slabs,
                slabs_stage.storeys,
                walls_stage.walls,
                openings_stage.openings,
                zones_stage.zones,
                session.cfg.input.meta(),
                seed=seed,
                deterministic=deterministic,
            )
        except Scan2IfcError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        text = serialize(model, file_name="model.ifc")
        return Response(
            content=text.encode("ascii"),
            media_type="application/x-step",
            headers={"Content-Disposition": 'attachment; filename="model.ifc"'},
        )

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")
    return app
