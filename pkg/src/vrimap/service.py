"""Read-only HTTP service over a pipeline snapshot.

All endpoints are pure functions of the immutable ScenarioSnapshot plus
query parameters, so concurrent identical requests return identical
bodies.  What-if composition happens per request from the ranked
layers; the snapshot is never mutated.  Every error body carries a
machine-readable code and a human-readable message:
{"error": {"code": ..., "message": ...}}.

Weight parameters arrive unnormalized (raw slider positions) and are
normalized server-side before entering the composition.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from vrimap.activities import ACTIVITY_LABELS, Activity, STEP_MINUTES, STEPS_PER_DAY
from vrimap.pipeline import ScenarioSnapshot
from vrimap.render import RAMPS, png_bytes
from vrimap.vri import ASPECTS, VRIWeights, compose


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def _parse_timestep(raw: Optional[str], default: int = 0) -> int:
    if raw is None:
        return default
    try:
        t = int(raw)
    except ValueError:
        raise ApiError(400, "malformed_timestep", f"timestep {raw!r} is not an integer")
    if not 0 <= t < STEPS_PER_DAY:
        raise ApiError(
            404, "unknown_timestep", f"timestep {t} outside 0-{STEPS_PER_DAY - 1}"
        )
    return t


def _parse_weights(
    qd: Optional[str], qa: Optional[str], qb: Optional[str], default: VRIWeights
) -> VRIWeights:
    given = [v for v in (qd, qa, qb) if v is not None]
    if not given:
        return default
    if len(given) != 3:
        raise ApiError(
            400, "partial_weights", "provide all three of qd, qa, qb or none"
        )
    values = []
    for name, raw in (("qd", qd), ("qa", qa), ("qb", qb)):
        try:
            values.append(float(raw))
        except ValueError:
            raise ApiError(400, "malformed_weight", f"{name}={raw!r} is not a number")
    try:
        return VRIWeights.normalized(*values)
    except ValueError as exc:
        raise ApiError(400, "invalid_weights", str(exc))


def _grid_json(snapshot: ScenarioSnapshot) -> dict:
    return snapshot.grid.to_dict()


def _ranks_json(ranks: np.ndarray) -> list:
    """Row-major rank list, null where nodata."""
    return [None if r == 0 else int(r) for r in ranks.ravel()]


def _values_json(values: np.ndarray) -> list:
    return [float(v) if np.isfinite(v) else None for v in values.ravel()]


def build_app(snapshot: ScenarioSnapshot) -> FastAPI:
    app = FastAPI(title="vrimap service", docs_url=None, redoc_url=None)
    # read-only API consumed by a browser client on another origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["GET"])

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _error_response(400, "bad_request", str(exc.errors()))

    @app.get("/meta")
    def meta() -> dict:
        w = snapshot.config.weights
        return {
            "grid": _grid_json(snapshot),
            "timesteps": STEPS_PER_DAY,
            "step_minutes": STEP_MINUTES,
            "classes": [
                {"code": a.code, "label": ACTIVITY_LABELS[a]} for a in Activity
            ],
            "aspects": list(ASPECTS),
            "default_weights": {"qd": w.qd, "qa": w.qa, "qb": w.qb},
            "ramps": sorted(RAMPS),
            "total_population": snapshot.occupancy.total_population,
            "content_hash": snapshot.content_hash,
        }

    @app.get("/layers/{aspect}")
    def layers(aspect: str, t: Optional[str] = None) -> dict:
        if aspect not in ASPECTS:
            raise ApiError(
                404, "unknown_aspect", f"aspect {aspect!r} not one of {list(ASPECTS)}"
            )
        assessment = snapshot.assessment
        if aspect == "activity":
            step = _parse_timestep(t)
            layer = assessment.activity_layer(step)
            timestep = step
        else:
            layer = assessment.demographic if aspect == "demographic" else assessment.building_env
            timestep = None
        return {
            "aspect": aspect,
            "timestep": timestep,
            "grid": _grid_json(snapshot),
            "ranks": _ranks_json(layer.ranks),
        }

    @app.get("/vri")
    def vri(
        t: Optional[str] = None,
        qd: Optional[str] = None,
        qa: Optional[str] = None,
        qb: Optional[str] = None,
    ) -> dict:
        step = _parse_timestep(t)
        weights = _parse_weights(qd, qa, qb, snapshot.config.weights)
        assessment = snapshot.assessment
        vmap = compose(
            [assessment.demographic, assessment.building_env, assessment.activity_layer(step)],
            weights,
        )
        return {
            "timestep": step,
            "weights": {"qd": weights.qd, "qa": weights.qa, "qb": weights.qb},
            "grid": _grid_json(snapshot),
            "values": _values_json(vmap.values),
        }

    @app.get("/buildings")
    def buildings(t: Optional[str] = None) -> dict:
        step = _parse_timestep(t)
        occ = snapshot.occupancy
        counts = occ.counts[step]  # (B, 8)
        totals = counts.sum(axis=1)
        act_scores = snapshot.activity_scores[step]
        order = sorted(
            range(len(snapshot.buildings)),
            key=lambda i: (-act_scores[i], snapshot.buildings[i].building_id),
        )
        rows = []
        for i in order:
            b = snapshot.buildings[i]
            cell = snapshot.grid.cell_of(b.x, b.y)
            rows.append(
                {
                    "building_id": b.building_id,
                    "type": b.btype,
                    "x": b.x,
                    "y": b.y,
                    "cell": list(cell) if cell is not None else None,
                    "occupants": float(totals[i]),
                    "by_class": {
                        a.code: float(counts[i, a]) for a in Activity if counts[i, a] > 0
                    },
                    "activity_score": float(act_scores[i]),
                    "env_score": float(snapshot.env_scores[i]),
                }
            )
        return {"timestep": step, "buildings": rows}

    @app.get("/frames.png")
    def frames_png(
        t: Optional[str] = None,
        ramp: Optional[str] = None,
        scale: Optional[str] = None,
    ) -> Response:
        step = _parse_timestep(t)
        settings = snapshot.config.render
        ramp_id = ramp if ramp is not None else settings.ramp
        if ramp_id not in RAMPS:
            raise ApiError(
                400, "unknown_ramp", f"ramp {ramp_id!r} not one of {sorted(RAMPS)}"
            )
        try:
            scale_px = int(scale) if scale is not None else settings.scale
        except ValueError:
            raise ApiError(400, "malformed_scale", f"scale {scale!r} is not an integer")
        if not 1 <= scale_px <= 64:
            raise ApiError(400, "invalid_scale", "scale must be between 1 and 64")
        frame = snapshot.assessment.frame(step)
        return Response(content=png_bytes(frame, ramp_id, scale_px), media_type="image/png")

    return app


def serve(snapshot: ScenarioSnapshot, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(build_app(snapshot), host=host, port=port, log_level="warning")
