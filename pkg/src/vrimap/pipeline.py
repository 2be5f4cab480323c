"""Pipeline driver: fit -> simulate -> map -> assess -> render.

Each stage writes its artifacts under the output directory and later
stages load what they need from there, so stages can run in one
invocation or across several.  A missing prerequisite artifact raises
PipelineError naming the stage to run first.  All artifacts are
deterministic functions of the config and input files: rerunning any
stage with identical inputs rewrites byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from vrimap.activities import Activity, STEPS_PER_DAY
from vrimap.allocation import Building, OccupancyField, allocate
from vrimap.config import ProjectConfig
from vrimap.grids import GridSpec, RawLayer, paint_zones, rasterize
from vrimap.ingest import (
    Zone,
    ZoneDemographics,
    parse_buildings,
    parse_demographics,
    parse_diaries,
    parse_zones,
)
from vrimap.markov import (
    MarkovActivityModel,
    TrajectoryMatrix,
    fit as fit_model,
    load_model,
    propagate,
    save_model,
)
from vrimap.render import (
    write_grid_geojson,
    write_png,
    write_sweep_manifest,
    write_value_csv,
    read_value_csv,
)
from vrimap.vri import (
    AspectLayer,
    QuintileCut,
    VRIWeights,
    VulnerabilityMap,
    compose,
    rank_quintiles,
    score_activity_all,
    score_building_env,
    score_demographic,
)

STAGE_ORDER = ("fit", "simulate", "map", "assess", "render")

STAGE_VERSIONS = {"fit": 1, "simulate": 1, "map": 1, "assess": 1, "render": 1}

TRAJECTORY_SCHEMA = "vrimap.trajectory"
OCCUPANCY_SCHEMA = "vrimap.occupancy"


class PipelineError(RuntimeError):
    """A stage cannot run because a prerequisite artifact is missing."""


@dataclass(frozen=True, eq=False)
class Assessment:
    """All ranked layers and composed frames for one scenario."""

    grid: GridSpec
    demographic_raw: RawLayer
    building_env_raw: RawLayer
    demographic: AspectLayer
    building_env: AspectLayer
    activity: tuple
    frames: tuple

    def activity_layer(self, t: int) -> AspectLayer:
        return self.activity[t]

    def frame(self, t: int) -> VulnerabilityMap:
        return self.frames[t]


@dataclass(frozen=True, eq=False)
class ScenarioSnapshot:
    """Immutable bundle of everything the service exposes."""

    config: ProjectConfig
    content_hash: str
    model: MarkovActivityModel
    trajectory: TrajectoryMatrix
    buildings: tuple
    occupancy: OccupancyField
    assessment: Assessment
    activity_scores: np.ndarray
    env_scores: np.ndarray

    @property
    def grid(self) -> GridSpec:
        return self.assessment.grid


def config_fingerprint(config: ProjectConfig) -> dict:
    """Stable, JSON-safe digest input of every semantic config field."""
    return {
        "seed": config.seed,
        "smoothing": config.smoothing,
        "stationary": config.stationary,
        "snap_radius_m": config.snap_radius_m,
        "population": config.population,
        "cell_size": config.cell_size,
        "grid": config.grid.to_dict() if config.grid else None,
        "activity_rank_reference": config.activity_rank_reference,
        "code_map": [[prefix, a.code] for prefix, a in config.code_map.rules],
        "placement": {
            a.code: list(map(list, config.placement.shares[a])) for a in Activity
        },
        "vulnerability": {
            "criticality": list(config.vulnerability_table.criticality),
            "relevance": list(config.vulnerability_table.relevance),
            "combine": config.vulnerability_table.combine,
        },
        "variable_weights": list(map(list, config.variable_weights)),
        "env_weights": list(map(list, config.env_weights)),
        "env_scores": {
            "reference_year": config.env_scores.reference_year,
            "age_window_years": config.env_scores.age_window_years,
            "size_saturation_m2": config.env_scores.size_saturation_m2,
            "construction": list(map(list, config.env_scores.construction)),
            "glazing": list(map(list, config.env_scores.glazing)),
            "energy_structure": list(map(list, config.env_scores.energy_structure)),
            "categorical_default": config.env_scores.categorical_default,
        },
        "weights": list(config.weights.as_tuple()),
        "render": {"ramp": config.render.ramp, "scale": config.render.scale},
    }


def compute_content_hash(config: ProjectConfig) -> str:
    """sha256 over the canonical config and every input file's bytes."""
    h = hashlib.sha256()
    h.update(json.dumps(config_fingerprint(config), sort_keys=True).encode("utf-8"))
    for p in config.input_paths():
        h.update(p.name.encode("utf-8"))
        h.update(p.read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# stage context: compute-or-load with prerequisite errors


class _Context:
    def __init__(self, config: ProjectConfig, out_dir: Path):
        self.config = config
        self.out = Path(out_dir)
        self._memo: dict = {}

    # artifact paths -------------------------------------------------------
    @property
    def model_path(self) -> Path:
        return self.out / "model.json"

    @property
    def trajectory_path(self) -> Path:
        return self.out / "trajectory.json"

    @property
    def occupancy_meta_path(self) -> Path:
        return self.out / "occupancy.json"

    @property
    def manifest_path(self) -> Path:
        return self.out / "manifest.json"

    # loaded inputs --------------------------------------------------------
    def buildings(self) -> tuple:
        if "buildings" not in self._memo:
            accepted, rejected = parse_buildings(
                self.config.buildings_path.read_bytes()
            )
            self._memo["buildings"] = tuple(accepted)
            self._memo["buildings_rejected"] = rejected
        return self._memo["buildings"]

    def demographics(self) -> list:
        if "demographics" not in self._memo:
            zones, _ = parse_demographics(self.config.demographics_path.read_bytes())
            self._memo["demographics"] = zones
        return self._memo["demographics"]

    def zones(self) -> list:
        if "zones" not in self._memo:
            self._memo["zones"] = parse_zones(self.config.zones_path.read_bytes())
        return self._memo["zones"]

    def population(self) -> float:
        if self.config.population is not None:
            return float(self.config.population)
        return float(sum(z.population for z in self.demographics()))

    def grid(self) -> GridSpec:
        if self.config.grid is not None:
            return self.config.grid
        if "grid" not in self._memo:
            self._memo["grid"] = derive_grid(self.buildings(), self.config.cell_size)
        return self._memo["grid"]

    # stage products -------------------------------------------------------
    def model(self) -> MarkovActivityModel:
        if "model" not in self._memo:
            if not self.model_path.exists():
                raise PipelineError(
                    f"missing {self.model_path.name}; run stage 'fit' first"
                )
            self._memo["model"] = load_model(self.model_path)
        return self._memo["model"]

    def trajectory(self) -> TrajectoryMatrix:
        if "trajectory" not in self._memo:
            if not self.trajectory_path.exists():
                raise PipelineError(
                    f"missing {self.trajectory_path.name}; run stage 'simulate' first"
                )
            doc = json.loads(self.trajectory_path.read_text("utf-8"))
            if doc.get("schema") != TRAJECTORY_SCHEMA:
                raise PipelineError(f"{self.trajectory_path} is not a trajectory artifact")
            self._memo["trajectory"] = TrajectoryMatrix(np.array(doc["values"]))
        return self._memo["trajectory"]

    def occupancy(self) -> OccupancyField:
        if "occupancy" not in self._memo:
            if not self.occupancy_meta_path.exists():
                raise PipelineError(
                    f"missing {self.occupancy_meta_path.name}; run stage 'map' first"
                )
            meta = json.loads(self.occupancy_meta_path.read_text("utf-8"))
            if meta.get("schema") != OCCUPANCY_SCHEMA:
                raise PipelineError(f"{self.occupancy_meta_path} is not an occupancy artifact")
            counts = np.load(self.out / meta["files"]["counts"])
            unplaced = np.load(self.out / meta["files"]["unplaced"])
            self._memo["occupancy"] = OccupancyField(
                building_ids=tuple(meta["building_ids"]),
                counts=counts,
                unplaced=unplaced,
                total_population=float(meta["total_population"]),
            )
        return self._memo["occupancy"]

    def assessment(self) -> Assessment:
        if "assessment" not in self._memo:
            if not self.manifest_path.exists():
                raise PipelineError(
                    f"missing {self.manifest_path.name}; run stage 'assess' first"
                )
            self._memo["assessment"] = _load_assessment(self)
        return self._memo["assessment"]


def derive_grid(buildings: Sequence[Building], cell_size: float) -> GridSpec:
    """Smallest cell-aligned grid containing every building centroid."""
    if not buildings:
        raise PipelineError("cannot derive a grid: no valid buildings")
    xs = [b.x for b in buildings]
    ys = [b.y for b in buildings]
    origin_x = float(np.floor(min(xs) / cell_size) * cell_size)
    origin_y = float(np.floor(min(ys) / cell_size) * cell_size)
    cols = int(np.floor((max(xs) - origin_x) / cell_size)) + 1
    rows = int(np.floor((max(ys) - origin_y) / cell_size)) + 1
    return GridSpec(origin_x, origin_y, cell_size, rows, cols)


# ---------------------------------------------------------------------------
# stages


def _stage_fit(ctx: _Context) -> None:
    records, report = parse_diaries(
        ctx.config.diaries_path.read_bytes(), ctx.config.code_map
    )
    model = fit_model(
        records, smoothing=ctx.config.smoothing, stationary=ctx.config.stationary
    )
    save_model(model, ctx.model_path)
    _write_json(
        ctx.out / "fit_report.json",
        {
            "records_kept": report.records_kept,
            "rows_dropped": report.rows_dropped,
            "records_dropped": report.records_dropped,
            "reasons": report.reasons,
        },
    )
    ctx._memo["model"] = model


def _stage_simulate(ctx: _Context) -> None:
    traj = propagate(ctx.model())
    _write_json(
        ctx.trajectory_path,
        {
            "schema": TRAJECTORY_SCHEMA,
            "version": STAGE_VERSIONS["simulate"],
            "class_codes": [a.code for a in Activity],
            "values": traj.values.tolist(),
        },
    )
    ctx._memo["trajectory"] = traj


def _stage_map(ctx: _Context) -> None:
    traj = ctx.trajectory()
    buildings = ctx.buildings()
    occ = allocate(
        traj,
        ctx.population(),
        list(buildings),
        ctx.config.placement,
        ctx.demographics(),
    )
    counts_path = ctx.out / "occupancy_counts.npy"
    unplaced_path = ctx.out / "occupancy_unplaced.npy"
    np.save(counts_path, occ.counts)
    np.save(unplaced_path, occ.unplaced)
    _write_json(
        ctx.occupancy_meta_path,
        {
            "schema": OCCUPANCY_SCHEMA,
            "version": STAGE_VERSIONS["map"],
            "building_ids": list(occ.building_ids),
            "total_population": occ.total_population,
            "files": {"counts": counts_path.name, "unplaced": unplaced_path.name},
            "rejected_buildings": ctx._memo.get("buildings_rejected", []),
        },
    )
    ctx._memo["occupancy"] = occ


def _stage_assess(ctx: _Context) -> None:
    occ = ctx.occupancy()
    buildings = ctx.buildings()
    if tuple(b.building_id for b in buildings) != occ.building_ids:
        raise PipelineError(
            "occupancy artifact does not match the building inventory; rerun stage 'map'"
        )
    grid = ctx.grid()
    config = ctx.config

    zone_scores = score_demographic(ctx.demographics(), config.variable_weight_map)
    demographic_raw = paint_zones(ctx.zones(), zone_scores, grid)
    demographic_layer = rank_quintiles(demographic_raw, "demographic")

    env_scores = score_building_env(buildings, config.env_weight_map, config.env_scores)
    env_points = [(b.x, b.y, s) for b, s in zip(buildings, env_scores)]
    env_raw, _ = rasterize(env_points, grid, reducer="mean")
    env_layer = rank_quintiles(env_raw, "building_env")

    activity_scores = score_activity_all(occ, config.vulnerability_table)  # (96, B)
    xs = np.array([b.x for b in buildings])
    ys = np.array([b.y for b in buildings])
    activity_raws = []
    for t in range(STEPS_PER_DAY):
        pts = np.column_stack([xs, ys, activity_scores[t]])
        raw, _ = rasterize(pts, grid, reducer="sum")
        activity_raws.append(raw)

    if config.activity_rank_reference == "global":
        pooled = np.concatenate([r.values.ravel() for r in activity_raws])
        cut = QuintileCut.fit(pooled)
        activity_layers = tuple(
            cut.apply_to_layer(activity_raws[t], "activity", t)
            for t in range(STEPS_PER_DAY)
        )
    else:
        activity_layers = tuple(
            rank_quintiles(activity_raws[t], "activity", t) for t in range(STEPS_PER_DAY)
        )

    frames = tuple(
        compose([demographic_layer, env_layer, activity_layers[t]], config.weights)
        for t in range(STEPS_PER_DAY)
    )

    layers_dir = ctx.out / "layers"
    vri_dir = ctx.out / "vri"
    layers_dir.mkdir(parents=True, exist_ok=True)
    vri_dir.mkdir(parents=True, exist_ok=True)

    write_value_csv(demographic_raw.values, layers_dir / "demographic_raw.csv")
    write_value_csv(_rank_values(demographic_layer), layers_dir / "demographic_rank.csv")
    write_grid_geojson(
        grid, {"rank": _rank_values(demographic_layer)}, layers_dir / "demographic_rank.geojson"
    )
    write_value_csv(env_raw.values, layers_dir / "building_env_raw.csv")
    write_value_csv(_rank_values(env_layer), layers_dir / "building_env_rank.csv")
    write_grid_geojson(
        grid, {"rank": _rank_values(env_layer)}, layers_dir / "building_env_rank.geojson"
    )
    for t, layer in enumerate(activity_layers):
        write_value_csv(_rank_values(layer), layers_dir / f"activity_rank_t{t:02d}.csv")

    frame_entries = []
    for t, frame in enumerate(frames):
        csv_name = f"frame_t{t:02d}.csv"
        geo_name = f"frame_t{t:02d}.geojson"
        write_value_csv(frame.values, vri_dir / csv_name)
        write_grid_geojson(grid, {"V": frame.values}, vri_dir / geo_name)
        frame_entries.append(
            {"t": t, "csv": f"vri/{csv_name}", "geojson": f"vri/{geo_name}"}
        )

    write_sweep_manifest(
        frame_entries,
        config.weights,
        ctx.manifest_path,
        extra={
            "schema": "vrimap.manifest",
            "content_hash": compute_content_hash(config),
            "stage_versions": STAGE_VERSIONS,
            "grid": grid.to_dict(),
            "activity_rank_reference": config.activity_rank_reference,
            "layers": {
                "demographic_rank": "layers/demographic_rank.csv",
                "building_env_rank": "layers/building_env_rank.csv",
                "activity_rank": "layers/activity_rank_t{t:02d}.csv",
            },
        },
    )
    ctx._memo["assessment"] = Assessment(
        grid=grid,
        demographic_raw=demographic_raw,
        building_env_raw=env_raw,
        demographic=demographic_layer,
        building_env=env_layer,
        activity=activity_layers,
        frames=frames,
    )
    ctx._memo["activity_scores"] = activity_scores
    ctx._memo["env_scores"] = env_scores


def _rank_values(layer: AspectLayer) -> np.ndarray:
    """Ranks as floats with NaN nodata (for the CSV/GeoJSON writers)."""
    values = layer.ranks.astype(float)
    values[layer.ranks == 0] = np.nan
    return values


def _load_assessment(ctx: _Context) -> Assessment:
    manifest = json.loads(ctx.manifest_path.read_text("utf-8"))
    g = manifest["grid"]
    grid = GridSpec(
        origin_x=g["origin_x"],
        origin_y=g["origin_y"],
        cell_size=g["cell_size"],
        rows=g["rows"],
        cols=g["cols"],
    )
    shape = grid.shape
    layers_dir = ctx.out / "layers"

    def load_rank_layer(name: str, aspect: str, timestep=None) -> AspectLayer:
        values = read_value_csv(layers_dir / name, shape)
        ranks = np.where(np.isfinite(values), values, 0).astype(np.int8)
        return AspectLayer(grid, ranks, aspect, timestep)

    demographic = load_rank_layer("demographic_rank.csv", "demographic")
    env = load_rank_layer("building_env_rank.csv", "building_env")
    activity = tuple(
        load_rank_layer(f"activity_rank_t{t:02d}.csv", "activity", t)
        for t in range(STEPS_PER_DAY)
    )
    w = manifest["weights"]
    weights = VRIWeights(w["qd"], w["qa"], w["qb"])
    frames = []
    for entry in manifest["frames"]:
        values = read_value_csv(ctx.out / entry["csv"], shape)
        frames.append(
            VulnerabilityMap(grid, values, weights, timestep=entry["t"])
        )
    demographic_raw = RawLayer(grid, read_value_csv(layers_dir / "demographic_raw.csv", shape))
    env_raw = RawLayer(grid, read_value_csv(layers_dir / "building_env_raw.csv", shape))
    return Assessment(
        grid=grid,
        demographic_raw=demographic_raw,
        building_env_raw=env_raw,
        demographic=demographic,
        building_env=env,
        activity=activity,
        frames=tuple(frames),
    )


def _stage_render(ctx: _Context) -> None:
    assessment = ctx.assessment()
    settings = ctx.config.render
    png_dir = ctx.out / "png"
    png_dir.mkdir(parents=True, exist_ok=True)
    write_png(assessment.demographic, png_dir / "demographic.png", settings.ramp, settings.scale)
    write_png(assessment.building_env, png_dir / "building_env.png", settings.ramp, settings.scale)
    entries = []
    for t in range(STEPS_PER_DAY):
        activity_name = f"activity_t{t:02d}.png"
        frame_name = f"frame_t{t:02d}.png"
        write_png(assessment.activity[t], png_dir / activity_name, settings.ramp, settings.scale)
        write_png(assessment.frames[t], png_dir / frame_name, settings.ramp, settings.scale)
        entries.append({"t": t, "activity": f"png/{activity_name}", "frame": f"png/{frame_name}"})
    _write_json(
        ctx.out / "render_manifest.json",
        {
            "schema": "vrimap.render_manifest",
            "ramp": settings.ramp,
            "scale": settings.scale,
            "stage_versions": STAGE_VERSIONS,
            "frames": entries,
        },
    )


_STAGE_FUNCS = {
    "fit": _stage_fit,
    "simulate": _stage_simulate,
    "map": _stage_map,
    "assess": _stage_assess,
    "render": _stage_render,
}


def run_pipeline(
    config: ProjectConfig,
    stages: Sequence[str],
    out_dir,
) -> Optional["ScenarioSnapshot"]:
    """Run the requested stages in pipeline order.

    Returns a ScenarioSnapshot when the artifacts through assess exist
    afterwards (whether produced now or found on disk), else None.
    """
    unknown = sorted(set(stages) - set(STAGE_ORDER))
    if unknown:
        raise ValueError(f"unknown stages {unknown}, expected subset of {STAGE_ORDER}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = _Context(config, out_dir)
    for stage in STAGE_ORDER:
        if stage in stages:
            _STAGE_FUNCS[stage](ctx)
    try:
        return build_snapshot(config, out_dir, ctx)
    except PipelineError:
        return None


def build_snapshot(
    config: ProjectConfig, out_dir, ctx: Optional[_Context] = None
) -> ScenarioSnapshot:
    """Assemble the immutable service bundle from artifacts on disk
    (or from the memo of a pipeline run in the same process)."""
    if ctx is None:
        ctx = _Context(config, Path(out_dir))
    assessment = ctx.assessment()
    occ = ctx.occupancy()
    buildings = ctx.buildings()
    if "activity_scores" in ctx._memo:
        activity_scores = ctx._memo["activity_scores"]
        env_scores = ctx._memo["env_scores"]
    else:
        activity_scores = score_activity_all(occ, config.vulnerability_table)
        env_scores = score_building_env(
            list(buildings), config.env_weight_map, config.env_scores
        )
    return ScenarioSnapshot(
        config=config,
        content_hash=compute_content_hash(config),
        model=ctx.model(),
        trajectory=ctx.trajectory(),
        buildings=buildings,
        occupancy=occ,
        assessment=assessment,
        activity_scores=activity_scores,
        env_scores=env_scores,
    )


def _write_json(path: Path, doc: dict) -> None:
    path.write_bytes(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8"))
