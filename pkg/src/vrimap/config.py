"""Project configuration: one YAML file describing inputs and tables.

Every table the pipeline uses (activity placement, class
criticality/reliance, demographic variable weights, environment weights
and score maps, default aspect weights) lives here with shipped
defaults, so a minimal config only names its input files.  All tables
are expert-editable; the defaults are documented starting points, not
fitted values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import yaml

from vrimap.activities import Activity
from vrimap.allocation import ActivityPlacementTable, BUILDING_TYPES
from vrimap.grids import GridSpec
from vrimap.ingest import ActivityCodeMap, default_code_map
from vrimap.vri import ActivityVulnerabilityTable, EnvScoreTable, VRIWeights

RANK_REFERENCES = ("global", "per_step")

#: demographic variable weights; age carries the largest weight
DEFAULT_VARIABLE_WEIGHTS = {
    "share_over_65": 0.35,
    "share_under_5": 0.15,
    "share_low_income": 0.20,
    "share_disability": 0.15,
    "share_renter": 0.10,
    "share_no_vehicle": 0.05,
}

DEFAULT_ENV_WEIGHTS = {
    "age": 0.25,
    "size": 0.15,
    "construction": 0.20,
    "glazing": 0.10,
    "energy_structure": 0.30,
}

#: per-class (criticality, reliance), both 1-5; expert-editable
DEFAULT_VULNERABILITY_CLASSES = {
    "c01": (5, 5),
    "c02": (5, 2),
    "c03": (3, 4),
    "c04": (3, 3),
    "c05": (2, 3),
    "c06": (3, 3),
    "c07": (1, 5),
    "c08": (2, 1),
}

#: where each activity class's population mass goes, by building type
DEFAULT_PLACEMENT = {
    "c01": {"residential": 0.6, "public_service": 0.4},
    "c02": {"residential": 0.9, "mercantile": 0.1},
    "c03": {"business": 0.85, "mercantile": 0.1, "public_service": 0.05},
    "c04": {"education": 1.0},
    "c05": {"residential": 0.8, "mercantile": 0.2},
    "c06": {"mercantile": 0.4, "public_service": 0.3, "residential": 0.3},
    "c07": {"residential": 0.5, "assembly": 0.3, "mercantile": 0.2},
    "c08": {},  # travel and unclassifiable time stays unplaced
}

DEFAULT_WEIGHTS = (0.4, 0.35, 0.25)


@dataclass(frozen=True)
class RenderSettings:
    ramp: str = "heat"
    scale: int = 8


@dataclass(frozen=True)
class ProjectConfig:
    """Everything one pipeline run needs, resolved and validated."""

    diaries_path: Path
    buildings_path: Path
    demographics_path: Path
    zones_path: Path
    gps_path: Optional[Path]
    seed: int
    smoothing: float
    stationary: bool
    snap_radius_m: float
    population: Optional[float]
    grid: Optional[GridSpec]
    cell_size: float
    activity_rank_reference: str
    code_map: ActivityCodeMap
    placement: ActivityPlacementTable
    vulnerability_table: ActivityVulnerabilityTable
    variable_weights: "tuple[tuple[str, float], ...]"
    env_weights: "tuple[tuple[str, float], ...]"
    env_scores: EnvScoreTable
    weights: VRIWeights
    render: RenderSettings = field(default_factory=RenderSettings)

    def __post_init__(self) -> None:
        if self.activity_rank_reference not in RANK_REFERENCES:
            raise ValueError(
                f"activity_rank_reference must be one of {RANK_REFERENCES}, "
                f"got {self.activity_rank_reference!r}"
            )
        if self.smoothing < 0:
            raise ValueError("smoothing must be nonnegative")
        if self.snap_radius_m <= 0:
            raise ValueError("snap_radius_m must be positive")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")

    @property
    def variable_weight_map(self) -> dict:
        return dict(self.variable_weights)

    @property
    def env_weight_map(self) -> dict:
        return dict(self.env_weights)

    def input_paths(self) -> list:
        paths = [
            self.diaries_path,
            self.buildings_path,
            self.demographics_path,
            self.zones_path,
        ]
        if self.gps_path is not None:
            paths.append(self.gps_path)
        return paths


def placement_from_mapping(raw: Mapping[str, Mapping[str, float]]) -> ActivityPlacementTable:
    """Build the placement table from {class_code: {btype: share}}."""
    shares = {}
    for a in Activity:
        rules = raw.get(a.code, {})
        for btype in rules:
            if btype not in BUILDING_TYPES:
                raise ValueError(
                    f"placement for {a.code} names unknown building type {btype!r}"
                )
        shares[a] = tuple(sorted((bt, float(s)) for bt, s in rules.items()))
    return ActivityPlacementTable(shares)


def vulnerability_from_mapping(
    raw: Mapping[str, tuple], combine: str = "geometric"
) -> ActivityVulnerabilityTable:
    table = {}
    for a in Activity:
        if a.code not in raw:
            raise ValueError(f"vulnerability table missing class {a.code}")
        pair = raw[a.code]
        table[a] = (int(pair[0]), int(pair[1]))
    return ActivityVulnerabilityTable.from_mapping(table, combine=combine)


def default_config(
    base_dir: Path,
    inputs: Optional[Mapping[str, str]] = None,
    **overrides,
) -> ProjectConfig:
    """ProjectConfig from shipped defaults; inputs maps the four (or
    five) input names to paths relative to base_dir."""
    inputs = dict(inputs or {})
    base_dir = Path(base_dir)

    def path_of(name: str, default: str) -> Path:
        return base_dir / inputs.get(name, default)

    gps = inputs.get("gps")
    fields = dict(
        diaries_path=path_of("diaries", "diaries.csv"),
        buildings_path=path_of("buildings", "buildings.geojson"),
        demographics_path=path_of("demographics", "demographics.csv"),
        zones_path=path_of("zones", "zones.geojson"),
        gps_path=(base_dir / gps) if gps else None,
        seed=42,
        smoothing=0.0,
        stationary=False,
        snap_radius_m=100.0,
        population=None,
        grid=None,
        cell_size=100.0,
        activity_rank_reference="global",
        code_map=default_code_map(),
        placement=placement_from_mapping(DEFAULT_PLACEMENT),
        vulnerability_table=vulnerability_from_mapping(DEFAULT_VULNERABILITY_CLASSES),
        variable_weights=tuple(sorted(DEFAULT_VARIABLE_WEIGHTS.items())),
        env_weights=tuple(sorted(DEFAULT_ENV_WEIGHTS.items())),
        env_scores=EnvScoreTable(),
        weights=VRIWeights.normalized(*DEFAULT_WEIGHTS),
        render=RenderSettings(),
    )
    fields.update(overrides)
    return ProjectConfig(**fields)


def load_config(path) -> ProjectConfig:
    """Load and validate a YAML project config.

    Relative input paths resolve against the config file's directory;
    every referenced input must exist.
    """
    path = Path(path)
    raw = yaml.safe_load(path.read_text("utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a YAML mapping")
    base = path.parent
    inputs = raw.get("inputs", {})
    for required in ("diaries", "buildings", "demographics", "zones"):
        if required not in inputs:
            raise ValueError(f"config missing inputs.{required}")

    grid = None
    if "grid" in raw and raw["grid"] is not None:
        g = raw["grid"]
        grid = GridSpec(
            origin_x=float(g["origin_x"]),
            origin_y=float(g["origin_y"]),
            cell_size=float(g["cell_size"]),
            rows=int(g["rows"]),
            cols=int(g["cols"]),
        )

    code_map = default_code_map()
    if "code_map" in raw and raw["code_map"] is not None:
        rules = tuple(
            (str(prefix), Activity.from_code(code)) for prefix, code in raw["code_map"]
        )
        code_map = ActivityCodeMap(rules)

    vt_raw = raw.get("vulnerability_table", {})
    combine = vt_raw.get("combine", "geometric")
    classes = vt_raw.get("classes", DEFAULT_VULNERABILITY_CLASSES)

    env_scores = EnvScoreTable()
    if "env_scores" in raw and raw["env_scores"] is not None:
        es = dict(raw["env_scores"])
        for cat in ("construction", "glazing", "energy_structure"):
            if cat in es:
                es[cat] = tuple(sorted((str(k), float(v)) for k, v in es[cat].items()))
        env_scores = EnvScoreTable(**es)

    weights_raw = raw.get("weights", None)
    if weights_raw is None:
        weights = VRIWeights.normalized(*DEFAULT_WEIGHTS)
    else:
        weights = VRIWeights.normalized(
            float(weights_raw["qd"]), float(weights_raw["qa"]), float(weights_raw["qb"])
        )

    render_raw = raw.get("render", {}) or {}

    config = default_config(
        base,
        inputs=inputs,
        seed=int(raw.get("seed", 42)),
        smoothing=float(raw.get("smoothing", 0.0)),
        stationary=bool(raw.get("stationary", False)),
        snap_radius_m=float(raw.get("snap_radius_m", 100.0)),
        population=(None if raw.get("population") is None else float(raw["population"])),
        grid=grid,
        cell_size=float(raw.get("cell_size", 100.0)),
        activity_rank_reference=str(raw.get("activity_rank_reference", "global")),
        code_map=code_map,
        placement=placement_from_mapping(raw.get("placement", DEFAULT_PLACEMENT)),
        vulnerability_table=vulnerability_from_mapping(classes, combine=combine),
        variable_weights=tuple(
            sorted(
                (str(k), float(v))
                for k, v in raw.get("variable_weights", DEFAULT_VARIABLE_WEIGHTS).items()
            )
        ),
        env_weights=tuple(
            sorted(
                (str(k), float(v))
                for k, v in raw.get("env_weights", DEFAULT_ENV_WEIGHTS).items()
            )
        ),
        env_scores=env_scores,
        weights=weights,
        render=RenderSettings(
            ramp=str(render_raw.get("ramp", "heat")),
            scale=int(render_raw.get("scale", 8)),
        ),
    )
    missing = [str(p) for p in config.input_paths() if not p.exists()]
    if missing:
        raise FileNotFoundError(f"config references missing inputs: {missing}")
    return config
