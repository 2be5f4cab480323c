"""Vulnerability scoring, quintile ranking, and index composition.

Three aspects are scored on their natural units (zones for
demographics, buildings for activity and environment), ranked into
quintiles 1-5 (low .. high), and combined per cell as the weighted sum
V = sum_i p_i * q_i over the three integer ranks.  Ranks use 0 as the
nodata sentinel in integer grids; raw layers use NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from vrimap.activities import Activity, N_CLASSES, STEPS_PER_DAY
from vrimap.allocation import Building, OccupancyField
from vrimap.grids import GridSpec, RawLayer
from vrimap.ingest import ZoneDemographics

ASPECTS = ("demographic", "activity", "building_env")

NODATA_RANK = 0

COMBINE_MODES = ("geometric", "arithmetic")


@dataclass(frozen=True)
class ActivityVulnerabilityTable:
    """Per-class criticality and reliance levels, both integer 1-5.

    Criticality grades how serious losing power is for people engaged
    in the class; reliance grades how much the class depends on
    electricity at all.  The combined per-class score is their geometric
    mean by default, so scoring low on either dimension discounts the
    class strongly; an arithmetic mean mode is available.
    """

    criticality: tuple
    relevance: tuple
    combine: str = "geometric"

    def __post_init__(self) -> None:
        for name, values in (("criticality", self.criticality), ("relevance", self.relevance)):
            if len(values) != N_CLASSES:
                raise ValueError(f"{name} needs {N_CLASSES} entries, got {len(values)}")
            for a, v in zip(Activity, values):
                if not isinstance(v, int) or not 1 <= v <= 5:
                    raise ValueError(f"{name}[{a.code}] = {v!r}, expected integer 1-5")
        if self.combine not in COMBINE_MODES:
            raise ValueError(
                f"unknown combine mode {self.combine!r}, expected one of {COMBINE_MODES}"
            )

    @classmethod
    def from_mapping(
        cls, table: Mapping[Activity, tuple], combine: str = "geometric"
    ) -> "ActivityVulnerabilityTable":
        missing = [a.code for a in Activity if a not in table]
        if missing:
            raise ValueError(f"table missing classes: {missing}")
        return cls(
            criticality=tuple(int(table[a][0]) for a in Activity),
            relevance=tuple(int(table[a][1]) for a in Activity),
            combine=combine,
        )

    def combined(self, a: Activity) -> float:
        """Per-class score on the 1-5 scale."""
        c, r = self.criticality[a], self.relevance[a]
        if self.combine == "geometric":
            return math.sqrt(c * r)
        return (c + r) / 2.0

    def combined_vector(self) -> np.ndarray:
        return np.array([self.combined(a) for a in Activity])


@dataclass(frozen=True, eq=False)
class AspectLayer:
    """Quintile ranks 1-5 for one aspect on the analysis grid.

    ranks is int8 with 0 meaning nodata.  Demographic and building
    environment layers are static (timestep None); activity layers
    carry the step they describe.
    """

    grid: GridSpec
    ranks: np.ndarray
    aspect: str
    timestep: Optional[int] = None

    def __post_init__(self) -> None:
        if self.aspect not in ASPECTS:
            raise ValueError(f"unknown aspect {self.aspect!r}, expected one of {ASPECTS}")
        ranks = np.ascontiguousarray(self.ranks, dtype=np.int8)
        if ranks.shape != self.grid.shape:
            raise ValueError(
                f"ranks shape {ranks.shape} does not match grid {self.grid.shape}"
            )
        if np.any((ranks < 0) | (ranks > 5)):
            raise ValueError("ranks must be 1-5 or the 0 nodata sentinel")
        if self.aspect == "activity":
            if self.timestep is None or not 0 <= self.timestep < STEPS_PER_DAY:
                raise ValueError("activity layers need a timestep in 0-95")
        elif self.timestep is not None:
            raise ValueError(f"{self.aspect} layers are static; timestep must be None")
        ranks.setflags(write=False)
        object.__setattr__(self, "ranks", ranks)


@dataclass(frozen=True)
class VRIWeights:
    """Normalized aspect weights (demographic, activity, building_env)."""

    qd: float
    qa: float
    qb: float

    def __post_init__(self) -> None:
        for name, v in (("qd", self.qd), ("qa", self.qa), ("qb", self.qb)):
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"weight {name} must be finite and nonnegative, got {v}")
        total = self.qd + self.qa + self.qb
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, expected 1 (use .normalized)")

    @classmethod
    def normalized(cls, qd: float, qa: float, qb: float) -> "VRIWeights":
        """Scale a raw nonnegative triple to sum 1."""
        for name, v in (("qd", qd), ("qa", qa), ("qb", qb)):
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"weight {name} must be finite and nonnegative, got {v}")
        total = qd + qa + qb
        if total <= 0:
            raise ValueError("weights must not all be zero")
        return cls(qd / total, qa / total, qb / total)

    def as_tuple(self) -> tuple:
        return (self.qd, self.qa, self.qb)


@dataclass(frozen=True, eq=False)
class VulnerabilityMap:
    """Composed per-cell index V in [1, 5], NaN where any rank is missing."""

    grid: GridSpec
    values: np.ndarray
    weights: VRIWeights
    timestep: Optional[int] = None

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        ok = values[np.isfinite(values)]
        if ok.size and (ok.min() < 1.0 - 1e-9 or ok.max() > 5.0 + 1e-9):
            raise ValueError("composed values must lie in [1, 5]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


# ---------------------------------------------------------------------------
# aspect scoring


def score_demographic(
    zones: Sequence[ZoneDemographics], variable_weights: Mapping[str, float]
) -> dict:
    """Weighted sum of demographic shares per zone.

    Every variable named in variable_weights must exist in every zone's
    shares; the age-related share carries the largest default weight
    (see config defaults).
    """
    if not variable_weights:
        raise ValueError("variable_weights must name at least one demographic variable")
    out = {}
    for zone in zones:
        shares = zone.share_map
        score = 0.0
        for name, weight in sorted(variable_weights.items()):
            if name not in shares:
                raise ValueError(
                    f"demographic variable {name!r} missing in zone {zone.zone_id}"
                )
            score += weight * shares[name]
        out[zone.zone_id] = score
    return out


def score_activity(
    occ: OccupancyField, table: ActivityVulnerabilityTable, t: int
) -> np.ndarray:
    """Per-building expected occupant count weighted by class score at
    step t.  Additive over disjoint occupant groups by construction."""
    if not 0 <= t < STEPS_PER_DAY:
        raise ValueError(f"timestep {t} outside 0-{STEPS_PER_DAY - 1}")
    return occ.counts[t] @ table.combined_vector()


def score_activity_all(
    occ: OccupancyField, table: ActivityVulnerabilityTable
) -> np.ndarray:
    """(96, B) activity scores for every step in one pass."""
    return occ.counts @ table.combined_vector()


#: environment attributes score_building_env understands
ENV_ATTRIBUTES = ("age", "size", "construction", "glazing", "energy_structure")


@dataclass(frozen=True)
class EnvScoreTable:
    """Normalization rules turning building attributes into [0, 1] scores.

    Age and size scale linearly up to a saturation point; the three
    categorical attributes use explicit score maps.  all_electric must
    map to the maximum electricity-dependence score.
    """

    reference_year: int = 2025
    age_window_years: float = 100.0
    size_saturation_m2: float = 5000.0
    construction: tuple = (("concrete", 0.3), ("masonry", 0.5), ("steel", 0.2), ("wood", 0.8))
    glazing: tuple = (("double", 0.5), ("single", 1.0), ("triple", 0.2))
    energy_structure: tuple = (("all_electric", 1.0), ("mixed", 0.6), ("non_electric", 0.1))
    categorical_default: float = 0.5

    def __post_init__(self) -> None:
        energy = dict(self.energy_structure)
        if "all_electric" not in energy or energy["all_electric"] < max(energy.values()):
            raise ValueError("all_electric must carry the maximum energy-structure score")

    def attribute_score(self, b: Building, attribute: str) -> float:
        if attribute == "age":
            age = self.reference_year - b.year_built
            return float(np.clip(age / self.age_window_years, 0.0, 1.0))
        if attribute == "size":
            return float(np.clip(b.floor_area_m2 / self.size_saturation_m2, 0.0, 1.0))
        if attribute in ("construction", "glazing", "energy_structure"):
            table = dict(getattr(self, attribute))
            return table.get(getattr(b, attribute), self.categorical_default)
        raise ValueError(f"unknown environment attribute {attribute!r}")


def score_building_env(
    buildings: Sequence[Building],
    env_weights: Mapping[str, float],
    scores: Optional[EnvScoreTable] = None,
) -> np.ndarray:
    """Weighted composite of normalized environment attribute scores."""
    unknown = sorted(set(env_weights) - set(ENV_ATTRIBUTES))
    if unknown:
        raise ValueError(
            f"unknown environment attributes {unknown}, expected subset of {ENV_ATTRIBUTES}"
        )
    if scores is None:
        scores = EnvScoreTable()
    out = np.zeros(len(buildings))
    for i, b in enumerate(buildings):
        out[i] = sum(
            w * scores.attribute_score(b, name) for name, w in sorted(env_weights.items())
        )
    return out


# ---------------------------------------------------------------------------
# quintile ranking


@dataclass(frozen=True, eq=False)
class QuintileCut:
    """A reusable rank-1-to-5 cut fitted on a reference value pool.

    Sorting the pool ascending, the k-th bucket ends at sorted position
    ceil(k*n/5).  A value's rank is the bucket of its first position
    among equals, so ties always share the rank of their lowest slot.
    """

    sorted_ref: np.ndarray
    boundaries: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "QuintileCut":
        values = np.asarray(values, dtype=float).ravel()
        values = values[np.isfinite(values)]
        if values.size == 0:
            raise ValueError("cannot cut quintiles: all values are nodata")
        sorted_ref = np.sort(values)
        n = sorted_ref.size
        boundaries = np.array([math.ceil(k * n / 5) for k in range(1, 6)], dtype=np.int64)
        sorted_ref.setflags(write=False)
        boundaries.setflags(write=False)
        return cls(sorted_ref, boundaries)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Rank an array against the reference pool (NaN -> 0)."""
        values = np.asarray(values, dtype=float)
        finite = np.isfinite(values)
        # 1-based first position of each value among its equals
        first_pos = np.searchsorted(self.sorted_ref, values[finite], side="left") + 1
        ranks_flat = np.searchsorted(self.boundaries, first_pos, side="left") + 1
        out = np.zeros(values.shape, dtype=np.int8)
        out[finite] = np.minimum(ranks_flat, 5).astype(np.int8)
        return out

    def apply_to_layer(
        self, raw: RawLayer, aspect: str, timestep: Optional[int] = None
    ) -> AspectLayer:
        return AspectLayer(raw.grid, self.apply(raw.values), aspect, timestep)


def rank_quintiles(
    raw: RawLayer, aspect: str, timestep: Optional[int] = None
) -> AspectLayer:
    """Rank one raw layer into quintiles against its own values."""
    cut = QuintileCut.fit(raw.values)
    return cut.apply_to_layer(raw, aspect, timestep)


# ---------------------------------------------------------------------------
# composition


def compose(layers: Sequence[AspectLayer], weights: VRIWeights) -> VulnerabilityMap:
    """Per-cell V = qd*pd + qa*pa + qb*pb over the three aspect ranks.

    Exactly one layer per aspect, all on one grid; any nodata rank makes
    the cell nodata.  The map carries the activity layer's timestep.
    """
    by_aspect = {}
    for layer in layers:
        if layer.aspect in by_aspect:
            raise ValueError(f"duplicate layer for aspect {layer.aspect!r}")
        by_aspect[layer.aspect] = layer
    missing = [a for a in ASPECTS if a not in by_aspect]
    if missing:
        raise ValueError(f"missing layers for aspects: {missing}")
    demographic = by_aspect["demographic"]
    activity = by_aspect["activity"]
    env = by_aspect["building_env"]
    for layer in (activity, env):
        if layer.grid != demographic.grid:
            raise ValueError(
                f"grid mismatch: {layer.aspect} uses {layer.grid.to_dict()}, "
                f"demographic uses {demographic.grid.to_dict()}"
            )
    q = weights
    stack = np.stack([demographic.ranks, activity.ranks, env.ranks]).astype(float)
    values = q.qd * stack[0] + q.qa * stack[1] + q.qb * stack[2]
    values[np.any(stack == NODATA_RANK, axis=0)] = np.nan
    return VulnerabilityMap(
        grid=demographic.grid,
        values=values,
        weights=weights,
        timestep=activity.timestep,
    )
