"""Population-to-building allocation.

Maps each time step's activity-resolved population mass onto specific
buildings.  Residential and business buildings take mass proportionally
to an allocation weight (bedrooms net of vacancy, floor area times
worker density).  Capacity-typed buildings (mercantile, public service,
assembly, education) are filled by equal-level water-filling: mass
pours into all buildings of the type at the same rate, each building
caps at its capacity, and overflow keeps pouring into the remaining
headroom.  Education mass is first split across school levels by the
community's demographic school-level shares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from vrimap.activities import (
    Activity,
    N_CLASSES,
    STEPS_PER_DAY,
    step_midpoint_minutes,
)

BUILDING_TYPES = (
    "residential",
    "business",
    "mercantile",
    "public_service",
    "assembly",
    "education",
)

# types whose per-building total is capped at `capacity`
CAPACITY_TYPES = ("mercantile", "public_service", "assembly", "education")

SCHOOL_LEVELS = ("primary", "middle", "high", "college")

ENERGY_STRUCTURES = ("all_electric", "mixed", "non_electric")

_MASS_EPS = 1e-12


@dataclass(frozen=True)
class Building:
    """One building with allocation and environment attributes.

    Type-specific allocation attributes are None unless required by the
    building's type; `building_problem` reports which constraint a
    candidate violates.
    """

    building_id: str
    btype: str
    x: float
    y: float
    zone_id: str
    # environment attributes (all types)
    year_built: int
    floor_area_m2: float
    construction: str
    glazing: str
    energy_structure: str
    # type-specific allocation attributes
    bedrooms: Optional[float] = None
    vacancy_rate: Optional[float] = None
    gross_floor_area: Optional[float] = None
    worker_density: Optional[float] = None
    capacity: Optional[float] = None
    school_level: Optional[str] = None


def building_problem(b: Building) -> Optional[str]:
    """Reason the building violates its type contract, or None if valid."""
    if b.btype not in BUILDING_TYPES:
        return f"unknown type code {b.btype!r}"
    if b.energy_structure not in ENERGY_STRUCTURES:
        return f"unknown energy_structure {b.energy_structure!r}"
    if b.floor_area_m2 < 0:
        return "negative floor_area_m2"
    if b.btype == "residential":
        if b.bedrooms is None:
            return "missing bedrooms"
        if b.bedrooms < 0:
            return "negative bedrooms"
        if b.vacancy_rate is None:
            return "missing vacancy_rate"
        if not 0.0 <= b.vacancy_rate <= 1.0:
            return "vacancy_rate outside [0, 1]"
    elif b.btype == "business":
        if b.gross_floor_area is None:
            return "missing gross_floor_area"
        if b.gross_floor_area <= 0:
            return "non-positive gross_floor_area"
        if b.worker_density is None:
            return "missing worker_density"
        if b.worker_density <= 0:
            return "non-positive worker_density"
    else:
        if b.capacity is None:
            return "missing capacity"
        if b.capacity < 0:
            return "negative capacity"
        if b.btype == "education":
            if b.school_level is None:
                return "missing school_level"
            if b.school_level not in SCHOOL_LEVELS:
                return f"unknown school_level {b.school_level!r}"
    return None


def allocation_weight(b: Building) -> float:
    """How strongly a building attracts mass of its type.

    residential: bedrooms x (1 - vacancy_rate); business: gross floor
    area x worker density; capacity types: the capacity itself.
    """
    if b.btype == "residential":
        return b.bedrooms * (1.0 - b.vacancy_rate)
    if b.btype == "business":
        return b.gross_floor_area * b.worker_density
    return float(b.capacity)


@dataclass(frozen=True)
class ActivityPlacementTable:
    """Per-activity split of population mass across building types.

    `shares[a]` is an ordered (btype, share) list.  A class with an
    empty list is placed nowhere: its mass is tracked as unplaced by
    design (travel/outside time).  Nonempty share lists must sum to 1.
    """

    shares: Mapping[Activity, tuple[tuple[str, float], ...]]

    def __post_init__(self) -> None:
        for a in Activity:
            if a not in self.shares:
                raise ValueError(f"placement table missing class {a.code}")
        for a, rules in self.shares.items():
            for btype, share in rules:
                if btype not in BUILDING_TYPES:
                    raise ValueError(
                        f"placement for {a.code} names unknown building type {btype!r}"
                    )
                if not 0.0 <= share <= 1.0:
                    raise ValueError(
                        f"placement share for {a.code}->{btype} outside [0, 1]"
                    )
            if rules:
                total = sum(s for _, s in rules)
                if abs(total - 1.0) > 1e-9:
                    raise ValueError(
                        f"placement shares for {a.code} sum to {total}, expected 1"
                    )

    def share(self, a: Activity, btype: str) -> float:
        return dict(self.shares[a]).get(btype, 0.0)

    def classes_for_btype(self, btype: str) -> list[Activity]:
        """Classes whose placement includes this building type."""
        return [
            a
            for a in Activity
            if any(bt == btype and s > 0 for bt, s in self.shares[a])
        ]


@dataclass(frozen=True, eq=False)
class OccupancyField:
    """Expected occupants per (time step, building, activity class).

    counts[t, b, a] are fractional expected occupants; unplaced[t, a]
    is mass that found no building (by placement design or because
    every candidate building was at capacity).
    """

    building_ids: tuple[str, ...]
    counts: np.ndarray        # (96, n_buildings, 8) float
    unplaced: np.ndarray      # (96, 8) float
    total_population: float

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=float)
        unplaced = np.asarray(self.unplaced, dtype=float)
        if counts.shape != (STEPS_PER_DAY, len(self.building_ids), N_CLASSES):
            raise ValueError(f"counts shape {counts.shape} does not match")
        if unplaced.shape != (STEPS_PER_DAY, N_CLASSES):
            raise ValueError(f"unplaced shape {unplaced.shape} does not match")
        counts.setflags(write=False)
        unplaced.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "unplaced", unplaced)
        object.__setattr__(self, "_index", {b: i for i, b in enumerate(self.building_ids)})

    def building_index(self, building_id: str) -> int:
        return self._index[building_id]

    def step_total(self, t: int) -> float:
        """Placed plus unplaced mass at step t."""
        return float(self.counts[t].sum() + self.unplaced[t].sum())

    def building_totals(self, t: int) -> np.ndarray:
        return self.counts[t].sum(axis=1)


def water_fill(capacities: Sequence[float], masses: Sequence[float]) -> np.ndarray:
    """Equal-level fill of `masses` into vessels of the given capacities.

    Returns fills of shape (len(masses), len(capacities)).  Every vessel
    receives min(capacity, level) where the common level makes the fills
    sum to the mass; mass beyond the total capacity is left to the
    caller as overflow.
    """
    c = np.asarray(capacities, dtype=float)
    m = np.atleast_1d(np.asarray(masses, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise ValueError("water_fill needs at least one vessel")
    if (c < 0).any():
        raise ValueError("negative capacity")
    order = np.argsort(c, kind="stable")
    cs = c[order]
    csum = np.cumsum(cs)
    total = csum[-1]
    n = cs.size
    # mass at which the k-th smallest vessel (sorted) reaches its cap
    thresholds = csum + cs * (n - 1 - np.arange(n))
    mc = np.minimum(m, total)
    k = np.searchsorted(thresholds, mc, side="left")
    k = np.minimum(k, n - 1)
    prev = np.where(k > 0, csum[np.maximum(k - 1, 0)], 0.0)
    level = (mc - prev) / (n - k)
    fills = np.minimum(cs[None, :], level[:, None])
    out = np.empty_like(fills)
    out[:, order] = fills
    return out


def _community_level_shares(
    demographics: Sequence["ZoneDemographics"],
    levels_present: Sequence[str],
) -> dict[str, float]:
    """Population-weighted school-level shares, renormalized over the
    levels that actually have buildings."""
    raw = {level: 0.0 for level in SCHOOL_LEVELS}
    pop_total = 0.0
    for zone in demographics:
        pop = float(zone.population)
        pop_total += pop
        for level in SCHOOL_LEVELS:
            raw[level] += pop * zone.share(f"share_school_{level}")
    if pop_total > 0:
        for level in SCHOOL_LEVELS:
            raw[level] /= pop_total
    present_total = sum(raw[level] for level in levels_present)
    if present_total <= 0:
        # no demographic signal for the available levels: split evenly
        return {level: 1.0 / len(levels_present) for level in levels_present}
    return {level: raw[level] / present_total for level in levels_present}


def allocate(
    traj: "TrajectoryMatrix",
    population: float,
    buildings: Sequence[Building],
    table: ActivityPlacementTable,
    demographics: Sequence["ZoneDemographics"],
) -> OccupancyField:
    """Distribute N x traj[t][a] expected people onto buildings.

    Mass splits across building types by the placement table, then
    within a type: proportionally to allocation weight for residential
    and business buildings, by equal-level water-filling against
    capacity for capacity-typed buildings.  Education mass is split
    across school levels by demographic shares before filling; overflow
    from a full level respills into the remaining education headroom.
    Mass that cannot be placed is reported in `unplaced`, never dropped.
    """
    if population < 0:
        raise ValueError("population must be nonnegative")
    ids = tuple(b.building_id for b in buildings)
    by_type: dict[str, list[int]] = {bt: [] for bt in BUILDING_TYPES}
    for i, b in enumerate(buildings):
        problem = building_problem(b)
        if problem is not None:
            raise ValueError(f"invalid building {b.building_id}: {problem}")
        by_type[b.btype].append(i)

    # validate every routed (class, btype) has somewhere to put mass
    for a in Activity:
        for btype, share in table.shares[a]:
            if share <= 0:
                continue
            idx = by_type[btype]
            total_w = sum(allocation_weight(buildings[i]) for i in idx)
            if not idx or total_w <= 0:
                raise ValueError(
                    f"class {a.code} routes to {btype} but that type has "
                    f"zero total allocation weight"
                )

    mass = population * traj.values  # (96, 8)
    counts = np.zeros((STEPS_PER_DAY, len(buildings), N_CLASSES))
    unplaced = np.zeros((STEPS_PER_DAY, N_CLASSES))

    # classes routed nowhere: whole mass is unplaced by design
    for a in Activity:
        if not table.shares[a]:
            unplaced[:, a] += mass[:, a]

    for btype in BUILDING_TYPES:
        incoming = np.zeros((STEPS_PER_DAY, N_CLASSES))
        for a in Activity:
            share = table.share(a, btype)
            if share > 0:
                incoming[:, a] = mass[:, a] * share
        totals = incoming.sum(axis=1)  # (96,)
        if totals.max(initial=0.0) <= 0:
            continue
        idx = by_type[btype]
        frac = np.divide(
            incoming,
            totals[:, None],
            out=np.zeros_like(incoming),
            where=totals[:, None] > 0,
        )  # per-class composition of the type's pooled mass

        if btype in ("residential", "business"):
            w = np.array([allocation_weight(buildings[i]) for i in idx])
            w = w / w.sum()
            counts[:, idx, :] += totals[:, None, None] * w[None, :, None] * frac[:, None, :]
            continue

        if btype == "education":
            levels_present = sorted({buildings[i].school_level for i in idx})
            shares = _community_level_shares(demographics, levels_present)
            placed = _fill_education(buildings, idx, totals, shares)
        else:
            caps = np.array([buildings[i].capacity for i in idx], dtype=float)
            placed = water_fill(caps, totals)
        counts[:, idx, :] += placed[:, :, None] * frac[:, None, :]
        leftover = totals - placed.sum(axis=1)
        leftover[leftover < _MASS_EPS] = 0.0
        unplaced += leftover[:, None] * frac

    return OccupancyField(
        building_ids=ids,
        counts=counts,
        unplaced=unplaced,
        total_population=float(population),
    )


def _fill_education(
    buildings: Sequence[Building],
    idx: Sequence[int],
    totals: np.ndarray,
    level_shares: Optional[Mapping[str, float]] = None,
) -> np.ndarray:
    """Water-fill education mass per school level, then respill overflow
    into whatever education headroom remains."""
    levels_present = sorted({buildings[i].school_level for i in idx})
    if level_shares is None:
        level_shares = {lv: 1.0 / len(levels_present) for lv in levels_present}
    caps = np.array([buildings[i].capacity for i in idx], dtype=float)
    placed = np.zeros((len(totals), len(idx)))
    for level in levels_present:
        sel = np.array([buildings[i].school_level == level for i in idx])
        if not sel.any():
            continue
        level_mass = totals * level_shares[level]
        placed[:, sel] = water_fill(caps[sel], level_mass)
    residual = totals - placed.sum(axis=1)
    for t in np.nonzero(residual > _MASS_EPS)[0]:
        headroom = caps - placed[t]
        if headroom.sum() <= 0:
            continue
        placed[t] += water_fill(headroom, [residual[t]])[0]
    return placed


def join_gps(
    paths: Sequence["TimeLocationPath"],
    traj: "TrajectoryMatrix",
    buildings: Sequence[Building],
    table: Optional[ActivityPlacementTable] = None,
    radius: float = 100.0,
) -> dict[str, list[tuple[Activity, Optional[str]]]]:
    """Assign each person's 96 steps to (activity class, building).

    Per step the position is the last GPS fix at or before the step
    midpoint (the first fix when none precedes it); the building is the
    nearest centroid within `radius`, ties going to the lexicographically
    lower building id; the class is the most probable class at that step
    among classes whose placement includes the building's type, falling
    back to the step's argmax class.  Steps with no building in range
    keep the argmax class paired with None.
    """
    if not paths:
        raise ValueError("no GPS paths")
    if not buildings:
        raise ValueError("no buildings")
    order = sorted(range(len(buildings)), key=lambda i: buildings[i].building_id)
    cx = np.array([buildings[i].x for i in order])
    cy = np.array([buildings[i].y for i in order])
    rows = traj.values
    out: dict[str, list[tuple[Activity, Optional[str]]]] = {}
    for path in paths:
        times = np.array([p[0] for p in path.points], dtype=float)
        steps: list[tuple[Activity, Optional[str]]] = []
        for t in range(STEPS_PER_DAY):
            mid = step_midpoint_minutes(t)
            fix = int(np.searchsorted(times, mid, side="right")) - 1
            if fix < 0:
                fix = 0
            _, x, y = path.points[fix]
            d2 = (cx - x) ** 2 + (cy - y) ** 2
            nearest = int(np.argmin(d2))  # first minimum = lowest id
            fallback = Activity(int(np.argmax(rows[t])))
            if math.sqrt(d2[nearest]) > radius:
                steps.append((fallback, None))
                continue
            b = buildings[order[nearest]]
            candidates = table.classes_for_btype(b.btype) if table else []
            if candidates:
                best = max(candidates, key=lambda a: (rows[t][a], -int(a)))
                steps.append((best, b.building_id))
            else:
                steps.append((fallback, b.building_id))
        out[path.person_id] = steps
    return out


def largest_remainder_round(values: Sequence[float], total: Optional[int] = None) -> np.ndarray:
    """Round nonnegative values to integers preserving their sum.

    Floors every value, then hands the remaining units to the largest
    fractional parts (ties to the lowest index).  Display helper: the
    engine itself works on fractional expected counts.
    """
    v = np.asarray(values, dtype=float)
    if (v < 0).any():
        raise ValueError("negative value")
    if total is None:
        total = int(round(v.sum()))
    base = np.floor(v).astype(int)
    remainder = total - int(base.sum())
    if remainder < 0:
        raise ValueError(f"total {total} below the sum of floors {base.sum()}")
    frac = v - np.floor(v)
    order = np.lexsort((np.arange(v.size), -frac))
    base[order[:remainder]] += 1
    return base
