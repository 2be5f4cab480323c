"""Parsers for all external inputs.

Every parser takes raw bytes (or a path), validates against the
documented file dialects, and returns domain objects plus a report of
what was dropped and why.  Parsing is deterministic and pure; the
serialize_* functions emit the normalized forms, and
parse(serialize(x)) == x for any valid object list.

File dialects:
  diaries       CSV  person_id,weight,start_min,duration_min,code,attr:*
  buildings     GeoJSON FeatureCollection, properties.type plus
                type-specific and environment properties
  demographics  CSV  zone_id,population,share_*
  gps           CSV  person_id,t_min,x,y
  zones         GeoJSON FeatureCollection, properties.zone_id, Polygon
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from shapely.geometry import shape as shapely_shape
from shapely.geometry import Point, Polygon

from vrimap.activities import Activity, MINUTES_PER_DAY
from vrimap.allocation import (
    Building,
    SCHOOL_LEVELS,
    building_problem,
)

Source = Union[bytes, str]


def _text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    return source


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class DiaryEntry:
    """One diary episode, mapped to its canonical activity class."""

    start_min: int
    duration_min: int
    activity: Activity

    @property
    def end_min(self) -> int:
        return self.start_min + self.duration_min


@dataclass(frozen=True)
class DiaryRecord:
    """One person-day of activity episodes.

    Entries are sorted, non-overlapping, and cover the whole day (gaps
    are filled with the residual class at parse time).  The raw source
    codes are resolved to canonical classes during parsing, so the
    normalized serialized form round-trips exactly.
    """

    person_id: str
    sample_weight: float
    entries: tuple[DiaryEntry, ...]
    attributes: "frozenset[tuple[str, str]]"

    @property
    def attribute_map(self) -> dict[str, str]:
        return dict(sorted(self.attributes))


@dataclass(frozen=True)
class ActivityCodeMap:
    """First-match-wins prefix rules collapsing source codes to classes.

    The last rule must be a catch-all (empty prefix).
    """

    rules: tuple[tuple[str, Activity], ...]

    def __post_init__(self) -> None:
        if not self.rules:
            raise ValueError("code map needs at least a catch-all rule")
        if self.rules[-1][0] != "":
            raise ValueError("code map must end with a catch-all (empty prefix) rule")

    def resolve(self, code: str) -> Activity:
        for prefix, act in self.rules:
            if code.startswith(prefix):
                return act
        raise AssertionError("unreachable: catch-all rule matches everything")


def canonical_code_map() -> ActivityCodeMap:
    """Identity rules for the canonical c01..c08 codes."""
    rules = tuple((a.code, a) for a in Activity) + (("", Activity.OTHER),)
    return ActivityCodeMap(rules)


def default_code_map() -> ActivityCodeMap:
    """Shipped collapse of 6-digit time-use survey codes to the 8 classes.

    First-match-wins: canonical codes pass through, health-related self
    care splits from the rest of personal care, travel and uncodable
    time fall into the residual class.  Override per project when the
    source uses a different lexicon.
    """
    t = [(a.code, a) for a in Activity]
    t += [
        ("0103", Activity.ESSENTIAL_HEALTH),    # health-related self care
        ("01", Activity.BIOLOGICAL_NEEDS),      # sleeping, grooming
        ("02", Activity.HOUSEHOLD_MANAGEMENT),  # household activities
        ("03", Activity.PERSONAL_OBLIGATIONS),  # household member care
        ("04", Activity.PERSONAL_OBLIGATIONS),  # non-household care
        ("05", Activity.WORKING),
        ("06", Activity.EDUCATION),
        ("07", Activity.PERSONAL_OBLIGATIONS),  # consumer purchases
        ("08", Activity.PERSONAL_OBLIGATIONS),  # professional services
        ("09", Activity.HOUSEHOLD_MANAGEMENT),  # household services
        ("10", Activity.PERSONAL_OBLIGATIONS),  # government services
        ("11", Activity.BIOLOGICAL_NEEDS),      # eating and drinking
        ("12", Activity.PERSONAL_PREFERENCE),   # socializing, leisure
        ("13", Activity.PERSONAL_PREFERENCE),   # sports and recreation
        ("14", Activity.PERSONAL_PREFERENCE),   # religious, spiritual
        ("15", Activity.PERSONAL_PREFERENCE),   # volunteering
        ("16", Activity.PERSONAL_OBLIGATIONS),  # telephone calls
        ("18", Activity.OTHER),                 # traveling
        ("50", Activity.OTHER),                 # uncodable
        ("", Activity.OTHER),
    ]
    return ActivityCodeMap(tuple(t))


@dataclass(frozen=True)
class ZoneDemographics:
    """Zone population and demographic shares (fractions in [0, 1])."""

    zone_id: str
    population: int
    shares: "frozenset[tuple[str, float]]"

    def __post_init__(self) -> None:
        if self.population < 0:
            raise ValueError(f"zone {self.zone_id}: negative population")
        school_total = 0.0
        for name, value in self.shares:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"zone {self.zone_id}: {name}={value} outside [0, 1]")
            if name in _SCHOOL_SHARE_KEYS:
                school_total += value
        if school_total > 1.0 + 1e-9:
            raise ValueError(
                f"zone {self.zone_id}: school-level shares sum to {school_total} > 1"
            )
        object.__setattr__(self, "_share_map", dict(self.shares))

    @property
    def share_map(self) -> dict[str, float]:
        return dict(sorted(self.shares))

    def share(self, name: str, default: float = 0.0) -> float:
        return self._share_map.get(name, default)


_SCHOOL_SHARE_KEYS = frozenset(f"share_school_{level}" for level in SCHOOL_LEVELS)


@dataclass(frozen=True)
class TimeLocationPath:
    """Per-person GPS fixes: (minutes since midnight, x, y), strictly
    increasing timestamps.  A single fix is allowed after duplicate
    collapsing."""

    person_id: str
    points: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError(f"path {self.person_id}: no points")
        times = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"path {self.person_id}: timestamps not strictly increasing")


@dataclass(frozen=True)
class Zone:
    """Zone polygon in the project's planar frame."""

    zone_id: str
    polygon: Polygon

    def contains_point(self, x: float, y: float) -> bool:
        return self.polygon.covers(Point(x, y))


@dataclass
class ParseReport:
    """What a parser kept and dropped, with per-reason counts."""

    records_kept: int = 0
    rows_dropped: int = 0
    records_dropped: int = 0
    reasons: dict[str, int] = field(default_factory=dict)

    def drop_row(self, reason: str) -> None:
        self.rows_dropped += 1
        self.reasons[reason] = self.reasons.get(reason, 0) + 1

    def drop_record(self, reason: str) -> None:
        self.records_dropped += 1
        self.reasons[reason] = self.reasons.get(reason, 0) + 1


# ---------------------------------------------------------------------------
# diaries


_DIARY_FIXED_COLUMNS = ["person_id", "weight", "start_min", "duration_min", "code"]


def parse_diaries(
    source: Source, code_map: ActivityCodeMap
) -> tuple[list[DiaryRecord], ParseReport]:
    """Parse the diary CSV into per-person records.

    Bad rows (non-numeric fields, duration < 1, start outside the day)
    are dropped and counted; a person whose surviving entries overlap is
    dropped whole.  Uncovered minutes are filled with the residual class
    so every record covers the full day.
    """
    report = ParseReport()
    reader = csv.reader(io.StringIO(_text(source)))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("diary file is empty") from None
    if header[: len(_DIARY_FIXED_COLUMNS)] != _DIARY_FIXED_COLUMNS:
        raise ValueError(
            f"malformed diary header: expected {_DIARY_FIXED_COLUMNS} + attr:* columns, "
            f"got {header}"
        )
    attr_names = []
    for col in header[len(_DIARY_FIXED_COLUMNS):]:
        if not col.startswith("attr:"):
            raise ValueError(f"malformed diary header: unexpected column {col!r}")
        attr_names.append(col[len("attr:"):])

    people: dict[str, dict] = {}
    for row in reader:
        if not row or all(not c for c in row):
            continue
        if len(row) != len(header):
            report.drop_row("wrong column count")
            continue
        person_id = row[0]
        try:
            weight = float(row[1])
            start = int(row[2])
            duration = int(row[3])
        except ValueError:
            report.drop_row("non-numeric field")
            continue
        code = row[4]
        if duration < 1:
            report.drop_row("duration below 1 minute")
            continue
        if not 0 <= start < MINUTES_PER_DAY:
            report.drop_row("start outside the day")
            continue
        if start + duration > MINUTES_PER_DAY:
            duration = MINUTES_PER_DAY - start  # clip the day's last episode
        entry = DiaryEntry(start, duration, code_map.resolve(code))
        person = people.setdefault(
            person_id,
            {
                "weight": weight,
                "attrs": {
                    name: row[len(_DIARY_FIXED_COLUMNS) + i]
                    for i, name in enumerate(attr_names)
                    if row[len(_DIARY_FIXED_COLUMNS) + i] != ""
                },
                "entries": [],
            },
        )
        person["entries"].append(entry)

    records = []
    for person_id, data in people.items():
        if data["weight"] < 0:
            report.drop_record("negative weight")
            continue
        entries = sorted(data["entries"], key=lambda e: (e.start_min, e.duration_min))
        if any(a.end_min > b.start_min for a, b in zip(entries, entries[1:])):
            report.drop_record("overlapping entries")
            continue
        records.append(
            DiaryRecord(
                person_id=person_id,
                sample_weight=data["weight"],
                entries=_fill_gaps(entries),
                attributes=frozenset(data["attrs"].items()),
            )
        )
        report.records_kept += 1
    return records, report


def _fill_gaps(entries: list[DiaryEntry]) -> tuple[DiaryEntry, ...]:
    """Cover uncovered minutes with the residual class."""
    out: list[DiaryEntry] = []
    cursor = 0
    for e in entries:
        if e.start_min > cursor:
            out.append(DiaryEntry(cursor, e.start_min - cursor, Activity.OTHER))
        out.append(e)
        cursor = e.end_min
    if cursor < MINUTES_PER_DAY:
        out.append(DiaryEntry(cursor, MINUTES_PER_DAY - cursor, Activity.OTHER))
    return tuple(out)


def serialize_diaries(records: Sequence[DiaryRecord]) -> bytes:
    """Normalized diary CSV: canonical class codes, sorted attr columns."""
    attr_names = sorted({name for r in records for name, _ in r.attributes})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_DIARY_FIXED_COLUMNS + [f"attr:{n}" for n in attr_names])
    for r in records:
        attrs = r.attribute_map
        for e in r.entries:
            writer.writerow(
                [
                    r.person_id,
                    repr(r.sample_weight),
                    e.start_min,
                    e.duration_min,
                    e.activity.code,
                ]
                + [attrs.get(n, "") for n in attr_names]
            )
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# buildings


_ENV_PROPERTIES = ("year_built", "floor_area_m2", "construction", "glazing", "energy_structure")

_TYPE_PROPERTIES = {
    "residential": ("bedrooms", "vacancy_rate"),
    "business": ("gross_floor_area", "worker_density"),
    "mercantile": ("capacity",),
    "public_service": ("capacity",),
    "assembly": ("capacity",),
    "education": ("capacity", "school_level"),
}


def parse_buildings(source: Source) -> tuple[list[Building], list[tuple[str, str]]]:
    """Parse the building GeoJSON.

    Returns accepted buildings plus (building id or feature index,
    reason) for every rejected feature.  The centroid comes from the
    feature geometry; coordinates are already planar.
    """
    try:
        doc = json.loads(_text(source))
    except json.JSONDecodeError as exc:
        raise ValueError(f"building file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ValueError("building file must be a GeoJSON FeatureCollection")

    accepted: list[Building] = []
    rejected: list[tuple[str, str]] = []
    seen: set[str] = set()
    for i, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        label = str(props.get("building_id", f"feature[{i}]"))
        try:
            b = _building_from_feature(feature, props)
        except ValueError as exc:
            rejected.append((label, str(exc)))
            continue
        problem = building_problem(b)
        if problem is not None:
            rejected.append((label, problem))
            continue
        if b.building_id in seen:
            rejected.append((label, "duplicate building_id"))
            continue
        seen.add(b.building_id)
        accepted.append(b)
    return accepted, rejected


def _building_from_feature(feature: dict, props: dict) -> Building:
    if "building_id" not in props:
        raise ValueError("missing building_id")
    btype = props.get("type")
    if btype is None:
        raise ValueError("missing type")
    geometry = feature.get("geometry")
    if geometry is None:
        raise ValueError("missing geometry")
    centroid = shapely_shape(geometry).centroid
    for name in _ENV_PROPERTIES:
        if name not in props:
            raise ValueError(f"missing {name}")

    def number(name: str) -> Optional[float]:
        if name not in props:
            raise ValueError(f"missing {name}")
        value = props[name]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValueError(f"non-numeric {name}")
        return float(value)

    kwargs: dict = {}
    for name in _TYPE_PROPERTIES.get(btype, ()):
        if name == "school_level":
            if name not in props:
                raise ValueError("missing school_level")
            kwargs[name] = props[name]
        else:
            kwargs[name] = number(name)
    return Building(
        building_id=str(props["building_id"]),
        btype=btype,
        x=float(centroid.x),
        y=float(centroid.y),
        zone_id=str(props.get("zone_id", "")),
        year_built=int(number("year_built")),
        floor_area_m2=number("floor_area_m2"),
        construction=str(props["construction"]),
        glazing=str(props["glazing"]),
        energy_structure=str(props["energy_structure"]),
        **kwargs,
    )


def serialize_buildings(buildings: Sequence[Building]) -> bytes:
    """Normalized building GeoJSON (Point geometry at the centroid)."""
    features = []
    for b in buildings:
        props = {
            "building_id": b.building_id,
            "type": b.btype,
            "zone_id": b.zone_id,
            "year_built": b.year_built,
            "floor_area_m2": b.floor_area_m2,
            "construction": b.construction,
            "glazing": b.glazing,
            "energy_structure": b.energy_structure,
        }
        for name in _TYPE_PROPERTIES[b.btype]:
            props[name] = getattr(b, name)
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [b.x, b.y]},
                "properties": props,
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


# ---------------------------------------------------------------------------
# demographics


def parse_demographics(source: Source) -> tuple[list[ZoneDemographics], ParseReport]:
    """Parse the zone demographics CSV (zone_id,population,share_*)."""
    report = ParseReport()
    reader = csv.reader(io.StringIO(_text(source)))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("demographics file is empty") from None
    if header[:2] != ["zone_id", "population"] or any(
        not c.startswith("share_") for c in header[2:]
    ):
        raise ValueError(
            f"malformed demographics header: expected zone_id,population,share_*, got {header}"
        )
    share_names = header[2:]
    zones = []
    for row in reader:
        if not row or all(not c for c in row):
            continue
        if len(row) != len(header):
            report.drop_row("wrong column count")
            continue
        try:
            population = int(row[1])
            shares = {n: float(v) for n, v in zip(share_names, row[2:]) if v != ""}
        except ValueError:
            report.drop_row("non-numeric field")
            continue
        try:
            zone = ZoneDemographics(row[0], population, frozenset(shares.items()))
        except ValueError as exc:
            report.drop_row(str(exc))
            continue
        zones.append(zone)
        report.records_kept += 1
    return zones, report


def serialize_demographics(zones: Sequence[ZoneDemographics]) -> bytes:
    share_names = sorted({name for z in zones for name, _ in z.shares})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["zone_id", "population"] + share_names)
    for z in zones:
        shares = z.share_map
        writer.writerow(
            [z.zone_id, z.population]
            + [repr(shares[n]) if n in shares else "" for n in share_names]
        )
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# GPS traces


def parse_gps(source: Source) -> tuple[list[TimeLocationPath], ParseReport]:
    """Parse the GPS trace CSV (person_id,t_min,x,y).

    Duplicate timestamps within a person collapse to the last row; a
    person whose collapsed fixes are out of order is dropped.
    """
    report = ParseReport()
    reader = csv.reader(io.StringIO(_text(source)))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("gps file is empty") from None
    if header != ["person_id", "t_min", "x", "y"]:
        raise ValueError(f"malformed gps header: expected person_id,t_min,x,y, got {header}")
    fixes: dict[str, list[tuple[float, float, float]]] = {}
    for row in reader:
        if not row or all(not c for c in row):
            continue
        if len(row) != 4:
            report.drop_row("wrong column count")
            continue
        try:
            t, x, y = float(row[1]), float(row[2]), float(row[3])
        except ValueError:
            report.drop_row("non-numeric field")
            continue
        fixes.setdefault(row[0], []).append((t, x, y))

    paths = []
    for person_id, points in fixes.items():
        collapsed: list[tuple[float, float, float]] = []
        for p in points:
            if collapsed and collapsed[-1][0] == p[0]:
                collapsed[-1] = p  # duplicate timestamp: last wins
            else:
                collapsed.append(p)
        times = [p[0] for p in collapsed]
        if any(b <= a for a, b in zip(times, times[1:])):
            report.drop_record("non-monotonic timestamps")
            continue
        paths.append(TimeLocationPath(person_id, tuple(collapsed)))
        report.records_kept += 1
    return paths, report


def serialize_gps(paths: Sequence[TimeLocationPath]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["person_id", "t_min", "x", "y"])
    for path in paths:
        for t, x, y in path.points:
            writer.writerow([path.person_id, repr(t), repr(x), repr(y)])
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# zones


def parse_zones(source: Source) -> list[Zone]:
    """Parse the zone polygon GeoJSON (properties.zone_id, Polygon)."""
    try:
        doc = json.loads(_text(source))
    except json.JSONDecodeError as exc:
        raise ValueError(f"zone file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ValueError("zone file must be a GeoJSON FeatureCollection")
    zones = []
    for i, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        if "zone_id" not in props:
            raise ValueError(f"zone feature[{i}] missing zone_id")
        geom = shapely_shape(feature.get("geometry"))
        if geom.geom_type not in ("Polygon", "MultiPolygon"):
            raise ValueError(f"zone {props['zone_id']}: geometry must be a polygon")
        zones.append(Zone(str(props["zone_id"]), geom))
    return sorted(zones, key=lambda z: z.zone_id)
