"""Deterministic synthetic county generator.

Builds a small but complete input bundle — diaries, buildings, zone
polygons, zone demographics, GPS traces, and a project config — on a
2 km x 2 km site (20x20 grid of 100 m cells, 4x4 zones of 500 m).
Everything derives from one seed, so repeated builds are identical and
the full pipeline on the bundle is a fast, reproducible end-to-end
fixture.

The diary generator encodes ordinary diurnal structure: nearly everyone
sleeps through the small hours (so overnight steps are dominated by
biological needs), workers commute to daytime jobs, students attend
school, and evenings mix dinner, errands, and leisure.  Codes follow
the 6-digit lexicon the default code map collapses.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

SITE_SIZE = 2000.0
ZONE_SIZE = 500.0
N_ZONES_SIDE = 4
N_PEOPLE = 2000
N_GPS_PEOPLE = 30

# 6-digit source codes by role in the synthetic day
CODE_SLEEP = "010101"
CODE_GROOM = "010201"
CODE_HEALTH = "010301"
CODE_HOUSEHOLD = "020101"
CODE_CARE = "030101"
CODE_WORK = "050101"
CODE_SCHOOL = "060101"
CODE_ERRAND = "070101"
CODE_EAT = "110101"
CODE_TV = "120303"
CODE_SPORT = "130101"
CODE_TRAVEL = "180501"


def build_county(out_dir, seed: int = 42) -> dict:
    """Write the full bundle into out_dir; returns the file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))

    paths = {
        "diaries": out_dir / "diaries.csv",
        "buildings": out_dir / "buildings.geojson",
        "demographics": out_dir / "demographics.csv",
        "zones": out_dir / "zones.geojson",
        "gps": out_dir / "gps.csv",
        "config": out_dir / "config.yaml",
    }
    buildings = _make_buildings(rng)
    paths["buildings"].write_bytes(_buildings_geojson(buildings))
    paths["zones"].write_bytes(_zones_geojson())
    paths["demographics"].write_bytes(_demographics_csv(rng))
    paths["diaries"].write_bytes(_diaries_csv(rng))
    paths["gps"].write_bytes(_gps_csv(rng, buildings))
    paths["config"].write_bytes(_config_yaml(seed))
    return paths


# ---------------------------------------------------------------------------
# diaries


def _diaries_csv(rng: np.random.Generator) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["person_id", "weight", "start_min", "duration_min", "code", "attr:age_group", "attr:role"]
    )
    roles = rng.choice(
        ["worker", "student", "home", "night_worker"],
        size=N_PEOPLE,
        p=[0.55, 0.15, 0.28, 0.02],
    )
    for i in range(N_PEOPLE):
        person_id = f"P{i:04d}"
        weight = round(float(rng.lognormal(0.0, 0.3)), 4)
        role = roles[i]
        age_group = {
            "worker": "adult",
            "night_worker": "adult",
            "student": "young",
            "home": rng.choice(["adult", "senior"], p=[0.35, 0.65]),
        }[role]
        episodes = _day_episodes(rng, role)
        for start, duration, code in episodes:
            writer.writerow([person_id, weight, start, duration, code, age_group, role])
    return buf.getvalue().encode("utf-8")


def _day_episodes(rng: np.random.Generator, role: str) -> list:
    """One person-day as (start_min, duration_min, code) covering 0-1440."""

    def jitter(center: int, spread: int) -> int:
        return int(center + rng.integers(-spread, spread + 1))

    episodes: list = []
    cursor = 0

    def push(code: str, duration: int) -> None:
        nonlocal cursor
        remaining = 1440 - cursor
        if remaining <= 0:
            return
        duration = max(1, min(duration, remaining))
        episodes.append((cursor, duration, code))
        cursor += duration

    if role == "night_worker":
        push(CODE_WORK, jitter(400, 30))          # shift runs past midnight
        push(CODE_TRAVEL, jitter(25, 10))
        push(CODE_EAT, jitter(30, 10))
        push(CODE_SLEEP, jitter(420, 40))
        push(CODE_HOUSEHOLD, jitter(90, 30))
        push(CODE_EAT, jitter(40, 10))
        push(CODE_TV, jitter(120, 40))
        push(CODE_TRAVEL, jitter(25, 10))
        push(CODE_WORK, 1440 - cursor)
        return episodes

    push(CODE_SLEEP, jitter(395, 45))             # asleep from midnight
    push(CODE_GROOM, jitter(35, 10))
    push(CODE_EAT, jitter(25, 8))
    if role == "worker":
        push(CODE_TRAVEL, jitter(30, 12))
        push(CODE_WORK, jitter(240, 30))
        push(CODE_EAT, jitter(40, 10))
        push(CODE_WORK, jitter(240, 30))
        push(CODE_TRAVEL, jitter(30, 12))
        if rng.random() < 0.3:
            push(CODE_ERRAND, jitter(40, 15))
    elif role == "student":
        push(CODE_TRAVEL, jitter(25, 10))
        push(CODE_SCHOOL, jitter(200, 20))
        push(CODE_EAT, jitter(35, 10))
        push(CODE_SCHOOL, jitter(160, 20))
        push(CODE_TRAVEL, jitter(25, 10))
        push(CODE_SPORT, jitter(60, 25))
    else:  # home
        push(CODE_HOUSEHOLD, jitter(150, 40))
        if rng.random() < 0.35:
            push(CODE_HEALTH, jitter(45, 15))
        push(CODE_EAT, jitter(40, 10))
        push(CODE_ERRAND, jitter(70, 25))
        push(CODE_CARE, jitter(60, 25))
        push(CODE_TV, jitter(90, 30))
    push(CODE_EAT, jitter(45, 12))                # dinner
    push(CODE_TV, jitter(100, 35))
    push(CODE_GROOM, jitter(20, 6))
    push(CODE_SLEEP, 1440 - cursor)               # back to sleep
    return episodes


# ---------------------------------------------------------------------------
# buildings


_CONSTRUCTIONS = ["wood", "masonry", "concrete", "steel"]
_GLAZINGS = ["single", "double", "triple"]
_ENERGY = ["all_electric", "mixed", "non_electric"]


def _make_buildings(rng: np.random.Generator) -> list:
    counts = [
        ("residential", 380),
        ("business", 60),
        ("mercantile", 25),
        ("public_service", 15),
        ("assembly", 10),
        ("education", 10),
    ]
    school_levels = ["primary", "middle", "high", "college"]
    buildings = []
    n = 0
    for btype, count in counts:
        for _ in range(count):
            x = round(float(rng.uniform(20.0, SITE_SIZE - 20.0)), 1)
            y = round(float(rng.uniform(20.0, SITE_SIZE - 20.0)), 1)
            props = {
                "building_id": f"B{n:04d}",
                "type": btype,
                "zone_id": _zone_of(x, y),
                "year_built": int(rng.integers(1920, 2021)),
                "construction": str(rng.choice(_CONSTRUCTIONS, p=[0.35, 0.3, 0.25, 0.1])),
                "glazing": str(rng.choice(_GLAZINGS, p=[0.3, 0.55, 0.15])),
                "energy_structure": str(rng.choice(_ENERGY, p=[0.35, 0.5, 0.15])),
            }
            if btype == "residential":
                props["floor_area_m2"] = round(float(rng.uniform(80, 600)), 1)
                props["bedrooms"] = int(rng.integers(1, 6))
                props["vacancy_rate"] = round(float(rng.uniform(0.0, 0.15)), 3)
            elif btype == "business":
                props["floor_area_m2"] = round(float(rng.uniform(400, 6000)), 1)
                props["gross_floor_area"] = props["floor_area_m2"]
                props["worker_density"] = round(float(rng.uniform(0.01, 0.05)), 4)
            else:
                props["floor_area_m2"] = round(float(rng.uniform(300, 4000)), 1)
                props["capacity"] = int(rng.integers(30, 500))
                if btype == "education":
                    props["capacity"] = int(rng.integers(100, 1200))
                    props["school_level"] = str(
                        rng.choice(school_levels, p=[0.4, 0.25, 0.2, 0.15])
                    )
            buildings.append({"x": x, "y": y, "props": props})
            n += 1
    return buildings


def _zone_of(x: float, y: float) -> str:
    zr = min(int(y // ZONE_SIZE), N_ZONES_SIDE - 1)
    zc = min(int(x // ZONE_SIZE), N_ZONES_SIDE - 1)
    return f"Z{zr}{zc}"


def _buildings_geojson(buildings: list) -> bytes:
    features = [
        {
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [b["x"], b["y"]]},
            "properties": b["props"],
        }
        for b in buildings
    ]
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


# ---------------------------------------------------------------------------
# zones and demographics


def _zones_geojson() -> bytes:
    features = []
    for zr in range(N_ZONES_SIDE):
        for zc in range(N_ZONES_SIDE):
            x0, y0 = zc * ZONE_SIZE, zr * ZONE_SIZE
            x1, y1 = x0 + ZONE_SIZE, y0 + ZONE_SIZE
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]],
                    },
                    "properties": {"zone_id": f"Z{zr}{zc}"},
                }
            )
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _demographics_csv(rng: np.random.Generator) -> bytes:
    share_cols = [
        "share_disability",
        "share_low_income",
        "share_no_vehicle",
        "share_over_65",
        "share_renter",
        "share_school_college",
        "share_school_high",
        "share_school_middle",
        "share_school_primary",
        "share_under_5",
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["zone_id", "population"] + share_cols)
    for zr in range(N_ZONES_SIDE):
        for zc in range(N_ZONES_SIDE):
            row = {
                "share_disability": rng.uniform(0.05, 0.20),
                "share_low_income": rng.uniform(0.05, 0.35),
                "share_no_vehicle": rng.uniform(0.02, 0.25),
                "share_over_65": rng.uniform(0.08, 0.30),
                "share_renter": rng.uniform(0.10, 0.60),
                "share_school_college": rng.uniform(0.01, 0.08),
                "share_school_high": rng.uniform(0.02, 0.05),
                "share_school_middle": rng.uniform(0.02, 0.05),
                "share_school_primary": rng.uniform(0.04, 0.08),
                "share_under_5": rng.uniform(0.03, 0.10),
            }
            writer.writerow(
                [f"Z{zr}{zc}", int(rng.integers(300, 801))]
                + [round(float(row[c]), 4) for c in share_cols]
            )
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# GPS traces


def _gps_csv(rng: np.random.Generator, buildings: list) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["person_id", "t_min", "x", "y"])
    anchors = rng.choice(len(buildings), size=(N_GPS_PEOPLE, 3), replace=True)
    for i in range(N_GPS_PEOPLE):
        home, work, shop = (buildings[int(k)] for k in anchors[i])
        t = 0.0
        while t < 1440.0:
            if t < 420 or t >= 1260:
                spot = home
            elif 540 <= t < 1020:
                spot = work
            else:
                spot = shop
            x = spot["x"] + float(rng.normal(0.0, 8.0))
            y = spot["y"] + float(rng.normal(0.0, 8.0))
            writer.writerow([f"G{i:03d}", round(t, 1), round(x, 1), round(y, 1)])
            t += float(rng.integers(20, 41))
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# config


def _config_yaml(seed: int) -> bytes:
    text = f"""# synthetic county project configuration
inputs:
  diaries: diaries.csv
  buildings: buildings.geojson
  demographics: demographics.csv
  zones: zones.geojson
  gps: gps.csv

seed: {seed}
smoothing: 0.0
stationary: false
snap_radius_m: 100.0
cell_size: 100.0
activity_rank_reference: global

grid:
  origin_x: 0.0
  origin_y: 0.0
  cell_size: 100.0
  rows: 20
  cols: 20

weights:
  qd: 0.4
  qa: 0.35
  qb: 0.25

render:
  ramp: heat
  scale: 8
"""
    return text.encode("utf-8")
