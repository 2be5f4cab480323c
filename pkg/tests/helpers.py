"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from vrimap.activities import Activity, N_CLASSES, STEP_MINUTES, STEPS_PER_DAY
from vrimap.allocation import ActivityPlacementTable, Building
from vrimap.ingest import DiaryEntry, DiaryRecord
from vrimap.markov import MarkovActivityModel


def make_building(building_id: str = "B0", btype: str = "residential", **kw) -> Building:
    defaults = dict(
        x=50.0,
        y=50.0,
        zone_id="Z0",
        year_built=1990,
        floor_area_m2=200.0,
        construction="masonry",
        glazing="double",
        energy_structure="mixed",
    )
    if btype == "residential":
        defaults.update(bedrooms=3.0, vacancy_rate=0.0)
    elif btype == "business":
        defaults.update(gross_floor_area=1000.0, worker_density=0.02)
    elif btype == "education":
        defaults.update(capacity=200.0, school_level="primary")
    else:
        defaults.update(capacity=100.0)
    defaults.update(kw)
    return Building(building_id=building_id, btype=btype, **defaults)


def uniform_trajectory() -> np.ndarray:
    return np.full((STEPS_PER_DAY, N_CLASSES), 1.0 / N_CLASSES)


def single_class_trajectory(a: Activity) -> np.ndarray:
    values = np.zeros((STEPS_PER_DAY, N_CLASSES))
    values[:, a] = 1.0
    return values


def residential_table(a: Activity = Activity.BIOLOGICAL_NEEDS) -> ActivityPlacementTable:
    """Every class unplaced except `a`, which goes fully to residential."""
    shares = {c: () for c in Activity}
    shares[a] = (("residential", 1.0),)
    return ActivityPlacementTable(shares)


def embed_two_state(alpha2, xi2) -> MarkovActivityModel:
    """A 2-state chain as the first two classes of an 8-class model;
    the other classes hold zero mass and self-loop."""
    alpha = np.zeros(N_CLASSES)
    alpha[:2] = alpha2
    step = np.eye(N_CLASSES)
    step[:2, :2] = xi2
    xi = np.repeat(step[None, :, :], STEPS_PER_DAY - 1, axis=0)
    return MarkovActivityModel(alpha=alpha, xi=xi)


def random_model(rng: np.random.Generator, concentration: float = 1.0) -> MarkovActivityModel:
    alpha = rng.dirichlet(np.full(N_CLASSES, concentration))
    xi = rng.dirichlet(
        np.full(N_CLASSES, concentration), size=(STEPS_PER_DAY - 1, N_CLASSES)
    )
    return MarkovActivityModel(alpha=alpha, xi=xi)


def record_from_sequence(
    person_id: str, seq: np.ndarray, weight: float = 1.0
) -> DiaryRecord:
    """One diary whose episodes are the 15-minute steps of seq."""
    entries = []
    start = 0
    current = int(seq[0])
    length = 1
    for s in list(seq[1:]) + [None]:
        if s is not None and int(s) == current:
            length += 1
            continue
        entries.append(
            DiaryEntry(start * STEP_MINUTES, length * STEP_MINUTES, Activity(current))
        )
        start += length
        if s is not None:
            current = int(s)
            length = 1
    return DiaryRecord(
        person_id=person_id,
        sample_weight=weight,
        entries=tuple(entries),
        attributes=frozenset(),
    )


def records_from_sequences(seqs: np.ndarray, weight: float = 1.0) -> list:
    return [
        record_from_sequence(f"S{i:05d}", seqs[i], weight) for i in range(len(seqs))
    ]
