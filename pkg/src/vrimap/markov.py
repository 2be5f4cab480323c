"""Time-indexed Markov model of daily activity participation.

A day is 96 quarter-hour steps.  The model is a first-order chain whose
transition matrix varies by step boundary: an initial distribution over
the 8 activity classes plus one 8x8 row-stochastic matrix per boundary.
Fitting counts weighted transitions in discretized diaries; propagation
turns the chain into a 96x8 community time-activity distribution; the
sampler draws synthetic person-days for validation studies.

All randomness flows through one PCG64 stream per call, with sequence i
consuming exactly draws [96*i, 96*(i+1)), so chunked or parallel
evaluation of disjoint index ranges reproduces the single-pass output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from vrimap.activities import (
    Activity,
    MINUTES_PER_DAY,
    N_CLASSES,
    STEP_MINUTES,
    STEPS_PER_DAY,
)
from vrimap.ingest import DiaryRecord

_STOCHASTIC_TOL = 1e-12
_ROW_TOL = 1e-9

MODEL_SCHEMA = "vrimap.activity_model"
MODEL_VERSION = 1


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MarkovActivityModel:
    """Initial distribution plus per-boundary transition matrices.

    alpha : (8,) initial class probabilities, sums to 1.
    xi    : (95, 8, 8) transition matrices; xi[t][p][q] is the
            probability of moving from class p at step t to class q at
            step t+1.  Every row sums to 1.
    meta  : free-form fit provenance (counts, smoothing, flags).
    """

    alpha: np.ndarray
    xi: np.ndarray
    meta: "tuple[tuple[str, object], ...]" = ()

    def __post_init__(self) -> None:
        alpha = _freeze(self.alpha)
        xi = _freeze(self.xi)
        if alpha.shape != (N_CLASSES,):
            raise ValueError(f"alpha must have shape ({N_CLASSES},), got {alpha.shape}")
        if xi.shape != (STEPS_PER_DAY - 1, N_CLASSES, N_CLASSES):
            raise ValueError(
                f"xi must have shape ({STEPS_PER_DAY - 1}, {N_CLASSES}, {N_CLASSES}), "
                f"got {xi.shape}"
            )
        if np.any(alpha < 0) or np.any(xi < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(alpha.sum()) - 1.0) > _STOCHASTIC_TOL:
            raise ValueError(f"alpha sums to {float(alpha.sum())!r}, expected 1")
        row_sums = xi.sum(axis=2)
        if np.any(np.abs(row_sums - 1.0) > _STOCHASTIC_TOL):
            t, p = np.unravel_index(
                int(np.abs(row_sums - 1.0).argmax()), row_sums.shape
            )
            raise ValueError(
                f"xi[{t}] row {p} sums to {row_sums[t, p]!r}, expected 1"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "xi", xi)

    @property
    def meta_map(self) -> dict:
        return dict(self.meta)


@dataclass(frozen=True, eq=False)
class TrajectoryMatrix:
    """Community time-activity distribution: values[t][q] is the share
    of the population in class q during step t.  Rows sum to 1."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = _freeze(self.values)
        if values.shape != (STEPS_PER_DAY, N_CLASSES):
            raise ValueError(
                f"trajectory must have shape ({STEPS_PER_DAY}, {N_CLASSES}), "
                f"got {values.shape}"
            )
        if np.any(values < 0):
            raise ValueError("trajectory shares must be nonnegative")
        row_sums = values.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > _ROW_TOL):
            t = int(np.abs(row_sums - 1.0).argmax())
            raise ValueError(f"trajectory row {t} sums to {row_sums[t]!r}, expected 1")
        object.__setattr__(self, "values", values)

    def step(self, t: int) -> np.ndarray:
        return self.values[t]

    def dominant(self, t: int) -> Activity:
        """Most-occupied class at step t (lowest index wins ties)."""
        return Activity(int(self.values[t].argmax()))


# ---------------------------------------------------------------------------
# diary discretization


def discretize(record: DiaryRecord) -> np.ndarray:
    """Collapse a diary to one class per quarter-hour step.

    Each step takes the class occupying the most of its 15 minutes; on a
    tie the class covering the earliest minute of the step wins.
    Returns an int8 array of shape (96,).
    """
    minutes = np.full(MINUTES_PER_DAY, int(Activity.OTHER), dtype=np.int8)
    for e in record.entries:
        minutes[e.start_min : e.end_min] = int(e.activity)
    per_step = minutes.reshape(STEPS_PER_DAY, STEP_MINUTES)
    counts = np.zeros((STEPS_PER_DAY, N_CLASSES), dtype=np.int16)
    np.add.at(
        counts,
        (np.repeat(np.arange(STEPS_PER_DAY), STEP_MINUTES), per_step.reshape(-1)),
        1,
    )
    max_count = counts.max(axis=1, keepdims=True)
    # earliest minute whose class attains the step's max count
    minute_is_max = counts[np.arange(STEPS_PER_DAY)[:, None], per_step] == max_count
    first = minute_is_max.argmax(axis=1)
    return per_step[np.arange(STEPS_PER_DAY), first].astype(np.int8)


def discretize_all(records: Sequence[DiaryRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Discretize many diaries: (n, 96) class indices, (n,) weights."""
    if not records:
        return (
            np.zeros((0, STEPS_PER_DAY), dtype=np.int8),
            np.zeros(0, dtype=float),
        )
    seqs = np.stack([discretize(r) for r in records])
    weights = np.array([r.sample_weight for r in records], dtype=float)
    return seqs, weights


# ---------------------------------------------------------------------------
# fitting


def fit(
    records: Sequence[DiaryRecord],
    smoothing: float = 0.0,
    stationary: bool = False,
) -> MarkovActivityModel:
    """Fit the chain from weighted diaries.

    alpha is the weighted class distribution at step 0.  Each boundary's
    matrix comes from weighted transition counts with additive smoothing
    `(count + s) / (total + 8s)` applied only to rows that were observed
    at all; a class never seen at a boundary keeps a self-loop row
    rather than an invented uniform escape.  `stationary` pools counts
    across all 95 boundaries into one shared matrix.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    seqs, weights = discretize_all(records)
    if len(records) == 0 or float(weights.sum()) <= 0.0:
        raise ValueError("no data: need at least one diary with positive weight")

    alpha_counts = np.bincount(seqs[:, 0], weights=weights, minlength=N_CLASSES)
    alpha = alpha_counts / alpha_counts.sum()

    n_bounds = STEPS_PER_DAY - 1
    flat = (
        np.arange(n_bounds)[None, :] * (N_CLASSES * N_CLASSES)
        + seqs[:, :-1].astype(np.int64) * N_CLASSES
        + seqs[:, 1:]
    ).ravel()
    counts = np.bincount(
        flat,
        weights=np.repeat(weights, n_bounds),
        minlength=n_bounds * N_CLASSES * N_CLASSES,
    ).reshape(n_bounds, N_CLASSES, N_CLASSES)

    if stationary:
        pooled = counts.sum(axis=0)
        xi = np.broadcast_to(
            _normalize_rows(pooled, smoothing), (n_bounds, N_CLASSES, N_CLASSES)
        ).copy()
    else:
        xi = np.stack([_normalize_rows(counts[t], smoothing) for t in range(n_bounds)])

    meta = (
        ("n_sequences", len(records)),
        ("total_weight", float(weights.sum())),
        ("smoothing", float(smoothing)),
        ("stationary", bool(stationary)),
    )
    return MarkovActivityModel(alpha=alpha, xi=xi, meta=meta)


def _normalize_rows(counts: np.ndarray, smoothing: float) -> np.ndarray:
    """Row-normalize one boundary's count matrix with additive smoothing.

    Unobserved rows (zero raw total) become self-loops even when
    smoothing is on: absence of evidence is not evidence of movement.
    """
    totals = counts.sum(axis=1)
    out = np.eye(N_CLASSES)
    observed = totals > 0
    if np.any(observed):
        smoothed = counts[observed] + smoothing
        out[observed] = smoothed / smoothed.sum(axis=1, keepdims=True)
    return out


# ---------------------------------------------------------------------------
# propagation, sampling, aggregation


def propagate(model: MarkovActivityModel) -> TrajectoryMatrix:
    """Push the initial distribution through all boundaries: row 0 is
    alpha, row t+1 = row t @ xi[t]."""
    rows = np.empty((STEPS_PER_DAY, N_CLASSES))
    rows[0] = model.alpha
    for t in range(STEPS_PER_DAY - 1):
        rows[t + 1] = rows[t] @ model.xi[t]
    return TrajectoryMatrix(rows)


def sample(model: MarkovActivityModel, n: int, seed: int) -> np.ndarray:
    """Draw n synthetic person-day sequences, shape (n, 96) int8.

    Sequence i consumes uniform draws [96*i, 96*(i+1)) of PCG64(seed),
    one per step (including the initial draw), so any chunking of the
    index range reproduces the same sequences.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((n, STEPS_PER_DAY))
    out = np.empty((n, STEPS_PER_DAY), dtype=np.int8)
    if n == 0:
        return out
    alpha_cdf = np.cumsum(model.alpha)
    out[:, 0] = np.minimum(
        (u[:, 0:1] >= alpha_cdf[None, :]).sum(axis=1), N_CLASSES - 1
    )
    xi_cdf = np.cumsum(model.xi, axis=2)  # (95, 8, 8)
    for t in range(STEPS_PER_DAY - 1):
        rows = xi_cdf[t, out[:, t]]  # (n, 8)
        out[:, t + 1] = np.minimum(
            (u[:, t + 1 : t + 2] >= rows).sum(axis=1), N_CLASSES - 1
        )
    return out


def aggregate(
    sequences: np.ndarray, weights: Optional[np.ndarray] = None
) -> TrajectoryMatrix:
    """Occurrence frequencies of sampled (n, 96) sequences per step."""
    sequences = np.asarray(sequences)
    if sequences.ndim != 2 or sequences.shape[1] != STEPS_PER_DAY:
        raise ValueError(f"sequences must have shape (n, {STEPS_PER_DAY})")
    n = sequences.shape[0]
    if weights is None:
        weights = np.ones(n)
    counts = np.zeros((STEPS_PER_DAY, N_CLASSES))
    np.add.at(
        counts,
        (
            np.broadcast_to(np.arange(STEPS_PER_DAY), sequences.shape).ravel(),
            sequences.astype(np.int64).ravel(),
        ),
        np.repeat(np.asarray(weights, dtype=float), STEPS_PER_DAY),
    )
    return TrajectoryMatrix(normalize_occurrence(counts))


def normalize_occurrence(occurrences: np.ndarray) -> np.ndarray:
    """Row-normalize nonnegative per-step activity occurrences.

    Accepts one step's occurrence vector or a whole (T, K) matrix; each
    step's entries are divided by that step's total.  A step whose total
    is zero raises an error identifying the step.  Idempotent on already
    normalized input.
    """
    occ = np.asarray(occurrences, dtype=float)
    vector = occ.ndim == 1
    rows = occ[None, :] if vector else occ
    if rows.ndim != 2:
        raise ValueError(f"occurrences must be 1-D or 2-D, got shape {occ.shape}")
    if np.any(rows < 0):
        raise ValueError("occurrences must be nonnegative")
    totals = rows.sum(axis=1)
    zero = np.nonzero(totals == 0)[0]
    if zero.size:
        raise ValueError(f"step {int(zero[0])} has zero total occurrence")
    out = rows / totals[:, None]
    return out[0] if vector else out


# ---------------------------------------------------------------------------
# persistence


def save_model(model: MarkovActivityModel, path: Union[str, Path]) -> None:
    """Write the model as versioned JSON (full float precision)."""
    doc = {
        "schema": MODEL_SCHEMA,
        "version": MODEL_VERSION,
        "n_classes": N_CLASSES,
        "steps_per_day": STEPS_PER_DAY,
        "alpha": model.alpha.tolist(),
        "xi": model.xi.tolist(),
        "meta": {str(k): v for k, v in model.meta},
    }
    Path(path).write_bytes(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    )


def load_model(path: Union[str, Path]) -> MarkovActivityModel:
    """Read a model written by save_model, checking schema and shapes."""
    doc = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(doc, dict) or doc.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"not an activity model file: schema={doc.get('schema')!r}")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(
            f"unsupported model version {doc.get('version')!r}, expected {MODEL_VERSION}"
        )
    if doc.get("n_classes") != N_CLASSES or doc.get("steps_per_day") != STEPS_PER_DAY:
        raise ValueError("model grid does not match this build")
    meta = tuple(sorted(doc.get("meta", {}).items()))
    return MarkovActivityModel(
        alpha=np.array(doc["alpha"], dtype=float),
        xi=np.array(doc["xi"], dtype=float),
        meta=meta,
    )
