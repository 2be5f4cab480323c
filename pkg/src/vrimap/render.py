"""Map rendering and export.

Layers render as one square pixel block per cell, colored by a
documented 5-anchor ramp whose luminance strictly decreases with value
(darker = more vulnerable).  Nodata cells are fully transparent.  All
writers are deterministic: identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from PIL import Image

from vrimap.grids import GridSpec
from vrimap.vri import AspectLayer, VRIWeights, VulnerabilityMap, compose

#: rank -> RGB anchors, index 0 unused (ranks are 1-5); luminance is
#: strictly decreasing along each ramp, and linear interpolation between
#: anchors preserves that, so strictly higher values render strictly darker.
RAMPS = {
    "heat": ((255, 245, 200), (254, 204, 92), (253, 141, 60), (227, 74, 51), (128, 0, 38)),
    "gray": ((238, 238, 238), (189, 189, 189), (140, 140, 140), (90, 90, 90), (40, 40, 40)),
    "blues": ((239, 243, 255), (189, 215, 231), (107, 174, 214), (49, 130, 189), (8, 48, 107)),
}

DEFAULT_RAMP = "heat"


def ramp_color(ramp: str, value: float) -> tuple:
    """RGB for a value in [1, 5]: anchor colors at integers, linear
    interpolation between them."""
    anchors = _anchors(ramp)
    v = min(max(float(value), 1.0), 5.0)
    lo = min(int(v), 4)
    frac = v - lo
    a, b = anchors[lo - 1], anchors[lo]
    return tuple(round(a[i] + frac * (b[i] - a[i])) for i in range(3))


def _anchors(ramp: str) -> tuple:
    if ramp not in RAMPS:
        raise ValueError(f"unknown ramp {ramp!r}, available: {sorted(RAMPS)}")
    return RAMPS[ramp]


def render(
    layer: Union[AspectLayer, VulnerabilityMap],
    ramp: str = DEFAULT_RAMP,
    scale: int = 8,
) -> Image.Image:
    """Render a ranked layer or composed map to an RGBA image.

    Each cell becomes a scale x scale block; the northernmost row (the
    highest y) is at the top of the image; nodata is transparent.
    """
    anchors = _anchors(ramp)
    if scale < 1:
        raise ValueError("scale must be at least 1")
    if isinstance(layer, AspectLayer):
        values = layer.ranks.astype(float)
        valid = layer.ranks > 0
    else:
        values = layer.values
        valid = np.isfinite(values)

    rows, cols = values.shape
    rgba = np.zeros((rows, cols, 4), dtype=np.uint8)
    vv = np.clip(values, 1.0, 5.0)
    vv = np.where(valid, vv, 1.0)
    lo = np.minimum(vv.astype(int), 4)
    frac = vv - lo
    anchor_arr = np.asarray(anchors, dtype=float)  # (5, 3)
    base = anchor_arr[lo - 1]
    nxt = anchor_arr[np.minimum(lo, 4)]
    blended = np.round(base + frac[..., None] * (nxt - base)).astype(np.uint8)
    rgba[..., :3] = np.where(valid[..., None], blended, 0)
    rgba[..., 3] = np.where(valid, 255, 0)

    rgba = rgba[::-1]  # row 0 is the southern edge; image top is north
    rgba = np.repeat(np.repeat(rgba, scale, axis=0), scale, axis=1)
    return Image.fromarray(rgba, mode="RGBA")


def legend(ramp: str = DEFAULT_RAMP) -> dict:
    """Rank -> color legend for sidecar files and UI display."""
    anchors = _anchors(ramp)
    labels = ["low", "medium-low", "medium", "medium-high", "high"]
    return {
        "ramp": ramp,
        "entries": [
            {"rank": k, "label": labels[k - 1], "rgb": list(anchors[k - 1])}
            for k in range(1, 6)
        ],
        "nodata": "transparent",
    }


def write_png(
    layer: Union[AspectLayer, VulnerabilityMap],
    path: Union[str, Path],
    ramp: str = DEFAULT_RAMP,
    scale: int = 8,
) -> None:
    """Write the rendered PNG plus a .legend.json sidecar."""
    path = Path(path)
    image = render(layer, ramp=ramp, scale=scale)
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    path.write_bytes(buf.getvalue())
    sidecar = path.with_suffix(path.suffix + ".legend.json")
    sidecar.write_bytes(_json_bytes(legend(ramp)))


def png_bytes(
    layer: Union[AspectLayer, VulnerabilityMap],
    ramp: str = DEFAULT_RAMP,
    scale: int = 8,
) -> bytes:
    buf = io.BytesIO()
    render(layer, ramp=ramp, scale=scale).save(buf, format="PNG")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# temporal sweep


def temporal_sweep(
    static_layers: Sequence[AspectLayer],
    activity_layers: Mapping[int, AspectLayer],
    weights: VRIWeights,
    steps: Sequence[int],
) -> list:
    """Compose one map per requested step, reusing the static layers."""
    frames = []
    for t in steps:
        if t not in activity_layers:
            raise ValueError(f"no activity layer for step {t}; assess that step first")
        frames.append(compose(list(static_layers) + [activity_layers[t]], weights))
    return frames


# ---------------------------------------------------------------------------
# exports


def _format_value(v: float) -> str:
    if not np.isfinite(v):
        return ""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def write_value_csv(values: np.ndarray, path: Union[str, Path]) -> None:
    """row,col,value for every cell; nodata cells have an empty value."""
    values = np.asarray(values, dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "col", "value"])
    for r in range(values.shape[0]):
        for c in range(values.shape[1]):
            writer.writerow([r, c, _format_value(values[r, c])])
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def read_value_csv(path: Union[str, Path], shape: tuple) -> np.ndarray:
    """Inverse of write_value_csv (empty value -> NaN)."""
    values = np.full(shape, np.nan)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["row", "col", "value"]:
            raise ValueError(f"not a value CSV: header {header}")
        for row, col, value in reader:
            if value != "":
                values[int(row), int(col)] = float(value)
    return values


def write_grid_geojson(
    grid: GridSpec,
    cell_properties: Mapping[str, np.ndarray],
    path: Union[str, Path],
) -> None:
    """Grid-cell polygons with per-cell properties.

    Cells where every property is nodata are omitted.  Integer-valued
    properties (ranks) are written as JSON integers.
    """
    arrays = {name: np.asarray(arr, dtype=float) for name, arr in cell_properties.items()}
    features = []
    for r in range(grid.rows):
        for c in range(grid.cols):
            props = {"row": r, "col": c}
            any_data = False
            for name in sorted(arrays):
                v = arrays[name][r, c]
                if np.isfinite(v):
                    any_data = True
                    props[name] = int(v) if float(v).is_integer() else float(v)
                else:
                    props[name] = None
            if not any_data:
                continue
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [grid.cell_polygon(r, c)],
                    },
                    "properties": props,
                }
            )
    doc = {"type": "FeatureCollection", "features": features}
    Path(path).write_bytes(_json_bytes(doc))


def write_sweep_manifest(
    frames: Sequence[dict],
    weights: VRIWeights,
    path: Union[str, Path],
    extra: Optional[dict] = None,
) -> None:
    """Frame listing (timestep + file names) with the weight vector."""
    doc = {
        "weights": {"qd": weights.qd, "qa": weights.qa, "qb": weights.qb},
        "frames": list(frames),
    }
    if extra:
        doc.update(extra)
    Path(path).write_bytes(_json_bytes(doc))


def _json_bytes(doc: object) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
