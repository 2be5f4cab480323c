#!/usr/bin/env python3
"""Export service-response fixtures for the browser client's test suite.

Runs the pipeline on the synthetic county, then captures real HTTP
bodies — /meta, every rank layer, /buildings snapshots, and a set of
/vri composition cases —
so the client tests can verify parity against the engine without a
running Python service.

    python3 scripts/export_ui_fixtures.py --out frontend/test/fixtures
"""

import argparse
import json
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from vrimap.activities import STEPS_PER_DAY
from vrimap.config import load_config
from vrimap.pipeline import run_pipeline
from vrimap.service import build_app
from vrimap.synth import build_county


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="frontend/test/fixtures")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--cases", type=int, default=10, help="number of /vri parity cases")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        data = Path(tmp) / "county"
        build_county(data, seed=args.seed)
        config = load_config(data / "config.yaml")
        snapshot = run_pipeline(
            config, ["fit", "simulate", "map", "assess"], Path(tmp) / "out"
        )
        client = TestClient(build_app(snapshot))

        meta = client.get("/meta").json()
        layers = {
            "demographic": client.get("/layers/demographic").json(),
            "building_env": client.get("/layers/building_env").json(),
            "activity": {
                str(t): client.get("/layers/activity", params={"t": str(t)}).json()
                for t in range(STEPS_PER_DAY)
            },
        }

        rng = np.random.Generator(np.random.PCG64(args.seed))
        cases = []
        for _ in range(args.cases):
            t = int(rng.integers(0, STEPS_PER_DAY))
            raw = [float(v) for v in rng.uniform(0.05, 4.0, size=3)]
            doc = client.get("/vri", params={
                "t": str(t),
                "qd": repr(raw[0]), "qa": repr(raw[1]), "qb": repr(raw[2]),
            }).json()
            cases.append({"t": t, "raw_weights": raw, "response": doc})
        default = client.get("/vri", params={"t": "0"}).json()
        buildings = {
            str(t): client.get("/buildings", params={"t": str(t)}).json()
            for t in (0, 40)
        }

    for name, doc in (
        ("meta.json", meta),
        ("layers.json", layers),
        ("vri_cases.json", {"default": default, "cases": cases}),
        ("buildings.json", buildings),
    ):
        path = out / name
        path.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")))
        print(f"wrote {path} ({path.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
