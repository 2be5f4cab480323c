#!/usr/bin/env python3
"""End-to-end demo: synthesize a county, run every pipeline stage, and
print where the exports landed.  Pass --serve to then expose the result
over HTTP.

    python3 scripts/run_demo.py --workdir demo
    python3 scripts/run_demo.py --workdir demo --serve --port 8000
"""

import argparse
import time
from pathlib import Path

from vrimap.config import load_config
from vrimap.pipeline import run_pipeline
from vrimap.synth import build_county


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", default="demo", help="directory for data + artifacts")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--serve", action="store_true", help="serve the scenario afterwards")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()

    work = Path(args.workdir)
    data = work / "county"
    out = work / "out"

    print(f"building synthetic county in {data} (seed {args.seed})")
    build_county(data, seed=args.seed)
    config = load_config(data / "config.yaml")

    start = time.perf_counter()
    snapshot = run_pipeline(config, ["fit", "simulate", "map", "assess", "render"], out)
    elapsed = time.perf_counter() - start

    occ = snapshot.occupancy
    print(f"pipeline finished in {elapsed:.2f}s")
    print(f"  scenario hash   {snapshot.content_hash[:16]}")
    print(f"  buildings       {len(snapshot.buildings)}")
    print(f"  population      {occ.total_population:.0f}")
    print(f"  grid            {snapshot.grid.rows} x {snapshot.grid.cols} cells")
    print(f"  frame maps      {out / 'png'}")
    print(f"  cell exports    {out / 'vri'}")

    if args.serve:
        from vrimap.service import serve

        print(f"serving on http://{args.host}:{args.port} — try /meta, /vri?t=40")
        serve(snapshot, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
