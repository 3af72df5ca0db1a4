"""Sweep the default grid over several synthetic instances and report the pattern checks.

    python scripts/run_patterns.py --seeds 10 --out runs/patterns
"""

import argparse
import json
import time
from pathlib import Path

from locplex import io
from locplex.harness import GridSpec, RunRecord, pattern_checks, run_grid, synth_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=125)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="runs/patterns")
    args = ap.parse_args()

    out = Path(args.out)
    pooled = []
    per_seed = {}
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        t0 = time.perf_counter()
        spec = GridSpec(seed=seed, n=args.n)
        recs = list(run_grid(spec, synth_instance(spec.n, seed), workers=args.workers))
        header = RunRecord.header(spec.strategies)
        io.atomic_write(out / f"records_seed{seed}.csv", io.csv_text(header, (r.row(header) for r in recs)))
        per_seed[seed] = {k: v["passed"] for k, v in pattern_checks(recs).items()}
        pooled += recs
        print(f"seed {seed}: {len(recs)} cells in {time.perf_counter() - t0:.0f}s")
    checks = pattern_checks(pooled)
    io.atomic_write(out / "summary.json", io.dumps({"pooled": checks, "per_seed": per_seed}))
    for name, c in checks.items():
        detail = {k: v for k, v in c.items() if k != "passed"}
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name} {json.dumps(detail, default=float)}")


if __name__ == "__main__":
    main()
