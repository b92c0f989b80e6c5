#!/usr/bin/env python3
"""Kane-Mele phase diagram: Z2 invariant over the (lam_v, lam_so) plane.

Writes one CSV row per parameter point and prints the located transition
for each spin-orbit strength (expected at lam_v = 3 sqrt(3) lam_so for
lam_r = 0).

Usage:
  python scripts/phase_scan.py --out phase_map.csv --edge-samples 48
"""

import argparse
import csv
import sys
import time

import numpy as np

from z2kit import EffectiveCell, delta_2d, models


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--lam-so", type=float, nargs="*", default=[0.03, 0.06, 0.09])
    ap.add_argument("--lam-v-max", type=float, default=0.6)
    ap.add_argument("--n-points", type=int, default=25)
    ap.add_argument("--lam-r", type=float, default=0.0)
    ap.add_argument("--edge-samples", type=int, default=48)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cell = EffectiveCell(edge_samples=args.edge_samples)
    sink = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(sink)
    writer.writerow(["lam_so", "lam_v", "delta", "min_gap", "seconds"])

    rng = np.random.default_rng(0)
    cloud = rng.uniform(-0.5, 0.5, size=(2048, 2))
    for lam_so in args.lam_so:
        transition = None
        previous = None
        for lam_v in np.linspace(0.0, args.lam_v_max, args.n_points):
            fam = models.kane_mele(lam_so=lam_so, lam_v=lam_v, lam_r=args.lam_r)
            gap = float(np.min(models.direct_gap(fam, cloud)))
            t0 = time.perf_counter()
            value = delta_2d(fam, cell).value
            writer.writerow([lam_so, round(lam_v, 6), value, round(gap, 6),
                             round(time.perf_counter() - t0, 3)])
            if previous is not None and value != previous[1]:
                transition = (previous[0], lam_v)
            previous = (lam_v, value)
        if transition:
            print(f"lam_so={lam_so}: transition in ({transition[0]:.4f}, "
                  f"{transition[1]:.4f}); 3*sqrt(3)*lam_so = {3 * np.sqrt(3) * lam_so:.4f}",
                  file=sys.stderr)
    if args.out:
        sink.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
