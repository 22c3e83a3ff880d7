"""Sample the ball-transit rotation bound over several normal forms.

For each ``(alpha, omega)`` the margin ``delta_eta - ((omega/2)(t+ - t-) - pi)``
is evaluated on random ``z0`` in the ball of radius ``delta`` with random
transverse directions; a CSV row per sample is written.

    python scripts/ball_transit_sweep.py --samples 200 --out ball_transit.csv
"""
import argparse
import csv

import numpy as np

from saddlecenter.frame_index import ball_rotation_margin
from saddlecenter.models import NormalFormParams


def sweep(params_list, n, delta, seed):
    rng = np.random.default_rng(seed)
    for p in params_list:
        k = 0
        while k < n:
            z = rng.normal(size=4)
            z *= delta * rng.uniform() ** 0.25 / np.linalg.norm(z)
            if z[0] * z[2] == 0:
                continue
            theta = rng.uniform(0, 2 * np.pi)
            margin, (tm, tp) = ball_rotation_margin(p, z, theta, delta)
            yield p.alpha, p.omega, *z, theta, tm, tp, margin
            k += 1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="ball_transit_sweep.csv")
    args = ap.parse_args()
    params = [NormalFormParams(a, w) for a in (0.5, 1.0, 2.0) for w in (0.5, 1.0, 2.0)]
    rows = list(sweep(params, args.samples, args.delta, args.seed))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "omega", "q1", "q2", "p1", "p2", "theta", "t_minus", "t_plus", "margin"])
        w.writerows(rows)
    margins = np.array([r[-1] for r in rows])
    print(f"{len(rows)} samples, {int(np.sum(margins <= 0))} violations, "
          f"min margin {margins.min():.4f}; wrote {args.out}")
    return int(np.any(margins <= 0))


if __name__ == "__main__":
    raise SystemExit(main())
