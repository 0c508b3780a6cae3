#!/usr/bin/env python3
"""Equilibrium surface of the density ODE over the competition plane.

Sweeps (alpha01, alpha10) on a grid at fixed fecundity ratio, records the
closed-form equilibrium and the terminal residual of the integrated flow,
and marks inadmissible corners (where no interior equilibrium exists).

    python3 scripts/meanfield_phase_sweep.py --lam 1.25 --steps 9
"""

import argparse
from pathlib import Path

import numpy as np

from ipsd.harness import write_csv
from ipsd.meanfield import density_rhs, equilibrium, integrate_ode


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=9, help="grid points per axis")
    ap.add_argument("--T", type=float, default=200.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--x0", type=float, default=0.3)
    ap.add_argument("--out", default="results/meanfield_phase.csv")
    args = ap.parse_args(argv)

    lam = args.lam
    a01_grid = np.linspace(0.0, 1.0 / lam, args.steps + 2)[:-1]  # keep alpha01 < 1/lam
    a10_grid = np.linspace(0.0, lam, args.steps + 2)[:-1]        # keep alpha10 < lam
    rows = []
    worst = 0.0
    for a01 in a01_grid:
        for a10 in a10_grid:
            p_star = equilibrium(lam, float(a01), float(a10))
            rhs = lambda x: density_rhs(x, lam, float(a01), float(a10))
            _, xs = integrate_ode(rhs, [args.x0], args.T, dt=args.dt)
            resid = abs(float(xs[-1, 0]) - p_star)
            worst = max(worst, resid)
            rows.append((lam, float(a01), float(a10), p_star, resid))

    write_csv(Path(args.out), ["lam", "alpha01", "alpha10", "p0_star", "ode_residual"], rows)
    print(f"{len(rows)} admissible cells at lam={lam}; "
          f"worst ODE residual {worst:.3e}; wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
