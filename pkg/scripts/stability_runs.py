"""Nonlinear stability runs on the 48^3 torus for several data amplitudes.

Writes per-run diagnostics CSV and a summary JSON with the H^3 growth, the
energy identity residuals and E0(t)/F for each amplitude.
"""
from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

import numpy as np

from anisomhd.energy import energy_series, initial_data_norms
from anisomhd.solver import SolverConfig, random_initial_data, run, write_run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/stability")
    ap.add_argument("--deltas", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    ap.add_argument("--n", type=int, default=48)
    ap.add_argument("--T", type=float, default=50.0)
    ap.add_argument("--dt", type=float, default=1e-2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = Path(args.out)
    summary = {}
    for delta in args.deltas:
        cfg = SolverConfig(n1=args.n, n2=args.n, n3=args.n, dt=args.dt, T=args.T)
        p0 = random_initial_data(cfg.grid, delta, args.seed)
        start = time.perf_counter()
        traj = run(cfg, p0)
        elapsed = time.perf_counter() - start
        F = initial_data_norms(p0).F
        es = energy_series(traj)
        write_run(out / f"delta_{delta:g}", cfg, args.seed, delta, traj)
        summary[f"{delta:g}"] = {
            "seconds": elapsed,
            "H3_growth": float(traj.column("H3").max() / traj.initial_H3),
            "max_energy_residual": float(traj.column("energy_residual").max()),
            "max_trapezoid_residual": float(traj.column("trapezoid_residual").max()),
            "F": F,
            "sup_E0_over_F": float(np.max(es.E0) / F),
        }
        print(delta, json.dumps(summary[f"{delta:g}"]), flush=True)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
