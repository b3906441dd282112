"""Global-error convergence of the ETDRK2 and IFRK4 integrators under dt refinement."""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from anisomhd.solver import convergence_order


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/order")
    ap.add_argument("--dts", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    result = {}
    for name in ("ETDRK2", "IFRK4"):
        s = convergence_order(name, args.dts, n=args.n, seed=args.seed)
        for h, e in zip(s.dts, s.errors):
            print(f"{name:6s} dt {h:<8g} error {e:.3e}")
        print(f"{name:6s} slope {s.slope:.3f}")
        result[name] = {"dts": s.dts.tolist(), "errors": s.errors.tolist(), "slope": s.slope}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "order.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
