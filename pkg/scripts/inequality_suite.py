"""Empirical constants of the product inequalities, the heat-decay rates and the convolution bounds."""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from anisomhd.cli import CONVOLUTION_CASES, HEAT_CASES
from anisomhd.inequalities import convolution_bound_check, heat_decay_check, inequality_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/inequalities")
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=32, help="grid points per axis")
    args = ap.parse_args(argv)

    records = inequality_suite(args.samples, args.seed, args.n)
    for r in records:
        print(f"{r.inequality:5s} max ratio {r.max_ratio:.4g}  saturation {r.saturation_ratio:.4f}  "
              f"{'pass' if r.passed else 'FAIL'}")
    heat = []
    for case in HEAT_CASES:
        h = heat_decay_check(*case)
        print(f"heat alpha={h.alpha:g} beta={h.beta:g} p={h.p:g} q={h.q:g} d={h.d}: "
              f"measured {h.measured:+.4f} predicted {h.predicted:+.4f}")
        heat.append({"case": list(case), "measured": h.measured, "predicted": h.predicted, "r2": h.r2})
    conv = []
    for s1, s2 in CONVOLUTION_CASES:
        c = convolution_bound_check(s1, s2)
        print(f"convolution s1={s1:g} s2={s2:g}: C {c.constant:.4f}, max ratio / C {c.max_ratio:.4f}")
        conv.append({"s1": s1, "s2": s2, "constant": c.constant, "max_ratio": c.max_ratio, "pass": c.passed})
    bad = convolution_bound_check(0.5, 1.0, drop_log=True)
    print(f"convolution s1=0.5 s2=1 without log: max ratio / C {bad.max_ratio:.4f} (expected to exceed 1)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "inequalities.json").write_text(json.dumps(
        {"suite": [r.to_json() for r in records], "heat_decay": heat, "convolution": conv,
         "convolution_without_log": {"max_ratio": bad.max_ratio, "pass": bad.passed}},
        indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
