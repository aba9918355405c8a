#!/usr/bin/env python3
"""Solve an MPS file with HiGHS and write `name value` lines.

Usage: highs_solve.py MODEL.mps SOLUTION.txt [--gap G] [--time-limit T]

The first line of the output is a comment carrying the model status and
objective so the caller can tell a proven optimum from a limit hit.
Exit status: 0 when a primal point was written, 1 otherwise.
"""

import argparse
import sys

import highspy


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("mps")
    ap.add_argument("out")
    ap.add_argument("--gap", type=float, default=1e-9)
    ap.add_argument("--time-limit", type=float, default=None)
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    if args.time_limit is not None:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.mps) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.mps}", file=sys.stderr)
        return 1
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    sol = h.getSolution()
    if not sol.value_valid:
        print(f"no primal solution: {status}", file=sys.stderr)
        return 1
    lp = h.getLp()
    names = lp.col_names_
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(f"# status {status} objective {h.getInfo().objective_function_value!r}\n")
        for name, value in zip(names, sol.col_value):
            f.write(f"{name} {value!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
