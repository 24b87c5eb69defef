"""Run the exhaustive theorem sweeps and print a JSON report.

    python3 scripts/run_sweeps.py detection --n 4
    python3 scripts/run_sweeps.py conversions
    python3 scripts/run_sweeps.py edge-reversal --max-n 6
    python3 scripts/run_sweeps.py bead-reversal --max-n 5 --max-rate 3
"""
import argparse
import json
import time

from knotworks.sweeps import (
    BeadSweepConfig, sweep_bead_reversal, sweep_conversions, sweep_detection, sweep_edge_reversal,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="which", required=True)
    d = sub.add_parser("detection")
    d.add_argument("--n", type=int, default=4)
    d.add_argument("--models", nargs="+", default=["and", "or", "xy", "andor"])
    d.add_argument("--max-parts", type=int, default=2)
    c = sub.add_parser("conversions")
    c.add_argument("--max-out", type=int, default=5)
    c.add_argument("--max-parts", type=int, default=3)
    e = sub.add_parser("edge-reversal")
    e.add_argument("--max-n", type=int, default=6)
    b = sub.add_parser("bead-reversal")
    for name, default in vars(BeadSweepConfig()).items():
        b.add_argument("--" + name.replace("_", "-"), type=int, default=default)
    a = ap.parse_args()

    t0 = time.perf_counter()
    if a.which == "detection":
        rep = sweep_detection(a.n, tuple(a.models), a.max_parts)
    elif a.which == "conversions":
        rep = sweep_conversions(a.max_out, a.max_parts)
    elif a.which == "edge-reversal":
        rep = sweep_edge_reversal(a.max_n)
    else:
        cfg = BeadSweepConfig(**{k: getattr(a, k) for k in vars(BeadSweepConfig())})
        rep = sweep_bead_reversal(cfg)
    rep["seconds"] = round(time.perf_counter() - t0, 2)
    print(json.dumps(rep, indent=2, default=str))


if __name__ == "__main__":
    main()
