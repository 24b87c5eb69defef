"""List placements where the cycle criterion and the simulation disagree.

For each disagreement the script also explores every asynchronous
schedule, to tell a synchronous artifact apart from a genuine one.
"""
import argparse
import json
import random

from knotworks.bead_reversal import explore_schedules, run_smer, validate_placement
from knotworks.sweeps import BeadSweepConfig, _placements, _rate_vectors, connected_graphs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=5)
    ap.add_argument("--limit", type=int, default=10)
    a = ap.parse_args()
    cfg = BeadSweepConfig(max_n=a.max_n)
    rng = random.Random(cfg.seed)
    found = total = 0
    for g in connected_graphs(cfg.max_n, 2):
        for rates in _rate_vectors(g, cfg, rng):
            for p in _placements(g, rates, cfg, rng):
                rep = validate_placement(g, rates, p)
                t = run_smer(p, horizon=cfg.horizon)
                live = t.has_period and t.always_acyclic() and not t.blocked()
                if rep.valid == live:
                    continue
                total += 1
                if found < a.limit:
                    found += 1
                    ex = explore_schedules(p)
                    print(json.dumps({
                        "graph": g.to_json()["edges"], "placement": p.to_json(),
                        "criterion_valid": rep.valid, "sync_live": live,
                        "sigma_minus_rho": [s - r for _, s, r in rep.cycles],
                        "async_deadlock_reachable": ex.deadlock_reachable, "states": ex.states,
                    }))
    print(json.dumps({"disagreements": total}))


if __name__ == "__main__":
    main()
