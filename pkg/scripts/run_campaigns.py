"""Seeded simulator campaigns on a resource system (example1 by default)."""
import argparse
import json
import time

from knotworks import fixtures
from knotworks.resource_order import ResourceSystem
from knotworks.sweeps import CampaignConfig, campaign


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--system", help="resource system JSON (default: bundled example1)")
    ap.add_argument("--policies", nargs="+", default=["edge_reversal", "acquisition_order"])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--max-events", type=int, default=10_000)
    ap.add_argument("--workload", choices=["dining", "random"], default="dining")
    a = ap.parse_args()
    data = json.load(open(a.system)) if a.system else fixtures.load("example1.json")
    sys_ = ResourceSystem.from_json(data)
    out = {}
    for policy in a.policies:
        t0 = time.perf_counter()
        cfg = CampaignConfig(policy, tuple(range(a.seeds)), a.max_events, a.workload)
        out[policy] = campaign(sys_, cfg) | {"seconds": round(time.perf_counter() - t0, 1)}
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
