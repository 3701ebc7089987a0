"""Generate the synthetic 56-bus radial feeder fixture.

Bus 56 is the substation (slack).  The trunk/lateral layout and the DG sites
follow the usual 56-bus test-feeder drawing; impedances and loads are
synthetic, drawn from a seeded generator so the file is reproducible.

    python scripts/make_feeder56.py src/solvcheck/data/feeder56.case
"""
import argparse

import numpy as np

from solvcheck.netmodel import Branch, Bus, NetworkCase, save_case

EDGES = [
    (56, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9),
    (4, 40), (40, 41), (41, 42), (42, 43), (43, 44), (44, 45), (45, 46),
    (40, 47), (47, 48), (48, 49), (49, 50), (50, 51), (51, 52), (51, 53), (53, 54), (54, 55),
    (7, 10), (10, 11), (11, 12), (12, 13), (13, 14), (14, 15), (15, 16),
    (11, 17), (17, 33), (33, 37), (37, 38), (38, 39), (33, 34), (34, 35), (35, 36),
    (17, 18), (18, 19), (19, 27), (27, 28), (28, 29), (29, 30), (30, 31), (31, 32),
    (19, 20), (20, 21), (21, 22), (21, 23), (23, 24), (24, 25), (25, 26),
]
DG_SITES = (9, 15, 18, 24, 26, 32, 35, 38, 43, 46, 48, 51, 55)
SLACK = 56


def build(seed=20170, z_scale=0.0105, load_scale=0.0218, penetration=0.1):
    rng = np.random.default_rng(seed)
    buses = [Bus(SLACK, "slack")]
    loads = {}
    for k in range(1, SLACK):
        if k in DG_SITES:
            continue
        mag = load_scale * rng.uniform(0.5, 1.5)
        pf = rng.uniform(0.85, 0.98)
        loads[k] = -mag * complex(pf, np.sqrt(1 - pf * pf))
    total = sum(abs(s) for s in loads.values())
    dg = penetration * total / len(DG_SITES)
    for k in range(1, SLACK):
        if k in DG_SITES:
            buses.append(Bus(k, "pq_dg", s_base=complex(dg, 0.0)))
        else:
            buses.append(Bus(k, "pq_load", s_base=loads[k]))
    branches = []
    for a, b in EDGES:
        length = rng.uniform(0.6, 1.4)
        r_over_x = rng.uniform(0.5, 2.0)
        x = z_scale * length / np.hypot(r_over_x, 1.0)
        branches.append(Branch(a, b, complex(r_over_x * x, x)))
    return NetworkCase(tuple(buses), tuple(branches), 1.0 + 0j, 1.0)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=20170)
    args = ap.parse_args()
    save_case(build(seed=args.seed), args.out)
