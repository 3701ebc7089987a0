"""Random network generation and the Jacobian/index property suite."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cindex import c_index
from .netmodel import Branch, Bus, NetworkCase, reduce
from .pfsolve import Divergence, Snapshot, solve
from .wjac import jacobian_bundle, wirtinger_fd_check

THEOREM1_TOL = 1e-8
LEMMA2_TOL = 1e-8
PHASE_TOL = 1e-6
SIGMA_FLOOR = 1e-10
FD_TOL = 1e-6
FD_STEP = 1e-5


def random_case(n: int, rng: np.random.Generator, *, n_ci: int = 0, n_tie: int = 0,
                mesh_prob: float = 0.3, shunts: bool = False, dg_prob: float = 0.25) -> NetworkCase:
    """Connected random network with ``n`` constant-power buses.

    Bus 0 is the slack.  A random tree is grown over all buses and extra
    branches are added with probability ``mesh_prob`` per bus.
    """
    kinds = ["pq_dg" if rng.random() < dg_prob else "pq_load" for _ in range(n)]
    kinds += ["ci_dg"] * n_ci + ["tie"] * n_tie
    order = rng.permutation(len(kinds))
    kinds = [kinds[k] for k in order]

    buses = [Bus(0, "slack")]
    for k, kind in enumerate(kinds, start=1):
        shunt = complex(0.0, rng.uniform(0.0, 0.02)) if shunts and rng.random() < 0.5 else 0j
        if kind == "pq_load":
            mag, pf = rng.uniform(0.1, 0.5), rng.uniform(0.8, 1.0)
            buses.append(Bus(k, kind, shunt, s_base=-mag * complex(pf, np.sqrt(1 - pf * pf))))
        elif kind == "pq_dg":
            buses.append(Bus(k, kind, shunt, s_base=complex(rng.uniform(0.05, 0.3), rng.uniform(-0.05, 0.05))))
        elif kind == "ci_dg":
            buses.append(Bus(k, kind, shunt, i_base=complex(rng.uniform(0.05, 0.3), rng.uniform(-0.05, 0.05))))
        else:
            buses.append(Bus(k, kind, shunt))

    def z():
        return complex(rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1))

    total = len(kinds)
    edges = set()
    branches = []
    for k in range(1, total + 1):
        parent = int(rng.integers(0, k))
        edges.add((parent, k))
        branches.append(Branch(parent, k, z()))
    for k in range(1, total + 1):
        if total > 1 and rng.random() < mesh_prob:
            other = int(rng.integers(0, total + 1))
            if other != k and (min(other, k), max(other, k)) not in edges:
                edges.add((min(other, k), max(other, k)))
                branches.append(Branch(min(other, k), max(other, k), z()))
    return NetworkCase(tuple(buses), tuple(branches))


def max_loading(net, hi: float = 1.0, iters: int = 30) -> float:
    """Largest load scaling with a solution, located by doubling then bisection."""
    lo = 0.0
    prev = None
    while True:
        try:
            prev = solve(net, loading=hi, init=prev)
        except Divergence:
            break
        lo, hi = hi, hi * 2
        if hi > 1e6:
            return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        try:
            solve(net, loading=mid)
            lo = mid
        except Divergence:
            hi = mid
    return lo


def random_snapshot(net, rng: np.random.Generator, near_nose: float = 0.3) -> Snapshot:
    """Solved snapshot at a random fraction of the maximum loading.

    With probability ``near_nose`` the point is drawn from the last 2 % before
    the nose so that low C-indices are exercised.
    """
    lam_max = max_loading(net)
    frac = rng.uniform(0.98, 1.0) if rng.random() < near_nose else rng.uniform(0.05, 0.98)
    lam = lam_max * frac
    while True:
        try:
            return solve(net, loading=lam)
        except Divergence:
            lam *= 0.99


@dataclass
class SuiteResult:
    trials: int = 0
    theorem1_max: float = 0.0
    lemma2_mag_max: float = 0.0
    lemma2_phase_max: float = 0.0
    theorem2_checked: int = 0
    theorem2_counterexamples: int = 0
    wirtinger_max: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def theorem1_ok(self) -> bool:
        return self.theorem1_max < THEOREM1_TOL

    @property
    def lemma2_ok(self) -> bool:
        return self.lemma2_mag_max < LEMMA2_TOL and self.lemma2_phase_max < PHASE_TOL

    @property
    def theorem2_ok(self) -> bool:
        return self.theorem2_counterexamples == 0

    @property
    def wirtinger_ok(self) -> bool:
        return self.wirtinger_max < FD_TOL

    @property
    def ok(self) -> bool:
        return self.theorem1_ok and self.lemma2_ok and self.theorem2_ok and self.wirtinger_ok

    def verdict(self) -> str:
        def tag(flag):
            return "OK" if flag else "FAIL"

        return (
            f"theorem1 {tag(self.theorem1_ok)}, lemma2 {tag(self.lemma2_ok)}, "
            f"theorem2 {tag(self.theorem2_ok)}, wirtinger {tag(self.wirtinger_ok)}"
        )

    def check(self, net, snap: Snapshot, label="") -> None:
        b = jacobian_bundle(net, snap)
        t1 = b.theorem1_deviation()
        mag, phase = b.lemma2_deviation()
        fd = wirtinger_fd_check(net, snap, FD_STEP)
        self.trials += 1
        self.theorem1_max = max(self.theorem1_max, t1)
        self.lemma2_mag_max = max(self.lemma2_mag_max, mag)
        self.lemma2_phase_max = max(self.lemma2_phase_max, phase)
        self.wirtinger_max = max(self.wirtinger_max, fd)
        C, _, _ = c_index(net, snap)
        if np.all(C > 1.0):
            self.theorem2_checked += 1
            if not b.sigma_min > SIGMA_FLOOR:
                self.theorem2_counterexamples += 1
                self.failures.append(f"{label}: C_min={C.min():.6g} sigma_min={b.sigma_min:.3g}")


def random_suite(trials: int = 100, n: int | tuple = (2, 8), seed: int = 7) -> SuiteResult:
    """Run the property suite on ``trials`` random networks.

    ``n`` is a fixed bus count or an inclusive ``(lo, hi)`` range.
    """
    rng = np.random.default_rng(seed)
    out = SuiteResult()
    for t in range(trials):
        size = n if isinstance(n, int) else int(rng.integers(n[0], n[1] + 1))
        net = reduce(random_case(size, rng))
        out.check(net, random_snapshot(net, rng), label=f"trial {t}")
    return out


def case_suite(case: NetworkCase, step: float = 0.1) -> SuiteResult:
    """Run the property suite along a coarse load sweep of ``case``."""
    net = reduce(case)
    out = SuiteResult()
    prev = None
    k = 1
    while True:
        lam = round(k * step, 12)
        try:
            prev = solve(net, loading=lam, init=prev)
        except Divergence:
            break
        out.check(net, prev, label=f"loading {lam:g}")
        k += 1
        if lam > 100:
            break
    return out
