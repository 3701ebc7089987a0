"""Proportional load sweeps and parameter-sensitivity studies."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cindex import bolognani_bound, c_index, index_report
from .netmodel import Bus, NetworkCase, reduce
from .pfsolve import Divergence, SolveOptions, Snapshot, solve
from .wjac import real_jacobian

log = logging.getLogger(__name__)

DG_MODES = ("hold_constant_power", "hold_constant_current")
_MODE_ALIASES = {"power": "hold_constant_power", "current": "hold_constant_current"}


class InsolvableCaseError(RuntimeError):
    """The case has no power-flow solution at the requested loading."""


def _mode(dg_mode: str) -> str:
    mode = _MODE_ALIASES.get(dg_mode, dg_mode)
    if mode not in DG_MODES:
        raise ValueError(f"unknown dg_mode {dg_mode!r}")
    return mode


@dataclass(frozen=True)
class SweepConfig:
    step: float = 0.01
    max_loading: float = 20.0
    start: float | None = None
    dg_mode: str | None = None
    options: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.max_loading > 1:
            raise ValueError("max_loading must exceed 1")
        if self.dg_mode is not None:
            object.__setattr__(self, "dg_mode", _mode(self.dg_mode))


@dataclass(frozen=True)
class SweepRow:
    loading: float
    converged: bool
    c_min: float
    c_argmin_bus: object
    bolognani_ok: bool | None
    sigma_min: float


@dataclass(eq=False)
class SweepReport:
    rows: list[SweepRow]
    lambda_critical: float | None
    lambda_cunity: float | None
    lambda_bolognani: float | None
    c_unity_observed: bool
    base_snapshot: Snapshot | None = None
    last_snapshot: Snapshot | None = None

    @property
    def mismatch_pct(self) -> float | None:
        if self.lambda_critical is None or self.lambda_cunity is None:
            return None
        return (self.lambda_critical - self.lambda_cunity) / self.lambda_critical * 100.0

    def summary(self) -> dict:
        return {
            "lambda_critical": self.lambda_critical,
            "lambda_cunity": self.lambda_cunity,
            "lambda_bolognani": self.lambda_bolognani,
            "mismatch_pct": self.mismatch_pct,
            "c_unity_observed": self.c_unity_observed,
        }


def _sigma_min(net, snap: Snapshot) -> float:
    if snap.I.size == 0:
        return math.inf
    JR = real_jacobian(net.Z_pq, snap.I, snap.E)
    return float(np.linalg.svd(JR, compute_uv=False)[-1])


def run_sweep(case: NetworkCase, config: SweepConfig | None = None) -> SweepReport:
    """Scale every load by a growing factor until the power flow fails.

    Loading factors run over the grid ``k * step``; DG injections stay at
    their base values.  A warm-start failure is re-checked from a flat start
    before the sweep stops.  The C = 1 crossing is the first grid point with
    ``C_min <= 1``; when the solution disappears first, the crossing is placed
    at the last convergent point (the boundary itself has ``C_min <= 1``).

    Raises :class:`InsolvableCaseError` if the sweep fails at or below a
    loading of 1.
    """
    config = config or SweepConfig()
    if config.dg_mode == "hold_constant_current":
        case = convert_dgs(case, "hold_constant_current")
    net = reduce(case)
    step = config.step
    k = max(1, round((config.start if config.start is not None else step) / step))
    rows: list[SweepRow] = []
    prev = base = None
    lam_crit = lam_c1 = lam_bol = None
    diverged = False
    while True:
        lam = round(k * step, 12)
        if lam > config.max_loading + 1e-12:
            break
        try:
            snap = solve(net, loading=lam, options=config.options, init=prev)
        except Divergence as exc:
            log.debug("warm start failed at %.4f (%s); retrying flat", lam, exc.reason)
            try:
                snap = solve(net, loading=lam, options=config.options)
            except Divergence as exc2:
                log.info("power flow lost at loading %.4f (%s)", lam, exc2.reason)
                rows.append(SweepRow(lam, False, math.nan, None, None, math.nan))
                diverged = True
                break
        C, _, _ = c_index(net, snap)
        c_min = float(np.min(C)) if C.size else math.inf
        argmin = net.pq_ids[int(np.argmin(C))] if C.size else None
        ok = bolognani_bound(net, snap.S)[2]
        rows.append(SweepRow(lam, True, c_min, argmin, ok, _sigma_min(net, snap)))
        if lam_c1 is None and c_min <= 1.0:
            lam_c1 = lam
        if lam_bol is None and not ok:
            lam_bol = lam
        if abs(lam - 1.0) < 1e-9:
            base = snap
        lam_crit = lam
        prev = snap
        k += 1

    if diverged and (lam_crit is None or lam_crit < 1.0 - 1e-9):
        raise InsolvableCaseError("base case (loading 1.0) has no power-flow solution")
    observed = lam_c1 is not None
    if diverged and lam_c1 is None:
        lam_c1 = lam_crit
    return SweepReport(
        rows=rows,
        lambda_critical=lam_crit if diverged else None,
        lambda_cunity=lam_c1,
        lambda_bolognani=lam_bol,
        c_unity_observed=observed,
        base_snapshot=base,
        last_snapshot=prev,
    )


# ---------------------------------------------------------------------------
# DG scenarios


def _weights(buses) -> np.ndarray:
    w = np.array(
        [abs(b.s_base) if b.s_base is not None else abs(b.i_base or 0) for b in buses],
        dtype=float,
    )
    if not np.any(w > 0):
        w = np.ones(len(buses))
    return w / w.sum()


def apply_penetration(case: NetworkCase, pct: float, dg_mode: str = "hold_constant_power") -> NetworkCase:
    """Resize DGs so total capacity is ``pct`` % of the total base apparent load.

    Capacity is split in proportion to the DG sizes already in the case
    (evenly if they are all zero) and injected at unity power factor.  In
    constant-current mode each DG injects the current that delivers its
    capacity at the bus's zero-load voltage.
    """
    mode = _mode(dg_mode)
    if pct < 0:
        raise ValueError("penetration must be non-negative")
    loads = [b for b in case.buses if b.kind == "pq_load"]
    dgs = [b for b in case.buses if b.kind in ("pq_dg", "ci_dg")]
    total = pct / 100.0 * sum(abs(b.s_base) for b in loads)
    caps = dict(zip((b.id for b in dgs), total * _weights(dgs)))
    sized = case.replace_buses(
        [replace(b, kind="pq_dg", s_base=complex(caps[b.id]), i_base=None) if b.id in caps else b
         for b in case.buses]
    )
    return convert_dgs(sized, mode)


def convert_dgs(case: NetworkCase, dg_mode: str) -> NetworkCase:
    """Switch every DG to constant-power or constant-current operation."""
    mode = _mode(dg_mode)
    if mode == "hold_constant_power":
        return case.replace_buses(
            [replace(b, kind="pq_dg", s_base=_ci_to_power(case, b), i_base=None)
             if b.kind == "ci_dg" else b for b in case.buses]
        )
    if not any(b.kind == "pq_dg" for b in case.buses):
        return case
    net = reduce(case)
    e0 = dict(zip(net.pq_ids + net.ci_ids, net.E))
    return case.replace_buses(
        [replace(b, kind="ci_dg", i_base=np.conj(b.s_base / e0[b.id]), s_base=None)
         if b.kind == "pq_dg" else b for b in case.buses]
    )


def _ci_to_power(case, bus: Bus) -> complex:
    net = reduce(case)
    e0 = dict(zip(net.pq_ids + net.ci_ids, net.E))
    return complex(e0[bus.id] * np.conj(bus.i_base))


# ---------------------------------------------------------------------------
# sensitivities


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    bus_ids: tuple
    C_before: np.ndarray
    C_after: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            d = self.C_after - self.C_before
        return np.where(np.isinf(self.C_before) & np.isinf(self.C_after), 0.0, d)


def _solve_c(case, loading, options):
    net = reduce(case)
    try:
        snap = solve(net, loading=loading, options=options)
    except Divergence as exc:
        raise InsolvableCaseError(f"no power-flow solution at loading {loading}: {exc}") from exc
    return net, index_report(net, snap).C


def scale_impedance(case: NetworkCase, a: float) -> NetworkCase:
    """Multiply every admittance (series and shunt) by ``a``."""
    return NetworkCase(
        tuple(replace(b, shunt=b.shunt * a) for b in case.buses),
        tuple(replace(br, z=br.z / a) for br in case.branches),
        case.slack_voltage,
        case.base_mva,
    )


def impedance_sensitivity(case: NetworkCase, a: float, loading: float = 1.0,
                          options: SolveOptions | None = None) -> SensitivityReport:
    """C-indices before and after a homogeneous admittance scaling ``Y' = a Y``."""
    if not 0 < a <= 1:
        raise ValueError("impedance scale a must lie in (0, 1]")
    net, before = _solve_c(case, loading, options)
    _, after = _solve_c(scale_impedance(case, a), loading, options)
    return SensitivityReport(net.pq_ids, before, after)


def set_load_power_factor(case: NetworkCase, pf: float) -> NetworkCase:
    """Re-angle every load to lagging power factor ``pf`` keeping ``|S|``."""
    if not 0 < pf <= 1:
        raise ValueError("power factor must lie in (0, 1]")
    q = math.sqrt(1.0 - pf * pf)
    return case.replace_buses(
        [replace(b, s_base=-abs(b.s_base) * complex(pf, q)) if b.kind == "pq_load" else b
         for b in case.buses]
    )


def load_power_factors(case: NetworkCase) -> dict:
    return {b.id: (abs(b.s_base.real) / abs(b.s_base) if b.s_base else 1.0)
            for b in case.buses if b.kind == "pq_load"}


def power_factor_sensitivity(case: NetworkCase, pf: float, base_pf: float | None = None,
                             loading: float = 1.0, options: SolveOptions | None = None) -> SensitivityReport:
    """C-indices before and after lowering every load's power factor to ``pf``.

    With ``base_pf`` the loads are first re-angled to it and that case is the
    reference.
    """
    if base_pf is not None:
        case = set_load_power_factor(case, base_pf)
    current = load_power_factors(case)
    if any(pf > p + 1e-12 for p in current.values()):
        raise ValueError("target power factor must not exceed the current load power factors")
    net, before = _solve_c(case, loading, options)
    _, after = _solve_c(set_load_power_factor(case, pf), loading, options)
    return SensitivityReport(net.pq_ids, before, after)


def linearized_voltage(net, s, i_ci=None) -> np.ndarray:
    """First-order voltage estimate ``V_S (1 + Z S* / |V_S|^2)`` at constant-power buses.

    ``s`` is the constant-power injection in the case convention; fixed
    constant-current injections enter through their exact linear term.
    """
    v_s = net.slack_voltage
    s = np.asarray(s, dtype=complex)
    v = v_s * (1.0 + net.Z_pq @ np.conj(s) / abs(v_s) ** 2)
    if net.n_ci:
        v = v + (net.equivalent_source(i_ci) - net.E_pq)
    return v
