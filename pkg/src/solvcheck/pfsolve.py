"""Newton power flow on the bus current injections.

Unknowns are the real and imaginary parts of the absorbed currents at the
constant-power buses; voltages follow from ``V = E' - Z I`` where ``E'``
already carries the fixed constant-current injections.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .wjac import realify, real_jacobian

log = logging.getLogger(__name__)

COLLAPSE_VOLTAGE = 1e-6
MAX_CONDITION = 1e12
MAX_HALVINGS = 10

DIVERGENCE_REASONS = ("max_iter", "singular_jacobian", "voltage_collapse_to_zero", "line_search_failed")


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Operating point at the constant-power buses.

    ``I`` and ``S`` use the absorbed polarity (out of the network), so a load
    has positive ``S.real`` and ``S == conj(I) * V``.  ``E`` is the source
    vector the buses see, constant-current injections included.
    """

    V: np.ndarray
    I: np.ndarray
    S: np.ndarray
    E: np.ndarray
    bus_ids: tuple
    loading: float = 1.0
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0
    i_ci: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    @property
    def injection(self) -> np.ndarray:
        """Net injections in the case convention (generation positive)."""
        return -self.S


class Divergence(RuntimeError):
    """Newton failed; the injection is possibly outside the solvable region."""

    def __init__(self, reason: str, iterations: int, residual: float, last: Snapshot | None = None):
        super().__init__(f"power flow diverged ({reason}) after {iterations} iterations, residual {residual:.3g}")
        self.reason = reason
        self.iterations = iterations
        self.residual = residual
        self.last = last


def snapshot_from_currents(net, I, s_inj, i_ci=None, loading=1.0, **kw) -> Snapshot:
    i_ci = net.i_base if i_ci is None else np.asarray(i_ci, dtype=complex)
    E = net.equivalent_source(i_ci)
    I = np.asarray(I, dtype=complex)
    V = E - net.Z_pq @ I
    return Snapshot(
        V=V, I=I, S=-np.asarray(s_inj, dtype=complex), E=E, bus_ids=net.pq_ids,
        loading=loading, i_ci=i_ci, **kw,
    )


def residual(net, snapshot: Snapshot) -> float:
    """Largest power mismatch ``|S - conj(I) (E' - Z I)|`` over constant-power buses."""
    if snapshot.I.size == 0:
        return 0.0
    drawn = np.conj(snapshot.I) * (snapshot.E - net.Z_pq @ snapshot.I)
    return float(np.max(np.abs(snapshot.S - drawn)))


def solve(net, s=None, i_ci=None, options: SolveOptions | None = None, *, loading: float = 1.0,
          init: Snapshot | None = None) -> Snapshot:
    """Solve for the operating point.

    ``s`` are constant-power injections and ``i_ci`` constant-current
    injections, both in the case convention; they default to the network's
    base values with loads scaled by ``loading``.  ``init`` warm-starts from a
    previous snapshot, otherwise the flat start ``I = conj(S / E')`` is used.

    Raises :class:`Divergence` when Newton fails.
    """
    opts = options or SolveOptions()
    s_inj = net.injections(loading) if s is None else np.asarray(s, dtype=complex)
    if not np.all(np.isfinite(s_inj)):
        raise ValueError("injections must be finite")
    i_ci = net.i_base if i_ci is None else np.asarray(i_ci, dtype=complex)
    E = net.equivalent_source(i_ci)
    Z = net.Z_pq
    target = -s_inj

    if init is not None and init.I.shape == target.shape:
        I = np.array(init.I, dtype=complex)
    else:
        I = np.conj(target / E)

    def mismatch(I):
        return np.conj(I) * (E - Z @ I) - target

    def done(it, res, converged=True):
        return snapshot_from_currents(
            net, I, s_inj, i_ci, loading, converged=converged, iterations=it, residual=res,
        )

    f = mismatch(I)
    res = float(np.max(np.abs(f))) if f.size else 0.0
    for it in range(opts.max_iter + 1):
        if res < opts.tol:
            log.debug("converged in %d iterations, residual %.3g", it, res)
            return done(it, res)
        if it == opts.max_iter:
            break
        if np.min(np.abs(E - Z @ I)) < COLLAPSE_VOLTAGE:
            raise Divergence("voltage_collapse_to_zero", it, res, done(it, res, False))
        JR = real_jacobian(Z, I, E)
        if np.linalg.cond(JR) > MAX_CONDITION:
            raise Divergence("singular_jacobian", it, res, done(it, res, False))
        dx = np.linalg.solve(JR, -np.concatenate([f.real, f.imag]))
        dI = dx[: I.size] + 1j * dx[I.size:]

        norm0 = np.linalg.norm(f)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            f_new = mismatch(I + t * dI)
            if np.linalg.norm(f_new) < norm0:
                break
            t *= 0.5
        else:
            raise Divergence("line_search_failed", it + 1, res, done(it, res, False))
        I = I + t * dI
        f = f_new
        res = float(np.max(np.abs(f)))
    raise Divergence("max_iter", opts.max_iter, res, done(opts.max_iter, res, False))


def solve_augmented(net, s=None, i_ci=None, options: SolveOptions | None = None, *,
                    loading: float = 1.0) -> np.ndarray:
    """Voltage-coordinate Newton on every non-slack bus, constant-current buses kept.

    Independent of the current-injection formulation: it iterates on the
    nodal equations ``i = Y v + Y_S V_S`` with ordinary polarity and does not
    use ``Z`` or ``E``.  Returns voltages ordered as ``net.pq_ids + net.ci_ids``.
    """
    opts = options or SolveOptions()
    s_inj = net.injections(loading) if s is None else np.asarray(s, dtype=complex)
    i_ci = net.i_base if i_ci is None else np.asarray(i_ci, dtype=complex)
    Y = -np.asarray(net.Y_LL)
    ys = -np.asarray(net.Y_LS).ravel() * net.slack_voltage
    n = net.n
    v = np.array(net.E, dtype=complex)

    def mismatch(v):
        i = Y @ v + ys
        return np.concatenate([v[:n] * np.conj(i[:n]) - s_inj, i[n:] - i_ci])

    f = mismatch(v)
    for it in range(opts.max_iter):
        if np.max(np.abs(f), initial=0.0) < opts.tol:
            return v
        i = Y @ v + ys
        A = np.vstack([np.diag(np.conj(i[:n])) @ np.eye(len(v))[:n], Y[n:]])
        B = np.vstack([np.diag(v[:n]) @ np.conj(Y[:n]), np.zeros((len(v) - n, len(v)))])
        dx = np.linalg.solve(realify(A, B), -np.concatenate([f.real, f.imag]))
        v = v + dx[: v.size] + 1j * dx[v.size:]
        f = mismatch(v)
    if np.max(np.abs(f), initial=0.0) < opts.tol:
        return v
    raise Divergence("max_iter", opts.max_iter, float(np.max(np.abs(f))))
