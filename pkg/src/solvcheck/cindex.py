"""Snapshot-based solvability indicators.

The C-index of a constant-power bus compares its voltage magnitude with the
sum of the magnitudes of the voltage-drop terms feeding it:

    C_h = |V_h| / sum_i |Z_hi I_i|

If every ``C_h > 1`` the dominance form of the Jacobian is strictly diagonally
dominant, hence nonsingular, so the point is not on the solvability boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import CaseError


@dataclass(frozen=True, eq=False)
class IndexReport:
    bus_ids: tuple
    v_mag: np.ndarray
    denominator: np.ndarray
    C: np.ndarray
    kessel_margin: np.ndarray
    bolognani_lhs: float
    bolognani_rhs: float
    w_over_v: float

    @property
    def C_min(self) -> float:
        return float(np.min(self.C)) if self.C.size else np.inf

    @property
    def argmin_bus(self):
        return self.bus_ids[int(np.argmin(self.C))] if self.C.size else None

    @property
    def condition_triggered(self) -> bool:
        return self.C_min <= 1.0

    @property
    def bolognani_satisfied(self) -> bool:
        return self.bolognani_lhs > self.bolognani_rhs

    def records(self) -> list[dict]:
        return [
            {
                "bus": b,
                "v_mag": float(self.v_mag[k]),
                "denominator": float(self.denominator[k]),
                "c_index": float(self.C[k]),
                "kessel_margin": float(self.kessel_margin[k]),
            }
            for k, b in enumerate(self.bus_ids)
        ]


def c_index(net, snapshot) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-bus ``(C_h, |V_h|, sum_i |Z_hi I_i|)``; a zero denominator gives ``+inf``."""
    v_mag = np.abs(snapshot.V)
    den = np.abs(net.Z_pq * np.asarray(snapshot.I)[None, :]).sum(axis=1)
    with np.errstate(divide="ignore"):
        C = np.where(den > 0, v_mag / np.where(den > 0, den, 1.0), np.inf)
    return C, v_mag, den


def necessary_condition(C, bus_ids=None) -> tuple[bool, list]:
    """Whether some ``C_h <= 1``, and the offending buses sorted by ascending ``C_h``."""
    C = np.asarray(C, dtype=float)
    if bus_ids is None:
        bus_ids = list(range(1, C.size + 1))
    hits = [k for k in np.argsort(C, kind="stable") if C[k] <= 1.0]
    return bool(hits), [bus_ids[k] for k in hits]


def row_norm_max(A: np.ndarray) -> float:
    """``max_h ||A[h, :]||_2``."""
    return float(np.max(np.linalg.norm(A, axis=1))) if A.size else 0.0


def bolognani_bound(net, s) -> tuple[float, float, bool]:
    """Fixed-point solvability test ``|V_S|^2 > 4 ||W^-1 Z W*^-1||* ||S||``.

    Returns ``(lhs, rhs, satisfied)``.
    """
    w = np.diag(net.W)
    if np.any(np.abs(w) == 0):
        raise CaseError("degenerate equivalent source (zero entry in W)")
    M = net.Z_pq / w[:, None] / np.conj(w)[None, :]
    lhs = abs(net.slack_voltage) ** 2
    rhs = 4.0 * row_norm_max(M) * float(np.linalg.norm(s))
    return lhs, rhs, lhs > rhs


def kessel_condition(net, snapshot) -> np.ndarray:
    """Per-bus ``|V_j| - |sum_i Z_ji I_i|`` (meaningful under proportional currents)."""
    return np.abs(snapshot.V) - np.abs(net.Z_pq @ snapshot.I)


def index_report(net, snapshot) -> IndexReport:
    C, v_mag, den = c_index(net, snapshot)
    lhs, rhs, _ = bolognani_bound(net, snapshot.S)
    w = np.diag(net.W)
    w_over_v = float(np.max(np.abs(w / snapshot.V))) if w.size else 0.0
    return IndexReport(
        bus_ids=snapshot.bus_ids,
        v_mag=v_mag,
        denominator=den,
        C=C,
        kessel_margin=kessel_condition(net, snapshot),
        bolognani_lhs=lhs,
        bolognani_rhs=rhs,
        w_over_v=w_over_v,
    )
