"""Real and Wirtinger-complex power-flow Jacobians in current coordinates.

The power drawn at the constant-power buses is ``S(I) = conj(I) * (E' - Z I)``.
Treating ``I`` and ``conj(I)`` as independent variables gives the complex
Jacobian

    JZ = [[dS/dI,   dS/dI*  ],
          [dS*/dI,  dS*/dI* ]]

with ``dS/dI = -diag(conj I) Z`` dense and ``dS/dI* = diag(V)`` diagonal.  The
real Jacobian ``d(P, Q)/d(I_D, I_Q)`` is similar to it through ``T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# above this many buses determinants are only reported as log|det| and phase
LOGDET_THRESHOLD = 200


class NonRealJacobianError(ArithmeticError):
    """T JZ T^-1 came out with a material imaginary part."""


def transform_matrix(n: int) -> np.ndarray:
    """``T`` mapping ``(dS, dS*)`` to ``(dP, dQ)`` and ``(dI, dI*)`` to ``(dI_D, dI_Q)``."""
    eye = np.eye(n)
    return np.block([[0.5 * eye, 0.5 * eye], [-0.5j * eye, 0.5j * eye]])


def realify(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Real Jacobian of ``dr = A dz + B dz*`` with respect to ``(Re z, Im z)``."""
    P = A + B
    M = A - B
    return np.block([[P.real, -M.imag], [P.imag, M.real]])


def wirtinger_blocks(Z: np.ndarray, I: np.ndarray, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ``dS/dI`` (dense) and ``dS/dI*`` (diagonal) at currents ``I``."""
    I = np.asarray(I, dtype=complex)
    V = E - Z @ I
    return -np.conj(I)[:, None] * Z, np.diag(V)


def real_jacobian(Z: np.ndarray, I: np.ndarray, E: np.ndarray) -> np.ndarray:
    """``J^R`` assembled directly from the Wirtinger blocks (no ``T`` products)."""
    A, B = wirtinger_blocks(Z, I, E)
    return realify(A, B)


def build_complex_jacobian(net, snapshot) -> np.ndarray:
    n = net.n
    if snapshot.I.shape != (n,):
        raise ValueError(f"snapshot has {snapshot.I.shape[0]} buses, network has {n}")
    A, B = wirtinger_blocks(net.Z_pq, snapshot.I, snapshot.E)
    return np.block([[A, B], [np.conj(B), np.conj(A)]])


def _power(Z, E, I):
    return np.conj(I) * (E - Z @ I)


def wirtinger_fd_check(net, snapshot, h: float = 1e-5) -> float:
    """Largest deviation between analytic Wirtinger blocks and central differences."""
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("step h must lie in [1e-7, 1e-4]")
    Z, E, I = net.Z_pq, snapshot.E, np.asarray(snapshot.I, dtype=complex)
    n = I.size
    A, B = wirtinger_blocks(Z, I, E)
    dev = 0.0
    for i in range(n):
        step = np.zeros(n, dtype=complex)
        step[i] = h
        dSdx = (_power(Z, E, I + step) - _power(Z, E, I - step)) / (2 * h)
        dSdy = (_power(Z, E, I + 1j * step) - _power(Z, E, I - 1j * step)) / (2 * h)
        fd_dI = 0.5 * (dSdx - 1j * dSdy)
        fd_dIc = 0.5 * (dSdx + 1j * dSdy)
        dev = max(dev, np.max(np.abs(fd_dI - A[:, i])), np.max(np.abs(fd_dIc - B[:, i])))
    return float(dev)


def build_real_jacobian(JZ: np.ndarray, check: float = 1e-8) -> np.ndarray:
    """``J^R = T JZ T^-1``; raises if the product is not real to ``check``."""
    n = JZ.shape[0] // 2
    T = transform_matrix(n)
    JR = T @ JZ @ np.linalg.inv(T)
    scale = max(1.0, float(np.max(np.abs(JR))))
    residue = float(np.max(np.abs(JR.imag))) if JR.size else 0.0
    if residue > check * scale:
        raise NonRealJacobianError(f"nonreal J^R (imaginary residue {residue:.3g})")
    return JR.real.copy()


def build_dominance_form(net, snapshot) -> tuple[np.ndarray, np.ndarray]:
    """``(JZ', B)``: voltages on the diagonal, ``B_hi = -Z_hi I_i`` beside them."""
    I = np.asarray(snapshot.I, dtype=complex)
    Bm = -net.Z_pq * I[None, :]
    D = np.diag(snapshot.E - net.Z_pq @ I)
    return np.block([[D, Bm], [np.conj(Bm), np.conj(D)]]), Bm


def build_F(net, snapshot, signed: bool = False) -> np.ndarray:
    """Magnitude map of the upper half of ``JZ'``.

    Off-diagonal ``|Z_ij I_j|``, diagonal ``||V_i| - |Z_ii I_i||``; with
    ``signed=True`` the diagonal keeps its sign, which is what the dominance
    test needs.
    """
    I = np.asarray(snapshot.I, dtype=complex)
    F = np.abs(net.Z_pq * I[None, :])
    diag = np.abs(snapshot.V) - np.diag(F)
    np.fill_diagonal(F, diag if signed else np.abs(diag))
    return F


def row_dominance(F_signed: np.ndarray) -> np.ndarray:
    """Per-row strict dominance margin ``F_ii - sum_{j != i} F_ij``."""
    off = F_signed.sum(axis=1) - np.diag(F_signed)
    return np.diag(F_signed) - off


@dataclass(frozen=True)
class Determinant:
    """Determinant kept as phase and log-magnitude so large systems do not overflow."""

    sign: complex
    logabs: float

    @property
    def value(self) -> complex:
        return self.sign * np.exp(self.logabs)

    @classmethod
    def of(cls, A: np.ndarray) -> "Determinant":
        sign, logabs = np.linalg.slogdet(A)
        return cls(complex(sign), float(logabs))


@dataclass(frozen=True)
class SingularityMetrics:
    det: Determinant
    sigma_min: float
    cond: float


def singularity_metrics(JR: np.ndarray) -> SingularityMetrics:
    sv = np.linalg.svd(JR, compute_uv=False)
    if sv.size == 0:
        return SingularityMetrics(Determinant(1.0, 0.0), np.inf, 1.0)
    smin = float(sv[-1])
    cond = float(sv[0] / smin) if smin > 0 else np.inf
    return SingularityMetrics(Determinant.of(JR), smin, cond)


@dataclass(frozen=True, eq=False)
class JacobianBundle:
    JR: np.ndarray
    JZ: np.ndarray
    JZp: np.ndarray
    B: np.ndarray
    F: np.ndarray
    F_signed: np.ndarray
    det_JR: Determinant
    det_JZ: Determinant
    det_JZp: Determinant
    sigma_min: float
    cond: float

    @property
    def n(self) -> int:
        return self.F.shape[0]

    def theorem1_deviation(self) -> float:
        """Relative gap between ``det J^R`` and ``det J^Z``."""
        return _relative_gap(self.det_JR, self.det_JZ)

    def lemma2_deviation(self) -> tuple[float, float]:
        """Relative magnitude gap and phase error of ``det JZ = (-1)^n det JZ'``."""
        mag = abs(np.expm1(self.det_JZ.logabs - self.det_JZp.logabs))
        expected = 1.0 if self.n % 2 == 0 else -1.0
        ratio = self.det_JZ.sign / self.det_JZp.sign / expected
        return float(mag), float(abs(np.angle(ratio)))

    def dominant(self) -> bool:
        return bool(np.all(row_dominance(self.F_signed) > 0))


def _relative_gap(a: Determinant, b: Determinant) -> float:
    # |a - b| / |b| evaluated in log space
    if b.logabs == -np.inf:
        return 0.0 if a.logabs == -np.inf else np.inf
    r = a.sign / b.sign * np.exp(a.logabs - b.logabs)
    return float(abs(r - 1.0))


def jacobian_bundle(net, snapshot) -> JacobianBundle:
    JZ = build_complex_jacobian(net, snapshot)
    JR = build_real_jacobian(JZ)
    JZp, B = build_dominance_form(net, snapshot)
    metrics = singularity_metrics(JR)
    return JacobianBundle(
        JR=JR,
        JZ=JZ,
        JZp=JZp,
        B=B,
        F=build_F(net, snapshot),
        F_signed=build_F(net, snapshot, signed=True),
        det_JR=metrics.det,
        det_JZ=Determinant.of(JZ),
        det_JZp=Determinant.of(JZp),
        sigma_min=metrics.sigma_min,
        cond=metrics.cond,
    )
