"""Outer factorization of eps I + tau for positive L-Toeplitz tau.

The factor is produced through the explicit inverse-symbol formula: with
phi = (eps I + tau)^{-1} 1 and psi = phi / sqrt(<1, phi>), right
multiplication by psi inverts the outer factor, and the factor itself is
right multiplication by the graded inverse of psi.  The unimodular gauge
is fixed by making the constant coefficient of psi real and positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fock import TruncatedOperator, left_shift
from .series import NCSeries, invert, right_multiplier
from .words import WordBasis


@dataclass(frozen=True)
class LToeplitzReport:
    max_violation: float
    pairs_checked: int
    tol: float

    def __bool__(self) -> bool:
        return self.max_violation <= self.tol


def ltoeplitz_check(A: TruncatedOperator, tol: float = 1e-10,
                    max_pairs: int = 400, seed: int = 0) -> LToeplitzReport:
    """Worst deviation of <L_j g, A L_k h> from delta_jk <g, A h>.

    g, h range over monomials of grade <= N-1 (where the shifted words
    stay inside the truncation): a full sweep for small bases, a seeded
    random sample of pairs otherwise.
    """
    basis = A.basis
    if basis.N < 1:
        return LToeplitzReport(0.0, 0, tol)
    m_low = basis.sub_basis_size(basis.N - 1)
    shifts = [left_shift(basis, k) for k in range(1, basis.d + 1)]
    if m_low * m_low <= max_pairs:
        pairs = [(g, h) for g in range(m_low) for h in range(m_low)]
    else:
        rng = np.random.default_rng(seed)
        pairs = [tuple(rng.integers(0, m_low, size=2)) for _ in range(max_pairs)]
    worst = 0.0
    e = np.zeros(basis.size, dtype=complex)
    for g_idx, h_idx in pairs:
        e[h_idx] = 1.0
        Ah = A.apply(e)
        shifted = [A.apply(Lk.apply(e)) for Lk in shifts]
        e[h_idx] = 0.0
        for j, Lj in enumerate(shifts):
            e[g_idx] = 1.0
            Ljg = Lj.apply(e)
            e[g_idx] = 0.0
            for k in range(basis.d):
                val = np.vdot(Ljg, shifted[k])
                ref = Ah[g_idx] if j == k else 0.0
                worst = max(worst, abs(val - ref))
    return LToeplitzReport(float(worst), len(pairs), tol)


@dataclass(frozen=True)
class FactorResult:
    """Outer factorization data for eps I + tau.

    psi has a real positive constant coefficient (the gauge fix); y_inv is
    right multiplication by psi, y its graded inverse, and residual is the
    max entry of y* y - (eps I + tau) on the exact-region compression of
    grade <= check_grade.
    """

    eps: float
    psi: NCSeries
    y_series: NCSeries
    y_inv: TruncatedOperator
    y: TruncatedOperator
    residual: float
    check_grade: int
    contraction_norm_bound: float


def outer_factor(tau: TruncatedOperator, eps: float, *,
                 check_grade: int | None = None, psd_tol: float = 1e-10,
                 ltoeplitz_tol: float = 1e-10, support_floor: float = 1e-12,
                 probes: int = 6, seed: int = 0) -> FactorResult:
    """Factor eps I + tau = y* y with y an outer right multiplier.

    tau must be PSD (checked on random Rayleigh probes) and L-Toeplitz
    within ltoeplitz_tol (checked on monomial pairs).  The residual is
    asserted only on grades <= check_grade, defaulting to N minus the
    effective support grade of the factor at the coefficient floor, where
    compression artifacts cannot reach.
    """
    if eps <= 0:
        raise ValueError(f"shift eps must be positive, got {eps}")
    basis = tau.basis
    n = basis.size
    rng = np.random.default_rng(seed)
    scale = 1.0
    for _ in range(probes):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        ray = float(np.vdot(v, tau.apply(v)).real)
        scale = max(scale, abs(ray))
        if ray < -psd_tol * scale:
            raise ValueError(f"tau is not PSD on probes: Rayleigh quotient {ray:.3e}")
    toep = ltoeplitz_check(tau, tol=ltoeplitz_tol * scale, seed=seed)
    if not toep:
        raise ValueError(
            f"tau violates the L-Toeplitz relation by {toep.max_violation:.3e} "
            f"on {toep.pairs_checked} probe pairs")

    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    A = tau.to_dense() + eps * np.eye(n)
    phi = scipy.linalg.cho_solve(scipy.linalg.cho_factor(0.5 * (A + A.conj().T)), e0)
    inner = phi[0]
    if inner.real <= 0:
        raise ValueError(f"<1, (eps I + tau)^{{-1}} 1> = {inner:.3e} is not positive")
    psi = NCSeries(basis, phi / np.sqrt(inner.real))
    y_series = invert(psi)
    y_inv = right_multiplier(psi)
    y = right_multiplier(y_series)

    if check_grade is None:
        check_grade = max(0, basis.N - y_series.degree(floor=support_floor))
    m = basis.sub_basis_size(check_grade)
    cols = np.zeros((n, m), dtype=complex)
    e = np.zeros(n, dtype=complex)
    tau_block = np.zeros((m, m), dtype=complex)
    for j in range(m):
        e[j] = 1.0
        cols[:, j] = y.apply(e)
        tau_block[:, j] = tau.apply(e)[:m]
        e[j] = 0.0
    D = cols.conj().T @ cols - (eps * np.eye(m) + tau_block)
    residual = float(np.abs(D).max())
    return FactorResult(
        eps=eps, psi=psi, y_series=y_series, y_inv=y_inv, y=y,
        residual=residual, check_grade=check_grade,
        contraction_norm_bound=float(1.0 / np.sqrt(eps)))


def outer_factor_matrix(tau_matrix: np.ndarray, basis: WordBasis, eps: float,
                        **kwargs) -> FactorResult:
    """Convenience wrapper taking tau as a dense matrix on the word basis."""
    return outer_factor(TruncatedOperator.from_dense(basis, tau_matrix), eps, **kwargs)
