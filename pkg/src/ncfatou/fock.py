"""Truncated full Fock space: vectors, operators, shifts, grade projections.

Everything here is a compression P_N (.) P_N of the corresponding operator
on l2 of the free monoid; identities that hold on the full space hold here
only after composing with grade projections that excise boundary grades.
Operators are immutable and application is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .words import Word, WordBasis


@dataclass(frozen=True)
class FockVector:
    """Coefficient vector over words of length <= N.

    The inner product is the l2 pairing of coefficients, conjugate-linear
    in the first slot.
    """

    basis: WordBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=complex)
        if c.shape != (self.basis.size,):
            raise ValueError(
                f"coefficient vector has shape {c.shape}, basis size {self.basis.size}")
        object.__setattr__(self, "coeffs", c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other: "FockVector") -> complex:
        """<self, other>, conjugate-linear in self."""
        _same_basis(self.basis, other.basis)
        return complex(np.vdot(self.coeffs, other.coeffs))

    def __add__(self, other: "FockVector") -> "FockVector":
        _same_basis(self.basis, other.basis)
        return FockVector(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "FockVector") -> "FockVector":
        _same_basis(self.basis, other.basis)
        return FockVector(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, c: complex) -> "FockVector":
        return FockVector(self.basis, self.coeffs * c)

    __rmul__ = __mul__

    def coefficient(self, w: Word) -> complex:
        return complex(self.coeffs[self.basis.index(w)])


def vacuum(basis: WordBasis) -> FockVector:
    c = np.zeros(basis.size, dtype=complex)
    c[0] = 1.0
    return FockVector(basis, c)


def basis_vector(basis: WordBasis, w: Word) -> FockVector:
    c = np.zeros(basis.size, dtype=complex)
    c[basis.index(w)] = 1.0
    return FockVector(basis, c)


def _same_basis(a: WordBasis, b: WordBasis):
    if a != b:
        raise ValueError(f"basis mismatch: {a} vs {b}")


class TruncatedOperator:
    """Linear operator on the truncated word basis, with explicit adjoint.

    Holds a matvec/rmatvec pair acting on raw coefficient arrays; the pair
    must be mutually adjoint.  Dense materialization is opt-in via
    to_dense() since dim = O(d**N).
    """

    def __init__(self, basis: WordBasis, matvec, rmatvec, dense: np.ndarray | None = None):
        self.basis = basis
        self._matvec = matvec
        self._rmatvec = rmatvec
        self._dense = dense

    @staticmethod
    def from_dense(basis: WordBasis, A: np.ndarray) -> "TruncatedOperator":
        A = np.ascontiguousarray(A, dtype=complex)
        if A.shape != (basis.size, basis.size):
            raise ValueError(f"matrix shape {A.shape} does not match basis size {basis.size}")
        return TruncatedOperator(basis, lambda v: A @ v, lambda v: A.conj().T @ v, dense=A)

    @staticmethod
    def identity(basis: WordBasis) -> "TruncatedOperator":
        return TruncatedOperator(basis, lambda v: v.copy(), lambda v: v.copy())

    def apply(self, v):
        if isinstance(v, FockVector):
            _same_basis(v.basis, self.basis)
            return FockVector(self.basis, self._matvec(v.coeffs))
        return self._matvec(np.asarray(v, dtype=complex))

    def adjoint_apply(self, v):
        if isinstance(v, FockVector):
            _same_basis(v.basis, self.basis)
            return FockVector(self.basis, self._rmatvec(v.coeffs))
        return self._rmatvec(np.asarray(v, dtype=complex))

    def adjoint(self) -> "TruncatedOperator":
        dense = None if self._dense is None else self._dense.conj().T
        return TruncatedOperator(self.basis, self._rmatvec, self._matvec, dense=dense)

    def __matmul__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        _same_basis(self.basis, other.basis)
        return TruncatedOperator(
            self.basis,
            lambda v: self._matvec(other._matvec(v)),
            lambda v: other._rmatvec(self._rmatvec(v)),
        )

    def __add__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        _same_basis(self.basis, other.basis)
        return TruncatedOperator(
            self.basis,
            lambda v: self._matvec(v) + other._matvec(v),
            lambda v: self._rmatvec(v) + other._rmatvec(v),
        )

    def __sub__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        return self + (-1.0) * other

    def __mul__(self, c: complex) -> "TruncatedOperator":
        return TruncatedOperator(
            self.basis,
            lambda v: c * self._matvec(v),
            lambda v: np.conj(c) * self._rmatvec(v),
        )

    __rmul__ = __mul__

    def to_dense(self) -> np.ndarray:
        if self._dense is None:
            n = self.basis.size
            A = np.empty((n, n), dtype=complex)
            e = np.zeros(n, dtype=complex)
            for j in range(n):
                e[j] = 1.0
                A[:, j] = self._matvec(e)
                e[j] = 0.0
            self._dense = A
        return self._dense

    def compress(self, M: int) -> np.ndarray:
        """Dense matrix of P_M A P_M on the words of length <= M."""
        m = self.basis.sub_basis_size(M)
        cols = np.zeros((self.basis.size, m), dtype=complex)
        e = np.zeros(self.basis.size, dtype=complex)
        for j in range(m):
            e[j] = 1.0
            cols[:, j] = self._matvec(e)
            e[j] = 0.0
        return cols[:m, :]

    def adjoint_residual(self, rng: np.random.Generator, probes: int = 4) -> float:
        """max |<u, Av> - <A*u, v>| over random unit probes."""
        n = self.basis.size
        worst = 0.0
        for _ in range(probes):
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            lhs = np.vdot(u, self._matvec(v))
            rhs = np.vdot(self._rmatvec(u), v)
            worst = max(worst, abs(lhs - rhs))
        return worst


def left_shift(basis: WordBasis, k: int) -> TruncatedOperator:
    """Compression of L_k: e_w -> e_{kw}, words of top grade map to 0.

    Stored as a per-grade slice map (one nonzero per column), never dense.
    """
    if not 1 <= k <= basis.d:
        raise ValueError(f"shift letter {k} outside 1..{basis.d}")
    maps = [(basis.grade_slice(g), basis.left_concat_slice((k,), g))
            for g in range(basis.N)]

    def mv(v):
        out = np.zeros_like(v)
        for src, tgt in maps:
            out[tgt] = v[src]
        return out

    def rmv(v):
        out = np.zeros_like(v)
        for src, tgt in maps:
            out[src] = v[tgt]
        return out

    return TruncatedOperator(basis, mv, rmv)


def right_shift(basis: WordBasis, k: int) -> TruncatedOperator:
    """Compression of R_k: e_w -> e_{wk}, words of top grade map to 0."""
    if not 1 <= k <= basis.d:
        raise ValueError(f"shift letter {k} outside 1..{basis.d}")
    maps = [(basis.grade_slice(g), basis.right_concat_slice(g, (k,)))
            for g in range(basis.N)]

    def mv(v):
        out = np.zeros_like(v)
        for src, tgt in maps:
            out[tgt] = v[src]
        return out

    def rmv(v):
        out = np.zeros_like(v)
        for src, tgt in maps:
            out[src] = v[tgt]
        return out

    return TruncatedOperator(basis, mv, rmv)


def transpose_unitary(basis: WordBasis) -> TruncatedOperator:
    """Self-adjoint involution e_w -> e_{transpose(w)}; U L_k U = R_k exactly."""
    p = basis.transpose_permutation

    def mv(v):
        out = np.empty_like(v)
        out[p] = v
        return out

    return TruncatedOperator(basis, mv, mv)


def grade_projection(basis: WordBasis, M: int) -> TruncatedOperator:
    """Orthogonal projection onto the span of words of length <= M."""
    m = basis.sub_basis_size(M)

    def mv(v):
        out = np.zeros_like(v)
        out[:m] = v[:m]
        return out

    return TruncatedOperator(basis, mv, mv)


def word_monomial(basis: WordBasis, w: Word) -> TruncatedOperator:
    """Compression of L^w = L_{w_1} ... L_{w_n}: e_b -> e_{w b}."""
    lw = len(w)
    if lw > basis.N:
        raise ValueError("monomial word exceeds truncation grade")
    maps = [(basis.grade_slice(g), basis.left_concat_slice(w, g))
            for g in range(basis.N - lw + 1)]

    def mv(v):
        out = np.zeros_like(v)
        for src, tgt in maps:
            out[tgt] = v[src]
        return out

    def rmv(v):
        out = np.zeros_like(v)
        for src, tgt in maps:
            out[src] = v[tgt]
        return out

    return TruncatedOperator(basis, mv, rmv)
