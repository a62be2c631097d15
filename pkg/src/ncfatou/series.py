"""Truncated NC power series: graded arithmetic, evaluation, multipliers, kernels.

All series operations are exact grade-by-grade through the truncation; only
evaluation at matrix points carries an analytic truncation error, and that
tail bound is always returned with the value, never dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse.linalg

from .fock import TruncatedOperator
from .words import Word, WordBasis, word_from_str, word_to_str

#: Germ conditions use strict inequalities with no tolerance; exact boundary
#: germs are rejected as degenerate.
_GERM_MSG = "germ condition violated: {}"


@dataclass(frozen=True)
class NCSeries:
    """Truncated NC power series sum_{|a| <= N} c_a Z^a over a word basis."""

    basis: WordBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=complex)
        if c.shape != (self.basis.size,):
            raise ValueError(
                f"coefficient vector has shape {c.shape}, basis size {self.basis.size}")
        object.__setattr__(self, "coeffs", c)

    @staticmethod
    def zero(basis: WordBasis) -> "NCSeries":
        return NCSeries(basis, np.zeros(basis.size, dtype=complex))

    @staticmethod
    def one(basis: WordBasis) -> "NCSeries":
        c = np.zeros(basis.size, dtype=complex)
        c[0] = 1.0
        return NCSeries(basis, c)

    @staticmethod
    def from_dict(basis: WordBasis, entries: dict) -> "NCSeries":
        c = np.zeros(basis.size, dtype=complex)
        for w, v in entries.items():
            c[basis.index(tuple(w))] = v
        return NCSeries(basis, c)

    def coefficient(self, w: Word) -> complex:
        return complex(self.coeffs[self.basis.index(w)])

    def constant_term(self) -> complex:
        return complex(self.coeffs[0])

    def degree(self, floor: float = 0.0) -> int:
        """Largest grade with a coefficient of modulus > floor."""
        for g in range(self.basis.N, -1, -1):
            if np.max(np.abs(self.coeffs[self.basis.grade_slice(g)])) > floor:
                return g
        return 0

    def support(self):
        """Yield (word, coefficient) over exactly-nonzero entries."""
        for i in np.flatnonzero(self.coeffs):
            yield self.basis.word(int(i)), complex(self.coeffs[i])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        other = _coerce(other, self.basis)
        return NCSeries(self.basis, self.coeffs + other.coeffs)

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        other = _coerce(other, self.basis)
        return NCSeries(self.basis, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = _coerce(other, self.basis)
        return NCSeries(self.basis, other.coeffs - self.coeffs)

    def __mul__(self, c: complex) -> "NCSeries":
        return NCSeries(self.basis, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self) -> "NCSeries":
        return NCSeries(self.basis, -self.coeffs)


def _coerce(x, basis: WordBasis) -> NCSeries:
    if isinstance(x, NCSeries):
        if x.basis != basis:
            raise ValueError(f"basis mismatch: {x.basis} vs {basis}")
        return x
    if np.isscalar(x):
        c = np.zeros(basis.size, dtype=complex)
        c[0] = x
        return NCSeries(basis, c)
    raise TypeError(f"cannot interpret {type(x)} as a series")


def multiply(f: NCSeries, g: NCSeries) -> NCSeries:
    """Graded Cauchy product, exact through grade N."""
    basis = f.basis
    g = _coerce(g, basis)
    d, N = basis.d, basis.N
    if d == 1:
        return NCSeries(basis, np.convolve(f.coeffs, g.coeffs)[:N + 1])
    out = np.zeros(basis.size, dtype=complex)
    for j in range(N + 1):
        fj = f.coeffs[basis.grade_slice(j)]
        if not np.any(fj):
            continue
        for k in range(N + 1 - j):
            gk = g.coeffs[basis.grade_slice(k)]
            if not np.any(gk):
                continue
            sl = basis.grade_slice(j + k)
            out[sl] += np.outer(fj, gk).ravel()
    return NCSeries(basis, out)


def invert(f: NCSeries) -> NCSeries:
    """Multiplicative inverse through grade N; requires a nonzero germ.

    Graded Neumann recursion: with f = c(1 - s), s strictly grade-raising,
    the inverse is the finite sum (1/c) sum s^k, exact on the truncation.
    """
    basis = f.basis
    c0 = f.coeffs[0]
    if c0 == 0:
        raise ValueError(_GERM_MSG.format("series has zero constant term, not invertible"))
    d, N = basis.d, basis.N
    if d == 1:
        return NCSeries(basis, _invert_1d(f.coeffs, N))
    h = np.zeros(basis.size, dtype=complex)
    h[0] = 1.0 / c0
    for n in range(1, N + 1):
        acc = np.zeros(d ** n, dtype=complex)
        for j in range(1, n + 1):
            fj = f.coeffs[basis.grade_slice(j)]
            if not np.any(fj):
                continue
            hk = h[basis.grade_slice(n - j)]
            acc += np.outer(fj, hk).ravel()
        h[basis.grade_slice(n)] = -acc / c0
    return NCSeries(basis, h)


def _invert_1d(f: np.ndarray, N: int) -> np.ndarray:
    # Newton iteration h <- h(2 - f h); correct prefix doubles each round.
    h = np.array([1.0 / f[0]], dtype=complex)
    prec = 1
    while prec < N + 1:
        prec = min(2 * prec, N + 1)
        fh = np.convolve(f[:prec], h)[:prec]
        corr = -fh
        corr[0] += 2.0
        h = np.convolve(h, corr)[:prec]
    return h


def radial_scale(f: NCSeries, r: float) -> NCSeries:
    """Coefficient rescaling c_a -> c_a r^{|a|} for 0 < r < 1."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"radial parameter must lie in (0,1), got {r}")
    basis = f.basis
    out = f.coeffs.copy()
    for g in range(1, basis.N + 1):
        out[basis.grade_slice(g)] *= r ** g
    return NCSeries(basis, out)


def transpose_conjugate(f: NCSeries) -> NCSeries:
    """The series with coefficient at a given word taken from its reversal."""
    return NCSeries(f.basis, f.coeffs[f.basis.transpose_permutation])


def cayley_to_herglotz(B: NCSeries) -> NCSeries:
    """(1 - B)^{-1}(1 + B); requires |B's germ| < 1 strictly."""
    if abs(B.constant_term()) >= 1.0:
        raise ValueError(_GERM_MSG.format(
            f"|B(0)| = {abs(B.constant_term()):.6g} >= 1"))
    one = NCSeries.one(B.basis)
    return multiply(invert(one - B), one + B)


def cayley_to_schur(H: NCSeries) -> NCSeries:
    """(H + 1)^{-1}(H - 1); requires Re H(0) > -1 strictly."""
    if H.constant_term().real <= -1.0:
        raise ValueError(_GERM_MSG.format(
            f"Re H(0) = {H.constant_term().real:.6g} <= -1"))
    one = NCSeries.one(H.basis)
    return multiply(invert(H + one), H - one)


# ---------------------------------------------------------------------------
# matrix points and evaluation

class EvalResult(NamedTuple):
    """Truncated value together with a geometric bound on the dropped tail."""

    value: np.ndarray
    tail: float


@dataclass(frozen=True)
class MatrixPoint:
    """A d-tuple of n x n matrices strictly inside the row ball."""

    Z: tuple

    def __post_init__(self):
        mats = tuple(np.ascontiguousarray(M, dtype=complex) for M in self.Z)
        if not mats:
            raise ValueError("matrix point needs at least one component")
        n = mats[0].shape[0]
        for M in mats:
            if M.shape != (n, n):
                raise ValueError("all components must be square of equal size")
        object.__setattr__(self, "Z", mats)

    @property
    def d(self) -> int:
        return len(self.Z)

    @property
    def n(self) -> int:
        return self.Z[0].shape[0]

    @cached_property
    def row_norm(self) -> float:
        S = sum(M @ M.conj().T for M in self.Z)
        return float(np.sqrt(max(np.linalg.eigvalsh(S).max(), 0.0)))

    def scaled(self, r: float) -> "MatrixPoint":
        return MatrixPoint(tuple(r * M for M in self.Z))


def _require_interior(Z: MatrixPoint, who: str):
    if Z.row_norm >= 1.0:
        raise ValueError(f"{who}: point has row norm {Z.row_norm:.6g} >= 1, "
                         "outside the open row ball")


def evaluate(f: NCSeries, Z: MatrixPoint) -> EvalResult:
    """sum_{|a| <= N} c_a Z^a with the geometric tail bound.

    The tail bound is ||f|| * rho^(N+1) / sqrt(1 - rho^2) with rho the row
    norm of Z, valid for the dropped grades of any l2 coefficient sequence.
    """
    _require_interior(Z, "evaluate")
    basis = f.basis
    if Z.d != basis.d:
        raise ValueError(f"point has {Z.d} components, basis expects {basis.d}")
    d, n = basis.d, Z.n
    N = f.degree()  # grades above the support are exactly zero
    eye = np.eye(n, dtype=complex)
    # Backward grade recursion over the word trie: the block of partial sums
    # at grade m is  c_m I + sum_k Z_k (block at m+1 restricted to children k).
    res = f.coeffs[basis.grade_slice(N)][:, None, None] * eye
    for m in range(N - 1, -1, -1):
        kids = res.reshape(d ** m, d, n, n)
        res = f.coeffs[basis.grade_slice(m)][:, None, None] * eye
        for k in range(d):
            res = res + np.einsum("ij,wjk->wik", Z.Z[k], kids[:, k])
    rho = Z.row_norm
    tail = f.norm() * rho ** (basis.N + 1) / np.sqrt(1.0 - rho ** 2)
    return EvalResult(res[0], float(tail))


# ---------------------------------------------------------------------------
# multiplier operators

def left_multiplier(f: NCSeries) -> TruncatedOperator:
    """Compression of M^L_f: e_b -> sum_a c_a e_{ab}."""
    basis = f.basis
    terms = [(w, c) for w, c in f.support()]

    def mv(v):
        out = np.zeros_like(v)
        for w, c in terms:
            for g in range(basis.N - len(w) + 1):
                out[basis.left_concat_slice(w, g)] += c * v[basis.grade_slice(g)]
        return out

    def rmv(v):
        out = np.zeros_like(v)
        for w, c in terms:
            cc = np.conj(c)
            for g in range(basis.N - len(w) + 1):
                out[basis.grade_slice(g)] += cc * v[basis.left_concat_slice(w, g)]
        return out

    return TruncatedOperator(basis, mv, rmv)


def right_multiplier(f: NCSeries) -> TruncatedOperator:
    """Compression of M^R_f: e_b -> sum_a c_a e_{ba} (multiplication by f
    on the right)."""
    basis = f.basis
    terms = [(w, c) for w, c in f.support()]

    def mv(v):
        out = np.zeros_like(v)
        for w, c in terms:
            for g in range(basis.N - len(w) + 1):
                out[basis.right_concat_slice(g, w)] += c * v[basis.grade_slice(g)]
        return out

    def rmv(v):
        out = np.zeros_like(v)
        for w, c in terms:
            cc = np.conj(c)
            for g in range(basis.N - len(w) + 1):
                out[basis.grade_slice(g)] += cc * v[basis.right_concat_slice(g, w)]
        return out

    return TruncatedOperator(basis, mv, rmv)


def series_at_right_shifts(f: NCSeries) -> TruncatedOperator:
    """The operator f(R) = U_t f(L) U_t = M^R of the transpose-conjugate."""
    return right_multiplier(transpose_conjugate(f))


def left_multiplier_norm(f: NCSeries, tol: float = 1e-12) -> float:
    """Norm of M^L_f restricted to the grade <= N subspace.

    Computed as the top eigenvalue of the exact compression of
    M^L_f* M^L_f, obtained by enlarging the working basis by deg(f) so
    that no product leaves the truncation.  This is a lower bound for the
    full-space multiplier norm; certifying Schur-class membership of a
    general polynomial is the caller's responsibility.
    """
    basis = f.basis
    deg = f.degree()
    big = WordBasis(basis.d, basis.N + deg)
    fat = NCSeries.from_dict(big, dict(f.support()))
    op = left_multiplier(fat)
    m = basis.size

    def gram_mv(v):
        v = np.asarray(v, dtype=complex).ravel()
        padded = np.zeros(big.size, dtype=complex)
        padded[:m] = v
        return op.adjoint_apply(op.apply(padded))[:m]

    if m <= 64:
        A = np.empty((m, m), dtype=complex)
        e = np.zeros(m, dtype=complex)
        for j in range(m):
            e[j] = 1.0
            A[:, j] = gram_mv(e)
            e[j] = 0.0
        lam = float(np.linalg.eigvalsh(A).max())
    else:
        lin = scipy.sparse.linalg.LinearOperator((m, m), matvec=gram_mv, dtype=complex)
        v0 = np.ones(m) / np.sqrt(m)
        lam = float(scipy.sparse.linalg.eigsh(
            lin, k=1, which="LA", tol=tol, v0=v0, maxiter=10000,
            return_eigenvectors=False)[0])
    return float(np.sqrt(max(lam, 0.0)))


# ---------------------------------------------------------------------------
# NC kernels

def szego_kernel(Z: MatrixPoint, W: MatrixPoint, P: np.ndarray,
                 order: int) -> EvalResult:
    """Truncated NC Szego kernel sum_{|a| <= order} Z^a P (W^a)^*.

    Tail bound ||P|| (rho_Z rho_W)^(order+1) / (1 - rho_Z rho_W).
    """
    _require_interior(Z, "szego_kernel")
    _require_interior(W, "szego_kernel")
    if Z.d != W.d:
        raise ValueError("points must have the same number of components")
    P = np.ascontiguousarray(P, dtype=complex)
    if P.shape != (Z.n, W.n):
        raise ValueError(f"P must be {Z.n} x {W.n}, got {P.shape}")
    total = P.copy()
    S = P.copy()
    for _ in range(order):
        S = sum(Z.Z[k] @ S @ W.Z[k].conj().T for k in range(Z.d))
        total += S
    rr = Z.row_norm * W.row_norm
    tail = np.linalg.norm(P, 2) * rr ** (order + 1) / (1.0 - rr)
    return EvalResult(total, float(tail))


def szego_kernel_matrix(Z: MatrixPoint, W: MatrixPoint, order: int) -> np.ndarray:
    """Dense realization of P -> K(Z,W)[P] on column-major vectorized P."""
    n, m = Z.n, W.n
    A = np.empty((n * m, n * m), dtype=complex)
    E = np.zeros((n, m), dtype=complex)
    for j in range(n * m):
        col, row = divmod(j, n)
        E[row, col] = 1.0
        A[:, j] = szego_kernel(Z, W, E, order).value.ravel(order="F")
        E[row, col] = 0.0
    return A


def herglotz_kernel(H: NCSeries, Z: MatrixPoint, W: MatrixPoint,
                    P: np.ndarray, order: int) -> EvalResult:
    """(1/2) K(Z,W)[H(Z) P + P H(W)^*] with combined tail bound."""
    HZ = evaluate(H, Z)
    HW = evaluate(H, W)
    A = 0.5 * (HZ.value @ P + P @ HW.value.conj().T)
    base = szego_kernel(Z, W, A, order)
    rr = Z.row_norm * W.row_norm
    amplification = np.linalg.norm(P, 2) / (1.0 - rr)
    tail = base.tail + 0.5 * (HZ.tail + HW.tail) * amplification
    return EvalResult(base.value, float(tail))


def dbr_kernel(B: NCSeries, Z: MatrixPoint, W: MatrixPoint,
               P: np.ndarray, order: int) -> EvalResult:
    """de Branges-Rovnyak kernel K(Z,W)[P] - K(Z,W)[B(Z) P B(W)^*]."""
    BZ = evaluate(B, Z)
    BW = evaluate(B, W)
    first = szego_kernel(Z, W, P, order)
    second = szego_kernel(Z, W, BZ.value @ P @ BW.value.conj().T, order)
    rr = Z.row_norm * W.row_norm
    amplification = np.linalg.norm(P, 2) / (1.0 - rr)
    tail = first.tail + second.tail + (BZ.tail + BW.tail) * amplification
    return EvalResult(first.value - second.value, float(tail))


# ---------------------------------------------------------------------------
# file format: CSV with header word,re,im; absent words are zero

def write_series_csv(f: NCSeries, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "re", "im"])
        for w, c in f.support():
            writer.writerow([word_to_str(w), repr(float(c.real)), repr(float(c.imag))])


def read_series_csv(path, basis: WordBasis) -> NCSeries:
    coeffs = np.zeros(basis.size, dtype=complex)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["word", "re", "im"]:
            raise ValueError(f"{path}: expected header word,re,im")
        for row in reader:
            w = word_from_str(row["word"], d=basis.d)
            coeffs[basis.index(w)] = float(row["re"]) + 1j * float(row["im"])
    return NCSeries(basis, coeffs)
