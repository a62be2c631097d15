"""NC measures as truncated moment functionals.

A positive NC measure is represented by its moments on words of length
<= N.  Positivity is decided at the working grade only (PSD of the
L-Toeplitz Gram matrix); this is a necessary condition, and every verdict
records the grade it was computed at.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .fock import FockVector, left_shift
from .series import EvalResult, MatrixPoint, NCSeries, evaluate
from .words import WordBasis, word_from_str, word_to_str


@dataclass(frozen=True)
class MomentFunctional:
    """Map word -> mu(L^word) on all words of length <= N."""

    basis: WordBasis
    moments: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.moments, dtype=complex)
        if m.shape != (self.basis.size,):
            raise ValueError(
                f"moment vector has shape {m.shape}, basis size {self.basis.size}")
        object.__setattr__(self, "moments", m)

    def __call__(self, w) -> complex:
        return complex(self.moments[self.basis.index(tuple(w))])

    def mass(self) -> float:
        """mu(I); real for positive functionals."""
        return float(self.moments[0].real)

    def __add__(self, other: "MomentFunctional") -> "MomentFunctional":
        if self.basis != other.basis:
            raise ValueError("basis mismatch in functional sum")
        return MomentFunctional(self.basis, self.moments + other.moments)

    def __sub__(self, other: "MomentFunctional") -> "MomentFunctional":
        if self.basis != other.basis:
            raise ValueError("basis mismatch in functional difference")
        return MomentFunctional(self.basis, self.moments - other.moments)

    def __mul__(self, c: float) -> "MomentFunctional":
        return MomentFunctional(self.basis, self.moments * c)

    __rmul__ = __mul__

    def restricted(self, M: int) -> "MomentFunctional":
        sub = WordBasis(self.basis.d, M)
        return MomentFunctional(sub, self.moments[:sub.size])


def nc_lebesgue(basis: WordBasis) -> MomentFunctional:
    """The vacuum state: moment 1 at the empty word, 0 elsewhere."""
    m = np.zeros(basis.size, dtype=complex)
    m[0] = 1.0
    return MomentFunctional(basis, m)


def vector_state(x: FockVector) -> MomentFunctional:
    """m_x(L^w) = <x, L^w x>; always positive.

    Exact on the truncation since x is a genuine polynomial: the moment at
    w is sum_b conj(x_{wb}) x_b over words b with |w| + |b| <= N.
    """
    basis = x.basis
    d, N = basis.d, basis.N
    out = np.zeros(basis.size, dtype=complex)
    for g in range(N + 1):
        acc = np.zeros(d ** g, dtype=complex)
        for j in range(N + 1 - g):
            block = x.coeffs[basis.grade_slice(g + j)].reshape(d ** g, d ** j)
            acc += block.conj() @ x.coeffs[basis.grade_slice(j)]
        out[basis.grade_slice(g)] = acc
    return MomentFunctional(basis, out)


# ---------------------------------------------------------------------------
# Gram matrix and positivity

@dataclass(frozen=True)
class GramMatrix:
    """Hermitian matrix G[a,b] = mu(L^{a*} L^b) under the L-Toeplitz fill rule.

    G[a,b] = mu(g) if b = a.g, conj(mu(g)) if a = b.g, and 0 otherwise.
    null_tol is the relative eigenvalue cutoff defining the numerical null
    space of the GNS pre-inner product.
    """

    basis: WordBasis
    matrix: np.ndarray
    null_tol: float = 1e-10

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def gram(mu: MomentFunctional, null_tol: float = 1e-10) -> GramMatrix:
    """Assemble the Gram matrix blockwise from the fill rule."""
    basis = mu.basis
    d, N = basis.d, basis.N
    G = np.zeros((basis.size, basis.size), dtype=complex)
    for ga in range(N + 1):
        na = d ** ga
        r0 = int(basis.offsets[ga])
        for gg in range(1, N + 1 - ga):
            vals = mu.moments[basis.grade_slice(gg)]
            if not np.any(vals):
                continue
            ng = d ** gg
            c0 = int(basis.offsets[ga + gg])
            ii = np.repeat(np.arange(na), ng)
            kk = np.tile(np.arange(ng), na)
            G[r0 + ii, c0 + ii * ng + kk] = vals[kk]
    G = G + G.conj().T
    G[np.diag_indices_from(G)] = mu.moments[0].real
    return GramMatrix(basis, G, null_tol)


def gram_matvec(mu: MomentFunctional, v: np.ndarray) -> np.ndarray:
    """Apply the Gram matrix without materializing it."""
    basis = mu.basis
    d, N = basis.d, basis.N
    v = np.asarray(v, dtype=complex)
    out = np.zeros_like(v)
    for ga in range(N + 1):
        na = d ** ga
        va = v[basis.grade_slice(ga)]
        acc = mu.moments[0].real * va
        for gg in range(1, N + 1 - ga):
            vals = mu.moments[basis.grade_slice(gg)]
            ext = v[basis.grade_slice(ga + gg)].reshape(na, d ** gg)
            acc += ext @ vals
            out[basis.grade_slice(ga + gg)] += np.outer(va, vals.conj()).ravel()
        out[basis.grade_slice(ga)] += acc
    return out


@dataclass(frozen=True)
class PositivityReport:
    positive: bool
    min_eigenvalue: float
    grade: int
    tol: float

    def __bool__(self) -> bool:
        return self.positive


def is_positive(mu: MomentFunctional, tol: float = 1e-10) -> PositivityReport:
    """PSD verdict of the Gram matrix at the working grade.

    Necessary-condition check only: full positivity would need all grades.
    """
    lam = float(gram(mu).eigenvalues().min())
    return PositivityReport(lam >= -tol, lam, mu.basis.N, tol)


# ---------------------------------------------------------------------------
# Clark measure <-> Herglotz transform

def clark_measure(B: NCSeries) -> MomentFunctional:
    """Moments of the NC Clark measure of a Schur-class B.

    mu(empty) = Re H(0) and mu(L^a) = conj(H_{transpose(a)}) / 2 for the
    Cayley transform H of B.  Schur-class membership of B is the caller's
    assertion; only the germ condition |B(0)| < 1 is checked here.
    """
    from .series import cayley_to_herglotz
    H = cayley_to_herglotz(B)
    return _clark_from_herglotz(H)


def _clark_from_herglotz(H: NCSeries) -> MomentFunctional:
    basis = H.basis
    moments = 0.5 * np.conj(H.coeffs[basis.transpose_permutation])
    moments[0] = H.coeffs[0].real
    return MomentFunctional(basis, moments)


def herglotz_transform(mu: MomentFunctional) -> NCSeries:
    """Taylor coefficients of the NC Herglotz-Riesz transform.

    H(0) = mu(I) and H_a = 2 conj(mu(L^{transpose(a)})) otherwise; the
    imaginary part of H(0) is normalized to zero.
    """
    basis = mu.basis
    coeffs = 2.0 * np.conj(mu.moments[basis.transpose_permutation])
    coeffs[0] = mu.moments[0].real
    return NCSeries(basis, coeffs)


def herglotz_eval(mu: MomentFunctional, Z: MatrixPoint) -> EvalResult:
    """(id_n (x) mu) applied to (I + ZL*)(I - ZL*)^{-1}, truncated.

    Computed through the finite Neumann series of the nilpotent
    grade-lowering contraction ZL* on the truncation; agrees with
    evaluate(herglotz_transform(mu), Z) exactly through grade N.
    """
    basis = mu.basis
    if Z.d != basis.d:
        raise ValueError(f"point has {Z.d} components, basis expects {basis.d}")
    if Z.row_norm >= 1.0:
        raise ValueError(f"herglotz_eval: row norm {Z.row_norm:.6g} >= 1")
    d, N, n = basis.d, basis.N, Z.n
    u = np.conj(mu.moments)
    u[0] = mu.moments[0].real  # Im H(0) = 0 gauge

    def shift_down(V):
        # V has shape (n, size); apply sum_k Z_k (x) L_k^* .
        out = np.zeros_like(V)
        for k in range(1, d + 1):
            for g in range(N):
                out[:, basis.grade_slice(g)] += \
                    Z.Z[k - 1] @ V[:, basis.left_concat_slice((k,), g)]
        return out

    H = np.empty((n, n), dtype=complex)
    for j in range(n):
        V = np.zeros((n, basis.size), dtype=complex)
        V[j, :] = u
        acc = V.copy()
        term = V
        for _ in range(N):
            term = shift_down(term)
            if not np.any(term):
                break
            acc += term
        W = 2.0 * acc - V
        H[:, j] = W[:, 0]
    rho = Z.row_norm
    tail = 2.0 * abs(mu.moments[0]) * rho ** (N + 1) / (1.0 - rho)
    return EvalResult(H, float(tail))


def cauchy_transform(mu: MomentFunctional, p: FockVector, Z: MatrixPoint) -> EvalResult:
    """Free Cauchy transform sum_a Z^a <L^a, p>_mu at the point Z."""
    if p.basis != mu.basis:
        raise ValueError("vector and functional live on different bases")
    coeffs = gram_matvec(mu, p.coeffs)
    return evaluate(NCSeries(mu.basis, coeffs), Z)


# ---------------------------------------------------------------------------
# GNS quotient

@dataclass(frozen=True)
class GnsIsometry:
    """pi_mu(L_k) acting on the numerical GNS quotient.

    coords maps a monomial-coefficient vector to quotient coordinates in
    which the mu-inner product is standard; matrix is the action of the
    k-th shift in those coordinates.
    """

    matrix: np.ndarray
    coords: np.ndarray
    rank: int
    letter: int
    isometry_residual: float

    def apply_to_poly(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ (self.coords @ v)


def _gns_factor(G: GramMatrix):
    lam, V = np.linalg.eigh(G.matrix)
    lam_max = float(lam.max(initial=0.0))
    if lam_max <= 0.0:
        raise ValueError("Gram matrix is zero; GNS quotient is trivial")
    cutoff = G.null_tol * lam_max
    if float(lam.min()) < -cutoff:
        raise ValueError(
            f"Gram matrix is not PSD within tolerance: min eigenvalue {lam.min():.3e}")
    keep = lam > cutoff
    W = (np.sqrt(lam[keep])[:, None] * V[:, keep].conj().T)
    Winv = V[:, keep] / np.sqrt(lam[keep])[None, :]
    return W, Winv


def gns_isometry(G: GramMatrix, k: int) -> GnsIsometry:
    """[a] -> [L_k a] on the GNS quotient, with its isometry defect.

    Quotient classes are represented by polynomials of grade <= N-1
    (least-squares through the quotient map), so that the shift never
    crosses the truncation boundary; classes not reachable from those
    grades are compression artifacts and map to 0.  The residual is the
    worst deviation of <Pi_k[a], Pi_k[b]>_mu from <[a],[b]>_mu over the
    reachable classes.
    """
    basis = G.basis
    if not 1 <= k <= basis.d:
        raise ValueError(f"shift letter {k} outside 1..{basis.d}")
    W, _ = _gns_factor(G)
    Lk = left_shift(basis, k)
    Lk_mat = np.zeros((basis.size, basis.size), dtype=complex)
    e = np.zeros(basis.size, dtype=complex)
    for j in range(basis.size):
        e[j] = 1.0
        Lk_mat[:, j] = Lk.apply(e)
        e[j] = 0.0
    m_low = basis.sub_basis_size(basis.N - 1) if basis.N >= 1 else basis.size
    W_low = W[:, :m_low]
    rep = np.zeros((basis.size, W.shape[0]), dtype=complex)
    rep[:m_low, :] = np.linalg.pinv(W_low, rcond=1e-12)
    Pi = W @ Lk_mat @ rep
    proj = W_low @ np.linalg.pinv(W_low, rcond=1e-12)  # onto reachable classes
    defect = proj.conj().T @ (Pi.conj().T @ Pi - np.eye(W.shape[0])) @ proj
    residual = float(np.abs(defect).max()) if defect.size else 0.0
    return GnsIsometry(Pi, W, W.shape[0], k, residual)


def gns_row_residual(G: GramMatrix) -> float:
    """Joint row-isometry defect max_{k,j} |<Pi_k a, Pi_j b> - delta <a,b>|."""
    basis = G.basis
    ops = [gns_isometry(G, k) for k in range(1, basis.d + 1)]
    W = ops[0].coords
    m_low = basis.sub_basis_size(basis.N - 1) if basis.N >= 1 else basis.size
    W_low = W[:, :m_low]
    worst = 0.0
    for k, ok in enumerate(ops):
        for j, oj in enumerate(ops):
            target = W_low.conj().T @ W_low if k == j else 0.0
            defect = W_low.conj().T @ (ok.matrix.conj().T @ oj.matrix) @ W_low - target
            worst = max(worst, float(np.abs(defect).max()))
    return worst


# ---------------------------------------------------------------------------
# sum-of-squares split

def sos_split(p: FockVector) -> NCSeries:
    """The series u with p(L)* p(L) = u(L) + u(L)*.

    u_g = sum_a conj(p_a) p_{a.g} for g nonempty and u at the empty word is
    half the coefficient energy, so mu(p*p) = 2 Re sum_g u_g mu(L^g) for
    every moment functional on the same basis.
    """
    basis = p.basis
    d, N = basis.d, basis.N
    u = np.zeros(basis.size, dtype=complex)
    u[0] = 0.5 * float(np.vdot(p.coeffs, p.coeffs).real)
    for g in range(1, N + 1):
        acc = np.zeros(d ** g, dtype=complex)
        for j in range(N + 1 - g):
            block = p.coeffs[basis.grade_slice(j + g)].reshape(d ** j, d ** g)
            acc += p.coeffs[basis.grade_slice(j)].conj() @ block
        u[basis.grade_slice(g)] = acc
    return NCSeries(basis, u)


def quadratic_form(mu: MomentFunctional, p: FockVector) -> float:
    """q_mu(p, p) = mu(p* p) evaluated through the Gram matrix."""
    v = gram_matvec(mu, p.coeffs)
    return float(np.vdot(p.coeffs, v).real)


# ---------------------------------------------------------------------------
# file format: CSV with header word,re,im; the file must contain "e"

def write_moments_csv(mu: MomentFunctional, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "re", "im"])
        for i in range(mu.basis.size):
            c = mu.moments[i]
            if i == 0 or c != 0:
                writer.writerow([word_to_str(mu.basis.word(i)),
                                 repr(float(c.real)), repr(float(c.imag))])


def read_moments_csv(path, basis: WordBasis) -> MomentFunctional:
    moments = np.zeros(basis.size, dtype=complex)
    seen_unit = False
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["word", "re", "im"]:
            raise ValueError(f"{path}: expected header word,re,im")
        for row in reader:
            w = word_from_str(row["word"], d=basis.d)
            seen_unit = seen_unit or w == ()
            moments[basis.index(w)] = float(row["re"]) + 1j * float(row["im"])
    if not seen_unit:
        raise ValueError(f"{path}: moment file must contain the unit word 'e'")
    return MomentFunctional(basis, moments)
