"""Radial operators, regularized resolvents, and the coupled (r, N) limit.

The strong-resolvent limit lives on the infinite-dimensional space; at a
fixed truncation N, letting r -> 1 gives wrong answers (the resolvent of
the all-ones Poisson block tends to I - J/(N+2) instead of I).  The
schedule therefore couples r_j = 1 - 2^{-j} to a truncation N_j with
r_j^{N_j} <= tail_tol, which keeps the corner of the truncated resolvent
close to the corner of the untruncated one.

The Radon-Nikodym compression is recovered from resolvents, never from
T_r directly: T_hat = Delta_hat(eps)^{-1} - eps I on an enlarged corner
(recovery grade M + buffer), then restricted to grade M.  Inverting the
corner of the resolvent is a Schur complement of eps I + T, and the
enlargement buffer pushes its systematic deficit below tolerance for
symbols whose moments decay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fock import TruncatedOperator
from .measure import (MomentFunctional, PositivityReport, clark_measure, gram,
                      herglotz_transform, is_positive)
from .series import (NCSeries, radial_scale, series_at_right_shifts,
                     transpose_conjugate)
from .words import WordBasis, word_count


# ---------------------------------------------------------------------------
# schedules

@dataclass(frozen=True)
class Schedule:
    """List of (r, N) stages with r increasing toward 1."""

    stages: tuple
    achieved_r_max: float
    requested_r_max: float

    @staticmethod
    def coupled(d: int, tail_tol: float = 1e-8, j_max: int = 10, j_min: int = 1,
                memory_budget_mb: float = 512.0) -> "Schedule":
        """r_j = 1 - 2^{-j} with N_j chosen so that r_j^{N_j} <= tail_tol.

        For d >= 2 the truncation is capped by the memory budget and r is
        capped accordingly (r^N_cap <= tail_tol), reporting the achieved
        r_max rather than erroring, as long as at least one stage fits.
        """
        if not 0 < tail_tol < 1:
            raise ValueError(f"tail_tol must be in (0,1), got {tail_tol}")
        if j_min < 1 or j_max < j_min:
            raise ValueError(f"bad schedule range j_min={j_min}, j_max={j_max}")
        budget_coeffs = memory_budget_mb * 2 ** 20 / (16.0 * 4.0)
        if d == 1:
            n_cap = min(int(budget_coeffs) - 1, 2_000_000)
        else:
            n_cap = 0
            while word_count(d, n_cap + 1) <= budget_coeffs:
                n_cap += 1
        if n_cap < 1:
            raise ValueError(
                f"schedule infeasible: memory budget {memory_budget_mb} MB cannot "
                f"hold even a grade-1 basis for d={d}")
        r_cap = tail_tol ** (1.0 / n_cap)
        stages = []
        requested = 0.0
        for j in range(j_min, j_max + 1):
            r = 1.0 - 0.5 ** j
            requested = max(requested, r)
            if r > r_cap:
                r = r_cap
            N = int(np.ceil(np.log(tail_tol) / np.log(r)))
            N = min(N, n_cap)
            if not stages or (r, N) != stages[-1]:
                stages.append((r, N))
        return Schedule(tuple(stages), achieved_r_max=stages[-1][0],
                        requested_r_max=requested)

    @staticmethod
    def explicit(stages) -> "Schedule":
        stages = tuple((float(r), int(N)) for r, N in stages)
        for r, N in stages:
            if not 0 < r < 1:
                raise ValueError(f"radius {r} outside (0,1)")
            if N < 0:
                raise ValueError(f"negative truncation grade {N}")
        return Schedule(stages, achieved_r_max=max(r for r, _ in stages),
                        requested_r_max=max(r for r, _ in stages))

    def max_grade(self) -> int:
        return max(N for _, N in self.stages)


# ---------------------------------------------------------------------------
# radial operators T_r = Re H(rR)

class RadialOperator(TruncatedOperator):
    """Compression of T_r = Re H_B(rR) on the truncated basis.

    Modes: 'dense' materializes the matrix; 'toeplitz' (d=1) stores the
    Toeplitz first column and applies by FFT; 'neumann' applies H(rR)
    matrix-free by the germ-shifted finite Neumann solve of
    (I - B(rR)) x = (I + B(rR)) v, exact on the truncation because the
    grade-raising part of B(rR) is nilpotent there.
    """

    def __init__(self, basis: WordBasis, r: float, mode: str, matvec,
                 B: NCSeries | None = None, column: np.ndarray | None = None,
                 dense: np.ndarray | None = None):
        super().__init__(basis, matvec, matvec, dense=dense)
        self.r = r
        self.mode = mode
        self.B = B
        self.column = column

    @staticmethod
    def from_schur(B: NCSeries, r: float, mode: str = "auto",
                   dense_limit: int = 2048) -> "RadialOperator":
        """Build T_r from a Schur-class symbol (germ |B(0)| < 1 checked)."""
        if not 0.0 < r < 1.0:
            raise ValueError(f"radius must lie in (0,1), got {r}")
        if abs(B.constant_term()) >= 1.0:
            raise ValueError(
                f"Neumann solve needs |B(0)| < 1, got {abs(B.constant_term()):.6g}")
        basis = B.basis
        mode = _pick_mode(basis, mode, dense_limit)
        if mode == "neumann":
            return _radial_neumann(B, r)
        from .series import cayley_to_herglotz
        H = cayley_to_herglotz(B)
        return RadialOperator.from_herglotz(H, r, mode=mode, B=B,
                                            dense_limit=dense_limit)

    @staticmethod
    def from_herglotz(H: NCSeries, r: float, mode: str = "auto",
                      B: NCSeries | None = None,
                      dense_limit: int = 2048) -> "RadialOperator":
        """Build T_r = Re H(rR) directly from Herglotz coefficients."""
        if not 0.0 < r < 1.0:
            raise ValueError(f"radius must lie in (0,1), got {r}")
        basis = H.basis
        mode = _pick_mode(basis, mode, dense_limit)
        if basis.d == 1 and mode in ("toeplitz", "dense"):
            column = _toeplitz_column(H, r)
            if mode == "toeplitz":
                matvec = _toeplitz_matvec(column)
                return RadialOperator(basis, r, "toeplitz", matvec, B=B, column=column)
            dense = scipy.linalg.toeplitz(column, column.conj())
            return RadialOperator(basis, r, "dense", lambda v: dense @ v,
                                  B=B, column=column, dense=dense)
        H_r = radial_scale(H, r)
        if mode == "dense":
            X = _dense_right_multiplier(transpose_conjugate(H_r))
            dense = 0.5 * (X + X.conj().T)
            return RadialOperator(basis, r, "dense", lambda v: dense @ v,
                                  B=B, dense=dense)
        op = series_at_right_shifts(H_r)

        def matvec(v):
            return 0.5 * (op.apply(v) + op.adjoint_apply(v))

        return RadialOperator(basis, r, "neumann", matvec, B=B)


def radial_operator(B: NCSeries, r: float, mode: str = "auto",
                    dense_limit: int = 2048) -> RadialOperator:
    """T_r = Re H_B(rR) for a Schur-class symbol; see RadialOperator."""
    return RadialOperator.from_schur(B, r, mode=mode, dense_limit=dense_limit)


def _pick_mode(basis: WordBasis, mode: str, dense_limit: int) -> str:
    if mode != "auto":
        if mode not in ("dense", "toeplitz", "neumann"):
            raise ValueError(f"unknown radial mode {mode!r}")
        if mode == "toeplitz" and basis.d != 1:
            raise ValueError("toeplitz mode requires d = 1")
        return mode
    if basis.size <= dense_limit:
        return "dense"
    return "toeplitz" if basis.d == 1 else "neumann"


def _toeplitz_column(H: NCSeries, r: float) -> np.ndarray:
    N = H.basis.N
    col = 0.5 * H.coeffs * r ** np.arange(N + 1)
    col[0] = H.coeffs[0].real
    return col


def _toeplitz_matvec(column: np.ndarray):
    n = len(column)
    emb = np.zeros(2 * n, dtype=complex)
    emb[:n] = column
    emb[n + 1:] = column[:0:-1].conj()
    f_emb = np.fft.fft(emb)

    def matvec(v):
        pad = np.zeros(2 * n, dtype=complex)
        pad[:n] = v
        return np.fft.ifft(f_emb * np.fft.fft(pad))[:n]

    return matvec


def _dense_right_multiplier(g: NCSeries) -> np.ndarray:
    basis = g.basis
    M = np.zeros((basis.size, basis.size), dtype=complex)
    rows = np.arange(basis.size)
    for w, c in g.support():
        for gs in range(basis.N - len(w) + 1):
            src = basis.grade_slice(gs)
            tgt = basis.right_concat_slice(gs, w)
            M[rows[tgt], rows[src]] += c
    return M


def _radial_neumann(B: NCSeries, r: float) -> RadialOperator:
    basis = B.basis
    B_r = radial_scale(B, r)
    beta = B_r.constant_term()
    shifted = B_r - NCSeries.from_dict(basis, {(): beta})
    Bop = series_at_right_shifts(B_r)
    Sop = series_at_right_shifts(shifted * (1.0 / (1.0 - beta)))

    def solve_one_minus_b(w, adjoint):
        # (I - B(rR))^{-1} = (1-beta)^{-1} sum_k S^k with S strictly
        # grade-raising, hence nilpotent on the truncation.
        acc = w.copy()
        term = w
        step = Sop.adjoint_apply if adjoint else Sop.apply
        for _ in range(basis.N):
            term = step(term)
            if not np.any(term):
                break
            acc = acc + term
        scale = 1.0 / np.conj(1.0 - beta) if adjoint else 1.0 / (1.0 - beta)
        return scale * acc

    def herglotz_apply(v):
        return solve_one_minus_b(v + Bop.apply(v), adjoint=False)

    def herglotz_adjoint_apply(v):
        y = solve_one_minus_b(v, adjoint=True)
        return y + Bop.adjoint_apply(y)

    def matvec(v):
        return 0.5 * (herglotz_apply(v) + herglotz_adjoint_apply(v))

    return RadialOperator(basis, r, "neumann", matvec, B=B)


# ---------------------------------------------------------------------------
# resolvents

def hermitian_cg(matvec, b: np.ndarray, tol: float = 1e-10,
                 maxiter: int = 2000) -> tuple:
    """Conjugate gradients for Hermitian positive definite systems.

    Returns (x, iterations, relative_residual); raises RuntimeError on
    non-convergence so that failed solves are never silently used.
    """
    x = np.zeros_like(b)
    res = b.copy()
    p = res.copy()
    rs = float(np.vdot(res, res).real)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, 0, 0.0
    for it in range(1, maxiter + 1):
        Ap = matvec(p)
        alpha = rs / float(np.vdot(p, Ap).real)
        x = x + alpha * p
        res = res - alpha * Ap
        rs_new = float(np.vdot(res, res).real)
        if np.sqrt(rs_new) <= tol * bnorm:
            return x, it, np.sqrt(rs_new) / bnorm
        p = res + (rs_new / rs) * p
        rs = rs_new
    raise RuntimeError(
        f"CG did not converge in {maxiter} iterations "
        f"(relative residual {np.sqrt(rs) / bnorm:.3e})")


class ResolventOperator(TruncatedOperator):
    """(eps I + T_r)^{-1} with a mode-matched solver."""

    def __init__(self, Tr: RadialOperator, eps: float,
                 cg_tol: float = 1e-10, cg_maxiter: int = 2000):
        if eps <= 0:
            raise ValueError(f"resolvent parameter must be positive, got {eps}")
        self.Tr = Tr
        self.eps = eps
        self.cg_tol = cg_tol
        self.cg_maxiter = cg_maxiter
        self.cg_iterations: list = []
        basis = Tr.basis
        if Tr.mode == "dense":
            A = Tr.to_dense() + eps * np.eye(basis.size)
            factor = scipy.linalg.cho_factor(0.5 * (A + A.conj().T))
            solve = lambda v: scipy.linalg.cho_solve(factor, v)
        elif Tr.mode == "toeplitz":
            col = Tr.column.copy()
            col[0] += eps
            solve = lambda v: scipy.linalg.solve_toeplitz((col, col.conj()), v)
        else:
            def solve(v):
                shifted = lambda u: eps * u + Tr.apply(u)
                x, iters, _ = hermitian_cg(shifted, v, tol=cg_tol, maxiter=cg_maxiter)
                self.cg_iterations.append(iters)
                return x
        super().__init__(basis, solve, solve)
        self._solve = solve


def resolvent(Tr: RadialOperator, eps: float, cg_tol: float = 1e-10,
              cg_maxiter: int = 2000) -> ResolventOperator:
    """Delta_r(eps) = (eps I + T_r)^{-1}."""
    return ResolventOperator(Tr, eps, cg_tol=cg_tol, cg_maxiter=cg_maxiter)


def _gs_inverse_corner(phi: np.ndarray, m: int) -> np.ndarray:
    """Corner of the inverse of a Hermitian PD Toeplitz matrix.

    Gohberg-Semencul: from phi = T^{-1} e_0, the inverse is
    (A A^H - B B^H)/phi_0 with A, B lower-triangular Toeplitz built from
    phi and the flipped conjugate of phi.
    """
    n = len(phi)
    if m > n:
        raise ValueError("corner larger than the matrix")
    psi = np.concatenate(([0.0], phi[:0:-1].conj()))
    A = np.zeros((m, n), dtype=complex)
    Bm = np.zeros((m, n), dtype=complex)
    for row in range(m):
        A[row, :row + 1] = phi[row::-1]
        Bm[row, :row + 1] = psi[row::-1]
    return (A @ A.conj().T - Bm @ Bm.conj().T) / phi[0]


def resolvent_corner(Tr: RadialOperator, eps: float, m: int,
                     cg_tol: float = 1e-10, cg_maxiter: int = 2000) -> tuple:
    """P_m Delta_r(eps) P_m as an m x m matrix (m counts basis words).

    Uses one Levinson solve plus the Gohberg-Semencul corner formula in
    toeplitz mode, a Cholesky solve in dense mode, and per-column CG in
    matrix-free mode (where m must stay small).  Returns the Hermitized
    corner together with the CG iteration counts (empty outside CG mode).
    """
    basis = Tr.basis
    if m > basis.size:
        raise ValueError(f"corner of {m} words exceeds basis size {basis.size}")
    cg_iters: tuple = ()
    if Tr.mode == "toeplitz":
        col = Tr.column.copy()
        col[0] += eps
        e0 = np.zeros(basis.size, dtype=complex)
        e0[0] = 1.0
        phi = scipy.linalg.solve_toeplitz((col, col.conj()), e0)
        corner = _gs_inverse_corner(phi, m)
    elif Tr.mode == "dense":
        A = Tr.to_dense() + eps * np.eye(basis.size)
        factor = scipy.linalg.cho_factor(0.5 * (A + A.conj().T))
        E = np.zeros((basis.size, m), dtype=complex)
        E[:m, :] = np.eye(m)
        corner = scipy.linalg.cho_solve(factor, E)[:m, :]
    else:
        if m > 256:
            raise ValueError(
                f"matrix-free corner extraction with {m} columns is not "
                "practical; use dense or toeplitz mode")
        delta = resolvent(Tr, eps, cg_tol=cg_tol, cg_maxiter=cg_maxiter)
        cols = np.zeros((m, m), dtype=complex)
        e = np.zeros(basis.size, dtype=complex)
        for j in range(m):
            e[j] = 1.0
            cols[:, j] = delta.apply(e)[:m]
            e[j] = 0.0
        corner = cols
        cg_iters = tuple(delta.cg_iterations)
    return 0.5 * (corner + corner.conj().T), cg_iters


# ---------------------------------------------------------------------------
# the coupled limit

@dataclass(frozen=True)
class StageRecord:
    r: float
    N: int
    vacuum_delta: float
    mass: float
    increment: float
    cg_iterations: tuple = ()


@dataclass(frozen=True)
class RNResult:
    """Output of the coupled (r, N) resolvent limit.

    T_compression is the recovered Radon-Nikodym compression on words of
    length <= M; mu_ac its moment functional read off the vacuum row, and
    mu_s = mu - mu_ac exactly.  T_recovered keeps the enlarged recovery
    block (grade <= recovery_grade) for downstream form checks.
    """

    d: int
    M: int
    eps_grid: tuple
    primary_eps: float
    T_compression: np.ndarray
    T_recovered: np.ndarray
    recovery_grade: int
    mu: MomentFunctional
    mu_ac: MomentFunctional
    mu_s: MomentFunctional
    stages: tuple
    eps_consistency: float
    cauchy_converged: bool
    achieved_r_max: float
    mass_strictly_decreasing: bool
    vacuum_strictly_increasing: bool
    singular: bool
    positivity_ac: PositivityReport

    @property
    def mass_trend(self) -> np.ndarray:
        return np.array([s.mass for s in self.stages])


def _stage_operator(source, d: int, r: float, N: int,
                    dense_limit: int) -> RadialOperator:
    """T_r at the stage grade, routed by source type.

    Schur-series sources keep their sparse support and go through the
    Neumann-solve construction; moment sources go through the Herglotz
    coefficients directly (dense support, viable for d = 1 or small N).
    """
    basis = WordBasis(d, N)
    if isinstance(source, NCSeries):
        deg = source.degree()
        if deg > N:
            raise ValueError(f"symbol degree {deg} exceeds stage grade {N}")
        B = NCSeries.from_dict(basis, dict(source.support()))
        return RadialOperator.from_schur(B, r, mode="auto", dense_limit=dense_limit)
    if isinstance(source, MomentFunctional):
        if source.basis.N < N:
            raise ValueError(
                f"schedule stage needs moments through grade {N}, functional "
                f"only reaches {source.basis.N}")
        H = herglotz_transform(source.restricted(N))
        return RadialOperator.from_herglotz(H, r, mode="auto", dense_limit=dense_limit)
    raise TypeError(f"source must be NCSeries or MomentFunctional, got {type(source)}")


def _source_moments(source, d: int, M: int) -> MomentFunctional:
    if isinstance(source, MomentFunctional):
        return source.restricted(M)
    basis = WordBasis(d, max(M, source.degree()))
    mu = clark_measure(NCSeries.from_dict(basis, dict(source.support())))
    return mu.restricted(M)


def rn_derivative(source, *, M: int = 8, eps_grid=(0.25, 1.0),
                  schedule: Schedule | None = None, recovery_buffer: int = 8,
                  cauchy_tol: float = 1e-4, tail_tol: float = 1e-8,
                  j_max: int = 10, j_min: int = 1,
                  memory_budget_mb: float = 512.0, dense_limit: int = 2048,
                  cg_tol: float = 1e-10, cg_maxiter: int = 2000,
                  singular_tol: float = 0.05,
                  positivity_tol: float = 1e-6) -> RNResult:
    """Recover the NC Radon-Nikodym compression by the resolvent limit.

    source is either a Schur-class NCSeries (the symbol B) or a positive
    MomentFunctional with moments through the largest scheduled grade.
    For each stage, the corner of (eps I + T_r)^{-1} is computed at the
    recovery grade M + recovery_buffer; the iteration stops early once
    consecutive corners differ by less than cauchy_tol in max norm.  The
    reported T_hat comes from the smallest eps in the grid (least upward
    bias on near-singular directions); the other grid values only feed
    the eps-consistency cross-check.
    """
    if isinstance(source, NCSeries):
        d = source.basis.d
    elif isinstance(source, MomentFunctional):
        d = source.basis.d
    else:
        raise TypeError(f"source must be NCSeries or MomentFunctional, got {type(source)}")
    eps_grid = tuple(sorted(float(e) for e in eps_grid))
    if not eps_grid or eps_grid[0] <= 0:
        raise ValueError(f"eps grid must be positive, got {eps_grid}")
    primary = eps_grid[0]
    if schedule is None:
        schedule = Schedule.coupled(d, tail_tol=tail_tol, j_max=j_max,
                                    j_min=j_min, memory_budget_mb=memory_budget_mb)
    if any(N < M for _, N in schedule.stages):
        raise ValueError("schedule stage grade below the output grade M")

    m_out = word_count(d, M)
    records = []
    corners = []
    converged = False
    Tr_final = None
    for (r, N) in schedule.stages:
        Tr = _stage_operator(source, d, r, N, dense_limit)
        rec_grade = min(M + recovery_buffer, N)
        m_rec = word_count(d, rec_grade)
        corner, cg_iters = resolvent_corner(Tr, primary, m_rec, cg_tol=cg_tol,
                                            cg_maxiter=cg_maxiter)
        T_stage = np.linalg.inv(corner) - primary * np.eye(m_rec)
        if corners:
            prev = corners[-1][:m_out, :m_out]
            increment = float(np.abs(corner[:m_out, :m_out] - prev).max())
        else:
            increment = np.inf
        records.append(StageRecord(
            r=r, N=N, vacuum_delta=float(corner[0, 0].real),
            mass=float(T_stage[0, 0].real), increment=increment,
            cg_iterations=cg_iters))
        corners.append(corner)
        Tr_final = Tr
        if increment < cauchy_tol:
            converged = True
            break

    rec_grade = min(M + recovery_buffer, records[-1].N)
    m_rec = word_count(d, rec_grade)
    corner = corners[-1]
    T_rec = np.linalg.inv(corner) - primary * np.eye(m_rec)
    T_rec = 0.5 * (T_rec + T_rec.conj().T)

    # cross-check the recovery against the other resolvent parameters
    eps_consistency = 0.0
    blocks = {primary: T_rec[:m_out, :m_out]}
    for eps in eps_grid[1:]:
        c, _ = resolvent_corner(Tr_final, eps, m_rec, cg_tol=cg_tol,
                                cg_maxiter=cg_maxiter)
        t = np.linalg.inv(c) - eps * np.eye(m_rec)
        blocks[eps] = 0.5 * (t + t.conj().T)[:m_out, :m_out]
    for ea in eps_grid:
        for eb in eps_grid:
            if ea < eb:
                eps_consistency = max(eps_consistency, float(
                    np.abs(blocks[ea] - blocks[eb]).max()))

    T_hat = T_rec[:m_out, :m_out]
    basis_M = WordBasis(d, M)
    mu = _source_moments(source, d, M)
    moments_ac = T_hat[0, :].copy()
    moments_ac[0] = moments_ac[0].real
    mu_ac = MomentFunctional(basis_M, moments_ac)
    mu_s = mu - mu_ac

    masses = [rec.mass for rec in records]
    vacua = [rec.vacuum_delta for rec in records]
    decreasing = len(masses) > 1 and all(b < a for a, b in zip(masses, masses[1:]))
    increasing = len(vacua) > 1 and all(b > a for a, b in zip(vacua, vacua[1:]))
    singular = decreasing and masses[-1] < singular_tol

    return RNResult(
        d=d, M=M, eps_grid=eps_grid, primary_eps=primary,
        T_compression=T_hat, T_recovered=T_rec, recovery_grade=rec_grade,
        mu=mu, mu_ac=mu_ac, mu_s=mu_s, stages=tuple(records),
        eps_consistency=eps_consistency, cauchy_converged=converged,
        achieved_r_max=schedule.achieved_r_max,
        mass_strictly_decreasing=decreasing,
        vacuum_strictly_increasing=increasing, singular=singular,
        positivity_ac=is_positive(mu_ac, tol=positivity_tol))


# ---------------------------------------------------------------------------
# PSD form checks

@dataclass(frozen=True)
class PsdReport:
    min_eigenvalue: float
    grade: int
    size: int

    def __bool__(self) -> bool:
        return self.min_eigenvalue >= 0.0


def majorant_check(B: NCSeries, x: NCSeries, r: float, M: int) -> PsdReport:
    """Spectral floor of (I + T_r) - x(rR)* x(rR) on the grade <= M corner.

    x must come from the outer factorization of I + tau for an L-Toeplitz
    tau dominated by the Clark measure of B; then the harmonic-majorant
    inequality makes the compression PSD up to numerical error.
    """
    basis = B.basis
    if x.basis != basis:
        raise ValueError("B and x must share a basis")
    m = basis.sub_basis_size(M)
    Tr = RadialOperator.from_schur(B, r, mode="auto")
    xr_op = series_at_right_shifts(radial_scale(x, r))
    e = np.zeros(basis.size, dtype=complex)
    T_block = np.zeros((m, m), dtype=complex)
    X_cols = np.zeros((basis.size, m), dtype=complex)
    for j in range(m):
        e[j] = 1.0
        T_block[:, j] = Tr.apply(e)[:m]
        X_cols[:, j] = xr_op.apply(e)
        e[j] = 0.0
    D = np.eye(m) + T_block - X_cols.conj().T @ X_cols
    lam = float(np.linalg.eigvalsh(0.5 * (D + D.conj().T)).min())
    return PsdReport(lam, M, m)


def fatou_form_check(B: NCSeries, T_moments: MomentFunctional, M: int) -> PsdReport:
    """Floor of 2(I - Re B(R)) - (I - B(R))*(I + T)(I - B(R)) at grade <= M.

    T_moments must reach grade M + deg(B) so that every product stays
    inside the working basis and the compression is exact.
    """
    d = B.basis.d
    deg = B.degree()
    need = M + deg
    if T_moments.basis.N < need:
        raise ValueError(
            f"need T moments through grade {need} for an exact check, "
            f"got {T_moments.basis.N}")
    if T_moments.basis.d != d:
        raise ValueError("B and T moments have mismatched alphabet sizes")
    basis = WordBasis(d, need)
    B_loc = NCSeries.from_dict(basis, dict(B.support()))
    Bop = _dense_right_multiplier(transpose_conjugate(B_loc))
    T_hat = gram(T_moments.restricted(need)).matrix
    eye = np.eye(basis.size)
    lhs = 2.0 * (eye - 0.5 * (Bop + Bop.conj().T))
    rhs = (eye - Bop).conj().T @ (eye + T_hat) @ (eye - Bop)
    m = basis.sub_basis_size(M)
    D = (lhs - rhs)[:m, :m]
    lam = float(np.linalg.eigvalsh(0.5 * (D + D.conj().T)).min())
    return PsdReport(lam, M, m)


# ---------------------------------------------------------------------------
# form-decomposition diagnostic

@dataclass(frozen=True)
class FormDecomposition:
    """Finite-truncation realization of the maximal-closable-part formula.

    Diagnostic only: at finite truncation the embedding of the GNS space
    of mu + m into Fock space is always injective, so genuine kernel
    directions appear only as decaying singular values; detect_tol sets
    the relative sigma cutoff that declares a direction null.
    """

    q_ac: np.ndarray
    q_total: np.ndarray
    Q_ac_rank: int
    embedding_singular_values: np.ndarray
    grade: int


def form_decomposition_diagnostic(mu: MomentFunctional,
                                  detect_tol: float | None = None) -> FormDecomposition:
    """Q_ac rank and the q_ac table from the Gram matrix of mu + m.

    The embedding E of the GNS space of nu = mu + m into Fock space has,
    in nu-orthonormal coordinates, singular values lambda_i^{-1/2} for
    the eigenvalues lambda_i of the nu Gram matrix; Q_ac projects onto
    the numerical closure of Ran E*.
    """
    G_mu = gram(mu)
    lam_mu = float(np.linalg.eigvalsh(G_mu.matrix).min())
    if lam_mu < -G_mu.null_tol * max(abs(mu.moments[0].real), 1.0):
        raise ValueError(f"Gram matrix not PSD: min eigenvalue {lam_mu:.3e}")
    G_nu = G_mu.matrix + np.eye(mu.basis.size)
    lam, V = np.linalg.eigh(G_nu)
    sigma = 1.0 / np.sqrt(lam)
    if detect_tol is None:
        keep = np.ones(len(lam), dtype=bool)
    else:
        keep = sigma >= detect_tol * sigma.max()
    q_ac = (V * np.where(keep, lam, 0.0)) @ V.conj().T - np.eye(len(lam))
    q_ac = 0.5 * (q_ac + q_ac.conj().T)
    return FormDecomposition(
        q_ac=q_ac, q_total=G_mu.matrix, Q_ac_rank=int(keep.sum()),
        embedding_singular_values=np.sort(sigma)[::-1], grade=mu.basis.N)
