import numpy as np
import pytest

from ncfatou.fock import FockVector, basis_vector, left_shift, vacuum
from ncfatou.measure import (MomentFunctional, cauchy_transform,
                             clark_measure, gns_isometry, gns_row_residual,
                             gram, gram_matvec, herglotz_eval,
                             herglotz_transform, is_positive, nc_lebesgue,
                             quadratic_form, read_moments_csv, sos_split,
                             vector_state, write_moments_csv)
from ncfatou.series import (MatrixPoint, NCSeries, cayley_to_herglotz,
                            evaluate, herglotz_kernel)
from ncfatou.words import WordBasis


# -- independent oracle: formal Cayley transform by brute division ----------

def brute_cayley_herglotz(B: dict, d: int, N: int) -> dict:
    from test_series import brute_invert, brute_multiply
    one_minus = {(): 1.0}
    one_plus = {(): 1.0}
    for w, c in B.items():
        one_minus[w] = one_minus.get(w, 0.0) - c
        one_plus[w] = one_plus.get(w, 0.0) + c
    return brute_multiply(brute_invert(one_minus, d, N), one_plus, N)


def test_nc_lebesgue_examples():
    basis = WordBasis(2, 3)
    m = nc_lebesgue(basis)
    assert m(()) == 1.0
    assert m((1, 2)) == 0.0
    assert np.allclose(gram(m).matrix, np.eye(basis.size))


def test_vector_state_examples():
    basis = WordBasis(1, 4)
    assert np.abs(vector_state(vacuum(basis)).moments
                  - nc_lebesgue(basis).moments).max() == 0.0
    x = vacuum(basis) + basis_vector(basis, (1,))
    mx = vector_state(x)
    assert mx((1,)) == 1.0  # <x, S x> = <e0 + e1, e1 + e2> = 1
    assert mx(()) == 2.0
    lam = np.linalg.eigvalsh(gram(mx).matrix).min()
    assert lam >= -1e-12


def test_vector_state_gram_is_shifted_inner_products():
    rng = np.random.default_rng(8)
    basis = WordBasis(2, 3)
    x = FockVector(basis, rng.standard_normal(basis.size)
                   + 1j * rng.standard_normal(basis.size))
    G = gram(vector_state(x)).matrix
    # brute force on an enlarged basis where no shift truncates
    big = WordBasis(2, 6)
    x_big = np.zeros(big.size, dtype=complex)
    x_big[:basis.size] = x.coeffs
    from ncfatou.fock import word_monomial
    for i in range(basis.size):
        for j in range(basis.size):
            a = word_monomial(big, basis.word(i)).apply(x_big)
            b = word_monomial(big, basis.word(j)).apply(x_big)
            assert G[i, j] == pytest.approx(np.vdot(a, b), abs=1e-12)


def test_is_positive_examples():
    basis = WordBasis(1, 1)
    assert is_positive(nc_lebesgue(basis)).positive
    bad = MomentFunctional(basis, np.array([0.0, 1.0], dtype=complex))
    report = is_positive(bad)
    assert not report.positive
    assert report.min_eigenvalue == pytest.approx(-1.0, abs=1e-14)
    assert report.grade == 1


def test_clark_measure_examples():
    basis = WordBasis(2, 4)
    assert np.abs(clark_measure(NCSeries.zero(basis)).moments
                  - nc_lebesgue(basis).moments).max() == 0.0
    # d=1, B = z: point mass moments, all ones
    b1 = WordBasis(1, 6)
    mu = clark_measure(NCSeries.from_dict(b1, {(1,): 1.0}))
    assert np.allclose(mu.moments, np.ones(7))
    # d=2, B = (z1+z2)/sqrt(2): mu(L^a) = 2^{-|a|/2}
    c = 2 ** -0.5
    B = NCSeries.from_dict(basis, {(1,): c, (2,): c})
    mu2 = clark_measure(B)
    expected = np.concatenate([
        np.full(2 ** g, 2.0 ** (-g / 2.0)) for g in range(5)])
    assert np.abs(mu2.moments - expected).max() < 1e-13
    # cross-check against the brute-division oracle
    H_oracle = brute_cayley_herglotz({(1,): c, (2,): c}, 2, 4)
    for w, val in H_oracle.items():
        if w:
            assert mu2(tuple(reversed(w))) == pytest.approx(
                np.conj(val) / 2.0, abs=1e-13)
    assert is_positive(mu2).positive


def test_herglotz_transform_examples():
    basis = WordBasis(2, 4)
    H = herglotz_transform(nc_lebesgue(basis))
    assert np.allclose(H.coeffs, NCSeries.one(basis).coeffs)
    # d=1, b = alpha z: mu(S^k) = conj(alpha)^k and H = 1 + 2 sum alpha^k z^k
    alpha = 0.6 * np.exp(0.3j)
    b1 = WordBasis(1, 8)
    mu = clark_measure(NCSeries.from_dict(b1, {(1,): alpha}))
    ks = np.arange(9)
    assert np.abs(mu.moments - np.conj(alpha) ** ks).max() < 1e-13
    H1 = herglotz_transform(mu)
    expected = 2.0 * alpha ** ks
    expected[0] = 1.0
    assert np.abs(H1.coeffs - expected).max() < 1e-13


def test_clark_herglotz_round_trip_random():
    rng = np.random.default_rng(15)
    basis = WordBasis(2, 5)
    B = NCSeries.from_dict(basis, {
        (1,): 0.3 * rng.standard_normal() + 0.2j,
        (2, 1): 0.25, (1, 1, 2): -0.15j})
    H = cayley_to_herglotz(B)
    mu = clark_measure(B)
    assert np.abs(herglotz_transform(mu).coeffs - H.coeffs).max() < 1e-12


def test_herglotz_eval_matches_series_evaluation():
    rng = np.random.default_rng(19)
    basis = WordBasis(2, 5)
    B = NCSeries.from_dict(basis, {(1,): 0.4, (2,): -0.3j, (1, 2): 0.1})
    mu = clark_measure(B)
    Z = MatrixPoint((0.3 * rng.standard_normal((2, 2)),
                     0.3 * rng.standard_normal((2, 2))))
    lhs = herglotz_eval(mu, Z)
    rhs = evaluate(herglotz_transform(mu), Z)
    assert np.abs(lhs.value - rhs.value).max() < 1e-13
    # positive real part up to the tail bound
    lam = np.linalg.eigvalsh(lhs.value + lhs.value.conj().T).min() / 2.0
    assert lam >= -lhs.tail - 1e-12


def test_herglotz_eval_identity_for_vacuum_state():
    basis = WordBasis(2, 4)
    Z = MatrixPoint((0.2 * np.eye(2), 0.1 * np.ones((2, 2))))
    val, tail = herglotz_eval(nc_lebesgue(basis), Z)
    assert np.allclose(val, np.eye(2))


def test_herglotz_eval_matches_classical_integral():
    from ncfatou.oracle1d import MeasureSpec, classical_moments, herglotz_integral, poisson_density
    spec = MeasureSpec(point_masses=((0.5, 0.25),),
                       density=0.75 * poisson_density(0.4, 1.0))
    mu = classical_moments(spec, 400)
    z = 0.35 - 0.2j
    val, tail = herglotz_eval(mu, MatrixPoint((np.array([[z]]),)))
    ref = herglotz_integral(spec, z)
    assert abs(val[0, 0] - ref) <= tail + 1e-10


def test_cauchy_transform_examples():
    basis = WordBasis(2, 4)
    m = nc_lebesgue(basis)
    Z = MatrixPoint((0.3 * np.eye(2), np.diag([0.2, -0.2])))
    val, _ = cauchy_transform(m, vacuum(basis), Z)
    assert np.allclose(val, np.eye(2))
    # against m, the Cauchy transform is plain evaluation (Szego reproducing)
    rng = np.random.default_rng(23)
    p = FockVector(basis, rng.standard_normal(basis.size))
    lhs, _ = cauchy_transform(m, p, Z)
    rhs, _ = evaluate(NCSeries(basis, p.coeffs), Z)
    assert np.abs(lhs - rhs).max() < 1e-13


def test_cauchy_transform_norm_against_kernel_gram():
    # the squared mu-norm of p equals the Herglotz-space norm of its Cauchy
    # transform; sampled through a finite kernel Gram this becomes a
    # projection norm, consistent within the coefficient-tail tolerance
    rng = np.random.default_rng(29)
    basis = WordBasis(1, 16)
    B = NCSeries.from_dict(basis, {(1,): 0.5})
    mu = clark_measure(B)
    H = herglotz_transform(mu)
    p = FockVector(basis, np.concatenate((rng.standard_normal(4),
                                          np.zeros(basis.size - 4))))
    exact = quadratic_form(mu, p)
    pts = [MatrixPoint((np.array([[z]]),))
           for z in (0.1, -0.3, 0.52j, -0.41j, 0.3 + 0.3j, -0.2 - 0.45j,
                     0.61, -0.55, 0.22 - 0.51j, 0.47 + 0.21j, -0.62j, 0.68)]
    order = 220
    Gamma = np.array([[herglotz_kernel(H, Zi, Zj, np.eye(1), order).value[0, 0]
                       for Zj in pts] for Zi in pts])
    pair = np.array([cauchy_transform(mu, p, Zi)[0][0, 0] for Zi in pts])
    proj = float(np.real(pair.conj() @ np.linalg.pinv(Gamma, rcond=1e-11) @ pair))
    assert abs(proj - exact) <= 1e-4 * max(exact, 1.0)
    assert proj >= 0.95 * exact


def test_gram_examples_and_fill_rule():
    b1 = WordBasis(1, 1)
    mu = MomentFunctional(b1, np.array([1.0, 1.0], dtype=complex))
    assert np.allclose(gram(mu).matrix, np.ones((2, 2)))
    basis = WordBasis(2, 2)
    rng = np.random.default_rng(31)
    moments = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    moments[0] = 2.0
    mu2 = MomentFunctional(basis, moments)
    G = gram(mu2).matrix
    assert G[basis.index((1,)), basis.index((2,))] == 0.0
    assert G[basis.index((1,)), basis.index((1, 2))] == mu2((2,))
    assert G[basis.index((1, 2)), basis.index((1,))] == np.conj(mu2((2,)))
    assert np.abs(G - G.conj().T).max() == 0.0
    v = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    assert np.abs(G @ v - gram_matvec(mu2, v)).max() < 1e-12


def test_gram_cone_structure():
    basis = WordBasis(2, 3)
    rng = np.random.default_rng(33)
    x = FockVector(basis, rng.standard_normal(basis.size))
    y = FockVector(basis, rng.standard_normal(basis.size))
    mu, lam = vector_state(x), vector_state(y)
    assert np.abs(gram(mu + lam).matrix
                  - (gram(mu).matrix + gram(lam).matrix)).max() < 1e-13
    assert np.abs(gram(2.5 * mu).matrix - 2.5 * gram(mu).matrix).max() < 1e-13


def test_gns_isometry_examples():
    basis = WordBasis(2, 3)
    m = nc_lebesgue(basis)
    op = gns_isometry(gram(m), 1)
    assert op.rank == basis.size
    L1 = left_shift(basis, 1).to_dense()
    # for the vacuum state the quotient coordinates can be any unitary
    # rotation; compare the represented action on polynomial coordinates
    W = op.coords
    assert np.abs(W.conj().T @ op.matrix @ W - L1).max() < 1e-10
    assert op.isometry_residual < 1e-10

    b1 = WordBasis(1, 4)
    point = MomentFunctional(b1, np.ones(5, dtype=complex))
    op1 = gns_isometry(gram(point), 1)
    assert op1.rank == 1
    assert abs(abs(op1.matrix[0, 0]) - 1.0) < 1e-12


def test_gns_isometry_random_vector_state():
    rng = np.random.default_rng(35)
    basis = WordBasis(2, 3)
    x = FockVector(basis, rng.standard_normal(basis.size)
                   + 1j * rng.standard_normal(basis.size))
    G = gram(vector_state(x))
    for k in (1, 2):
        assert gns_isometry(G, k).isometry_residual < 1e-10
    assert gns_row_residual(G) < 1e-10


def test_gns_rejects_non_psd():
    basis = WordBasis(1, 1)
    bad = MomentFunctional(basis, np.array([0.0, 1.0], dtype=complex))
    with pytest.raises(ValueError):
        gns_isometry(gram(bad), 1)


def test_sos_split_examples():
    basis = WordBasis(1, 3)
    u = sos_split(vacuum(basis))
    assert u.coefficient(()) == 0.5
    assert np.abs(u.coeffs[1:]).max() == 0.0
    p = vacuum(basis) + basis_vector(basis, (1,))
    u2 = sos_split(p)
    assert u2.coefficient(()) == 1.0
    assert u2.coefficient((1,)) == 1.0


def test_sos_split_identity_random():
    rng = np.random.default_rng(37)
    basis = WordBasis(2, 4)
    p = FockVector(basis, rng.standard_normal(basis.size)
                   + 1j * rng.standard_normal(basis.size))
    x = FockVector(basis, rng.standard_normal(basis.size))
    for mu in (vector_state(x), clark_measure(
            NCSeries.from_dict(basis, {(1,): 0.4, (2,): 0.3}))):
        u = sos_split(p)
        lhs = quadratic_form(mu, p)
        rhs = 2.0 * float(np.real(np.sum(u.coeffs * mu.moments)))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_moments_csv_round_trip(tmp_path):
    basis = WordBasis(2, 2)
    mu = MomentFunctional(basis, np.array([1.0, 0.5, 0, 0.25j, 0, 0, 0]))
    path = tmp_path / "moments.csv"
    write_moments_csv(mu, path)
    nu = read_moments_csv(path, basis)
    assert np.abs(mu.moments - nu.moments).max() == 0.0
    # a file without the unit word is rejected
    bad = tmp_path / "bad.csv"
    bad.write_text("word,re,im\n1,0.5,0.0\n")
    with pytest.raises(ValueError):
        read_moments_csv(bad, basis)
