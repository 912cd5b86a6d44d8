import numpy as np
import pytest
from scipy.stats import poisson

from fockmf.fock import (
    DensityState,
    Projector,
    apply_wick,
    coherent_state,
    gamma_defect,
    h0_lambda,
    hamiltonian_sector,
    hermite_state,
    mixture,
    number_moment,
    number_operator_sector,
    vacuum,
    wick_expectation,
    wick_matrix,
)
from fockmf.symbols import PolySymbol, eval_symbol, number_symbol, random_interaction, random_symbol
from fockmf.symtensor import op_norm, power_coeffs, sym_dim
from oracles import dense_wick, random_kernel

EPS_VALUES = [1.0, 0.25, 1 / 7]


@pytest.mark.parametrize("p", [0, 1, 2])
@pytest.mark.parametrize("q", [0, 1, 2])
def test_wick_matrix_matches_dense_oracle(p, q, rng):
    d = 2
    for n in range(0, 5):
        if n - p + q < 0:
            continue
        kmat = random_kernel(rng, d, p, q)
        b = PolySymbol.from_matrix(kmat, p, q, d)
        for eps in EPS_VALUES:
            got = wick_matrix(b, n, eps).matrix
            np.testing.assert_allclose(got, dense_wick(kmat, d, p, q, n, eps), atol=1e-12)


def test_wick_number_and_annihilation():
    for d in (1, 2, 3):
        for n in range(0, 6):
            np.testing.assert_allclose(
                wick_matrix(number_symbol(d), n, 0.3).matrix, 0.3 * n * np.eye(sym_dim(d, n)), atol=1e-13
            )
    b21 = PolySymbol.from_matrix(np.ones((2, 3)), 2, 1, 2)
    assert not wick_matrix(b21, 1, 0.5).matrix.any()
    z_sym = PolySymbol.from_matrix([[1.0]], 1, 0, 1)
    for n in range(1, 8):
        mat = wick_matrix(z_sym, n, 0.2).matrix
        assert mat.shape == (1, 1)
        assert mat[0, 0] == pytest.approx(np.sqrt(n) * np.sqrt(0.2))


def test_wick_adjoint_symmetry(rng):
    for _ in range(10):
        d = int(rng.integers(1, 4))
        p, q = (int(x) for x in rng.integers(0, 3, size=2))
        b = random_symbol(rng, d, p, q)
        eps = rng.uniform(0.05, 1)
        for n in range(p, 6):
            m = n - p + q
            lhs = wick_matrix(b, n, eps).matrix.conj().T
            rhs = wick_matrix(b.adjoint(), m, eps).matrix
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_interaction_preserves_sectors(rng):
    for d in (1, 2, 3):
        Q = random_interaction(rng, d)
        for n in range(0, 9):
            W = wick_matrix(Q, n, 0.1)
            assert (W.p, W.q) == (n, n)
            N = number_operator_sector(d, n, 0.1).matrix
            assert np.abs(W.matrix @ N - N @ W.matrix).max() < 1e-12


def test_number_estimate_monitor(rng):
    """The ratio behind the number estimate stays bounded uniformly in n and eps."""
    ratios = []
    for p, q in [(1, 1), (2, 1), (1, 2), (2, 2), (2, 0)]:
        b = random_symbol(rng, 2, p, q, norm=1.0)
        for eps in (0.5, 0.1, 0.02):
            for n in range(max(p, 1), 30):
                m = n - p + q
                scale = (eps * max(n, m)) ** ((p + q) / 2)
                ratios.append(op_norm(wick_matrix(b, n, eps)) / scale)
    assert max(ratios) <= 1.0 + 1e-12


def test_hamiltonian_sector_examples(rng):
    A = np.diag([0.0, 1.0])
    Q0 = PolySymbol.zero(2, 2, 2)
    np.testing.assert_allclose(hamiltonian_sector(A, Q0, 2, 0.3).matrix, 0.3 * np.diag([0, 1, 2]), atol=1e-14)
    assert hamiltonian_sector(A, Q0, 0, 0.3).matrix.shape == (1, 1)
    assert hamiltonian_sector(A, Q0, 0, 0.3).matrix[0, 0] == 0
    Q = random_interaction(rng, 3)
    H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = H + H.conj().T
    for n in range(6):
        M = hamiltonian_sector(H, Q, n, 0.2).matrix
        assert np.abs(M - M.conj().T).max() < 1e-12


def test_coherent_state_structure():
    vac = coherent_state(np.zeros(2), 0.1)
    assert vac.sectors.keys() == {0} and vac.tail_mass == 0
    z0 = np.array([0.6, 0.8j])
    s = coherent_state(z0, 0.25, tail_tol=1e-12)
    masses = s.sector_masses()
    for n, mass in masses.items():
        assert mass == pytest.approx(poisson.pmf(n, 4.0), rel=1e-12)
    assert s.norm2() + s.tail_mass == pytest.approx(1.0, abs=1e-12)
    rho = DensityState.pure(s)
    assert number_moment(rho, 1) == pytest.approx(1.0, abs=1e-10)
    assert number_moment(rho, 2) == pytest.approx(1.0 + 0.25, abs=1e-10)
    with pytest.raises(ValueError):
        coherent_state(z0, 0.25, tail_tol=0)


@pytest.mark.parametrize("eps", [0.5, 0.25, 1 / 16])
def test_coherent_wick_exactness(eps, rng):
    z0 = np.array([0.7 - 0.2j, 0.3 + 0.5j])
    rho = DensityState.pure(coherent_state(z0, eps, tail_tol=1e-14))
    for p, q in [(1, 1), (0, 1), (1, 0), (2, 1), (2, 2), (0, 2)]:
        b = random_symbol(rng, 2, p, q)
        assert wick_expectation(rho, b) == pytest.approx(eval_symbol(b, z0), abs=1e-9)


def test_coherent_exactness_improves_with_tail(rng):
    z0 = np.array([1.0, 0.4j])
    b = random_symbol(rng, 2, 2, 2)
    errs = [abs(wick_expectation(DensityState.pure(coherent_state(z0, 0.1, tol)), b) - eval_symbol(b, z0))
            for tol in (1e-3, 1e-6, 1e-12)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-9


def test_coherent_oracle_term_by_term():
    """d=1, b = |z|^2: Poisson-weighted sum of eps*n equals |z0|^2."""
    z0 = np.array([1.3])
    eps = 0.2
    rho = DensityState.pure(coherent_state(z0, eps, 1e-14))
    mean = abs(z0[0]) ** 2 / eps
    oracle = sum(poisson.pmf(n, mean) * eps * n for n in range(200))
    assert wick_expectation(rho, number_symbol(1)) == pytest.approx(oracle, abs=1e-12)


def test_hermite_state(rng):
    s = hermite_state([1, 0], 5)
    assert s.eps == pytest.approx(0.2) and list(s.sectors) == [5]
    rho = DensityState.pure(s)
    for k in range(0, 7):
        assert number_moment(rho, k) == pytest.approx(1.0)
    assert h0_lambda(rho) == pytest.approx(1.0)
    z = np.array([0.6, 0.8j])
    for n in (3, 10, 40):
        rho = DensityState.pure(hermite_state(z, n))
        b = random_symbol(rng, 2, 1, 1)
        assert wick_expectation(rho, b) == pytest.approx(eval_symbol(b, z), abs=1e-12)
        assert wick_expectation(rho, random_symbol(rng, 2, 2, 1)) == 0
    with pytest.raises(ValueError):
        hermite_state(z, 0)


def test_hermite_overlap_with_coherent():
    z = np.array([0.6, 0.8j])
    n = 6
    coh = coherent_state(z, 1.0 / n, 1e-14)
    her = hermite_state(z, n)
    overlap = np.vdot(her.sectors[n], coh.sectors[n])
    assert abs(overlap) ** 2 == pytest.approx(poisson.pmf(n, n), rel=1e-12)


def test_number_moments_vacuum():
    rho = DensityState.pure(vacuum(2, 0.1))
    assert number_moment(rho, 1) == 0 and number_moment(rho, 4) == 0


@pytest.mark.parametrize("family", ["coherent", "hermite", "mixture"])
def test_h0_audit(family):
    z = np.array([0.8, 0.6j])
    for n in (4, 8, 16):
        if family == "coherent":
            rho = DensityState.pure(coherent_state(z, 1 / n))
        elif family == "hermite":
            rho = DensityState.pure(hermite_state(z, n))
        else:
            rho = mixture([0.3, 0.7], [coherent_state(z, 1 / n), coherent_state(-0.5 * z, 1 / n)])
        lam = h0_lambda(rho, 6)
        for k in range(1, 7):
            assert number_moment(rho, k) <= lam**k * (1 + 1e-12)


def test_gamma_defect():
    z0 = np.array([0.8, 0.6])
    rho_c = DensityState.pure(coherent_state(z0, 0.25, 1e-14))
    assert gamma_defect(rho_c, Projector(np.eye(2))) == pytest.approx(0.0, abs=1e-12)
    rho_h = DensityState.pure(hermite_state(z0, 7))
    assert gamma_defect(rho_h, Projector.onto(z0)) == pytest.approx(0.0, abs=1e-12)
    perp = Projector.onto(np.array([-0.6, 0.8]))
    assert gamma_defect(rho_c, perp) == pytest.approx(1 - np.exp(-1.0 / 0.25), abs=1e-12)
    with pytest.raises(ValueError):
        Projector(np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_apply_wick_matches_expectation(rng):
    z0 = np.array([0.5, 0.5j])
    s = coherent_state(z0, 0.2, 1e-12)
    b = random_symbol(rng, 2, 1, 2)
    out = apply_wick(b, s)
    direct = sum(np.vdot(s.sectors[m], v) for m, v in out.sectors.items() if m in s.sectors)
    assert direct == pytest.approx(wick_expectation(DensityState.pure(s), b))


def test_density_state_validation():
    s = vacuum(2, 0.1)
    with pytest.raises(ValueError):
        DensityState(((0.5, s),))
    with pytest.raises(ValueError):
        DensityState(((0.5, s), (0.5, vacuum(2, 0.2))))
    with pytest.raises(ValueError):
        DensityState(())


def test_power_coeffs_sector_norm():
    assert np.linalg.norm(power_coeffs(np.array([0.6, 0.8]), 9)) == pytest.approx(1.0)
