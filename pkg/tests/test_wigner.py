import numpy as np
import pytest

from fockmf.dynamics import hartree_flow, radius_T0
from fockmf.fock import DensityState, coherent_state, hermite_state
from fockmf.symbols import (
    PolySum,
    PolySymbol,
    eval_symbol,
    quadratic_symbol,
    random_interaction,
    random_symbol,
)
from fockmf.wigner import (
    Atom,
    WignerMeasure,
    circle_expectation_sampled,
    default_dictionary,
    fit_order,
    free_push_forward,
    identify_limit,
    measure_expectation,
    push_forward,
    transport_residual,
)

Q_QUARTIC = PolySymbol.from_matrix([[0.5]], 2, 2, 1)
B_Z = PolySymbol.from_matrix([[1.0]], 1, 0, 1)


def test_measure_validation():
    with pytest.raises(ValueError):
        WignerMeasure(())
    with pytest.raises(ValueError):
        WignerMeasure((Atom("point", [1.0], 0.5),))
    with pytest.raises(ValueError):
        Atom("blob", [1.0], 1.0)
    with pytest.raises(ValueError):
        Atom("point", [1.0], 0.0)
    with pytest.raises(ValueError):
        WignerMeasure((Atom("point", [1.0], 0.5), Atom("point", [1.0, 0.0], 0.5)))


def test_point_and_circle_expectations(rng):
    z = np.array([0.6, 0.8j])
    for p, q in [(0, 0), (1, 1), (2, 1), (1, 0), (2, 2), (0, 2)]:
        b = random_symbol(rng, 2, p, q)
        assert measure_expectation(WignerMeasure.point(z), b) == pytest.approx(eval_symbol(b, z))
        circ = measure_expectation(WignerMeasure.circle(z), b)
        assert circ == pytest.approx(circle_expectation_sampled(z, b), abs=1e-12)
        if p != q:
            assert circ == 0
    b = random_symbol(rng, 2, 1, 1)
    assert measure_expectation(WignerMeasure.circle(z), b) == pytest.approx(np.vdot(z, b.kernel.matrix @ z))


def test_mixture_and_sum(rng):
    z1, z2 = np.array([1.0, 0.0]), np.array([0.2, 0.5j])
    mu = WignerMeasure((Atom("point", z1, 0.25), Atom("circle", z2, 0.75)))
    b1, b2 = random_symbol(rng, 2, 1, 1), random_symbol(rng, 2, 0, 1)
    total = PolySum([b1, b2])
    expected = 0.25 * (eval_symbol(b1, z1) + eval_symbol(b2, z1)) + 0.75 * eval_symbol(b1, z2)
    assert measure_expectation(mu, total) == pytest.approx(expected)


def test_push_forward_examples(rng):
    z = np.array([0.7 - 0.3j])
    mu = WignerMeasure.point(z)
    assert push_forward(mu, np.zeros((1, 1)), Q_QUARTIC, 0.0) is mu
    moved = push_forward(mu, np.zeros((1, 1)), Q_QUARTIC, 0.6, 1e-12)
    assert moved.atoms[0].z[0] == pytest.approx(np.exp(-0.6j * abs(z[0]) ** 2) * z[0], abs=1e-9)
    A = np.diag([0.5, -1.0])
    z2 = np.array([0.3, 0.4j])
    free = push_forward(WignerMeasure.point(z2), A, PolySymbol.zero(2, 2, 2), 1.3)
    np.testing.assert_allclose(free.atoms[0].z, np.exp(-1.3j * np.diag(A)) * z2, atol=1e-12)
    np.testing.assert_allclose(free_push_forward(WignerMeasure.point(z2), A, 1.3).atoms[0].z, free.atoms[0].z)
    sliced = push_forward(mu, np.zeros((1, 1)), Q_QUARTIC, 0.6, 1e-12, slice=0.1)
    assert sliced.atoms[0].z[0] == pytest.approx(moved.atoms[0].z[0], abs=1e-9)


def test_push_forward_preserves_weights_and_circle_closure(rng):
    A = np.diag([0.0, 1.0])
    Q = random_interaction(rng, 2)
    z = np.array([0.6, 0.5 + 0.2j])
    mu = WignerMeasure((Atom("circle", z, 0.3), Atom("point", -z, 0.7)))
    out = push_forward(mu, A, Q, 0.9, 1e-12)
    assert [a.weight for a in out.atoms] == [0.3, 0.7]
    assert [a.kind for a in out.atoms] == ["circle", "point"]
    b = random_symbol(rng, 2, 1, 1)
    thetas = 2 * np.pi * np.arange(16) / 16
    brute = np.mean([eval_symbol(b, hartree_flow(np.exp(1j * th) * z, A, Q, 0.9, 1e-12).z_t) for th in thetas])
    assert measure_expectation(WignerMeasure.circle(out.atoms[0].z), b) == pytest.approx(brute, abs=1e-9)


def test_push_forward_matches_series(rng):
    from fockmf.dynamics import dyson_classical

    A = np.diag([0.0, 1.0])
    Q = random_interaction(rng, 2)
    b = quadratic_symbol(np.diag([2.0, 3.0]))
    z = np.array([0.5, 0.3j])
    lhs = measure_expectation(push_forward(WignerMeasure.point(z), A, Q, 0.1, 1e-12), b)
    rep = dyson_classical(b, Q, A, z, 0.1, 3)
    assert lhs == pytest.approx(rep.partial_sums[-1], abs=1e-6)


def test_transport_closed_form():
    mu = WignerMeasure.point([1.0])
    assert transport_residual(mu, np.zeros((1, 1)), Q_QUARTIC, B_Z, 0.3, 1e-10) < 1e-10
    assert transport_residual(mu, np.zeros((1, 1)), Q_QUARTIC, B_Z, -0.3, 1e-10) < 1e-10


def test_transport_free_is_zero(rng):
    A = np.diag([0.2, 1.0])
    mu = WignerMeasure.point([0.3, 0.4j])
    assert transport_residual(mu, A, PolySymbol.zero(2, 2, 2), random_symbol(rng, 2, 1, 1), 0.7) < 1e-14


def test_transport_random_scenario(rng):
    A = np.diag([0.0, 1.0])
    Q = random_interaction(rng, 2)
    t = 0.5 * radius_T0(1.0, Q)
    for mu in (WignerMeasure.point([1.0, 0.0]), WignerMeasure.circle([0.6, 0.8j])):
        for p, q in [(1, 1), (2, 1), (2, 2)]:
            assert transport_residual(mu, A, Q, random_symbol(rng, 2, p, q), t, 1e-10) < 1e-9
    with pytest.raises(ValueError):
        transport_residual(mu, A, Q, B_Z, t, 0.0)


def test_default_dictionary():
    labels = [label for label, _ in default_dictionary(2)]
    # bidegree (p,q) contributes C(p+1,1) * C(q+1,1) elementary matrices when d=2
    assert len(labels) == sum((p + 1) * (q + 1) for p in range(3) for q in range(3))
    assert len(set(labels)) == len(labels)


def test_fit_order():
    eps = [0.25, 0.125, 0.0625]
    assert fit_order(eps, [0.1 * e for e in eps]) == pytest.approx(1.0)
    assert fit_order(eps, [e**2 for e in eps]) == pytest.approx(2.0)
    assert fit_order(eps, [0.0, 1e-15, 0.0]) is None


def test_identify_limit_coherent():
    z0 = np.array([0.8, 0.6j])
    eps = [0.25, 0.125, 0.0625]
    family = lambda e: DensityState.pure(coherent_state(z0, e, 1e-14))
    rows = identify_limit(family, eps, WignerMeasure.point(z0))
    assert max(max(r.errors) for r in rows) < 1e-9
    wrong = identify_limit(family, eps, WignerMeasure.point(2 * z0),
                           [("b11", quadratic_symbol(np.diag([2.0, 3.0])))])
    gap = abs(2 * 0.64 + 3 * 0.36 - 4 * (2 * 0.64 + 3 * 0.36))
    assert wrong[0].errors == pytest.approx([gap] * 3, abs=1e-9)
    with pytest.raises(ValueError):
        identify_limit(family, [0.1, 0.2], WignerMeasure.point(z0))


def test_identify_limit_hermite():
    z = np.array([0.6, 0.8j])
    eps = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
    family = lambda e: DensityState.pure(hermite_state(z, round(1 / e)))
    rows = identify_limit(family, eps, WignerMeasure.circle(z))
    for row, (_, b) in zip(rows, default_dictionary(2)):
        if b.p != b.q:
            assert row.errors == [0.0] * len(eps)
        elif b.p == 1:
            assert max(row.errors) < 1e-12
    quartic = [r for r, (_, b) in zip(rows, default_dictionary(2)) if b.p == b.q == 2 and max(r.errors) > 1e-12]
    assert quartic and all(r.order > 0.8 for r in quartic)
