import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from saddlecenter import models
from saddlecenter.models import (NORMAL_FORM, ChartError, NormalFormParams, OtherEquilibrium,
                                 PhasePoint, SaddleCenter, actions, classify_equilibrium,
                                 exact_normal_form_flow, hamiltonian_vector_field, ham1, ham2,
                                 i1_minus, i2_of_i1, involution_T, make_model,
                                 normal_form_model, parse_remainder)

finite = st.floats(-0.3, 0.3, allow_nan=False)
points = st.tuples(finite, finite, finite, finite).map(np.array)
remainders = st.dictionaries(st.sampled_from([(2, 0), (1, 1), (0, 2), (3, 0), (0, 3), (2, 1)]),
                             st.floats(-0.5, 0.5, allow_nan=False), max_size=3)


def all_models():
    return [ham1(), ham1(-0.5), ham2(), ham2(0.9), normal_form_model(),
            normal_form_model(NormalFormParams(2.0, 3.0, {(2, 0): 0.3, (0, 2): -0.2, (1, 1): 0.1}))]


def test_eval_examples():
    v, g, _ = models.eval(ham1(), np.zeros(4))
    assert v == 0 and np.all(g == 0)
    v, g, _ = models.eval(ham2(0.5), [0.0, 1.0, 0.0, 0.0])
    assert v == pytest.approx(1 / 6, abs=1e-15) and np.abs(g).max() < 1e-15
    v, _, _ = models.eval(normal_form_model(), PhasePoint((0.1, 0, 0.2, 0), NORMAL_FORM))
    assert v == pytest.approx(-0.02, abs=1e-16)


def test_eval_rejects_chart_mismatch_and_nonfinite():
    with pytest.raises(ChartError):
        models.eval(ham1(), PhasePoint((0, 0, 0, 0), NORMAL_FORM))
    with pytest.raises(ValueError):
        models.eval(ham1(), [np.nan, 0, 0, 0])
    with pytest.raises(ValueError):
        PhasePoint((0, 0, np.inf, 0))


def test_values_match_hand_oracles():
    rng = np.random.default_rng(3)
    for w in rng.normal(size=(50, 4)):
        assert ham1().value(w) == pytest.approx(oracles.ham1_value(w), rel=1e-14)
        assert ham2(0.5).value(w) == pytest.approx(oracles.ham2_value(w, 0.5), rel=1e-13, abs=1e-14)


def test_vector_field_examples():
    nf = normal_form_model()
    assert np.allclose(hamiltonian_vector_field(nf, [1, 0, 0, 0]), [-1, 0, 0, 0])
    assert np.allclose(hamiltonian_vector_field(ham1(), [0, 0, 1, 0]), [1, 0, 0, 0])
    for m in all_models():
        assert np.all(hamiltonian_vector_field(m, m.equilibrium) == 0)


def test_energy_is_conserved_by_vector_field():
    rng = np.random.default_rng(0)
    for m in all_models():
        w = m.equilibrium + rng.uniform(-0.5, 0.5, size=(10_000, 4))
        g = m.gradient(w)
        X = g @ models.J4.T
        lhs = np.abs(np.einsum("ni,ni->n", g, X))
        assert np.all(lhs < 1e-12 * (1 + np.einsum("ni,ni->n", g, g)))


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(1)
    h = 1e-5
    for m in all_models():
        for w in m.equilibrium + rng.uniform(-0.4, 0.4, size=(20, 4)):
            E = np.eye(4)
            fd_g = np.array([(m.value(w + h * e) - m.value(w - h * e)) / (2 * h) for e in E])
            fd_H = np.array([(m.gradient(w + h * e) - m.gradient(w - h * e)) / (2 * h) for e in E])
            g, H = m.gradient(w), m.hessian(w)
            assert np.linalg.norm(fd_g - g) <= 1e-6 * max(np.linalg.norm(g), 1e-3)
            assert np.linalg.norm(fd_H - H) <= 1e-6 * max(np.linalg.norm(H), 1.0)


def test_classify_equilibrium():
    c = classify_equilibrium(ham1(), np.zeros(4))
    assert isinstance(c, SaddleCenter)
    assert c.alpha == pytest.approx(1, abs=1e-10) and c.omega == pytest.approx(1, abs=1e-10)
    c = classify_equilibrium(normal_form_model(NormalFormParams(2.0, 3.0)), np.zeros(4))
    assert (c.alpha, c.omega) == pytest.approx((2.0, 3.0), abs=1e-12)
    # Ham2: Hessian of U at (0,1) is diag(1 + 2b, -1), so alpha = 1, omega = sqrt(1 + 2b)
    c = classify_equilibrium(ham2(0.5), [0, 1, 0, 0])
    assert c.alpha == pytest.approx(1.0, abs=1e-10)
    assert c.omega == pytest.approx(np.sqrt(2.0), abs=1e-10)
    # characteristic polynomial of the linearization: (l^2 - 1)(l^2 + 1 + 2b)
    roots = np.roots(np.polymul([1, 0, -1], [1, 0, 2.0]))
    assert np.allclose(np.sort(np.abs(roots)), np.sort(np.abs(c.eigenvalues)), atol=1e-10)


def test_classify_rejects_non_equilibrium_and_other_spectra():
    with pytest.raises(models.NotEquilibriumError):
        classify_equilibrium(ham1(), [0.1, 0, 0, 0])
    # the centre (0, +-1/sqrt 2) of a Ham1 lobe is elliptic-elliptic
    x2 = np.sqrt(0.5)
    assert isinstance(classify_equilibrium(ham1(), [0, x2, 0, 0]), OtherEquilibrium)


def test_equilibrium_spectrum_pattern():
    for m in all_models():
        ev = np.linalg.eigvals(models.linearization(m, m.equilibrium))
        target = np.array([m.alpha, -m.alpha, 1j * m.omega, -1j * m.omega])
        assert all(np.min(np.abs(ev - t)) < 1e-10 for t in target)
        assert np.abs(m.gradient(m.equilibrium)).max() < 1e-12


def test_actions_examples():
    assert actions(np.zeros(4)) == (0.0, 0.0)
    assert actions([0.1, 0.3, 0.2, 0.4]) == pytest.approx((0.02, 0.125), abs=1e-16)
    assert actions([-0.1, 0, 0.1, 0]) == pytest.approx((-0.01, 0.0), abs=1e-16)
    with pytest.raises(ChartError):
        actions(PhasePoint((0, 0, 0, 0)))


def test_i2_of_i1_examples():
    p = NormalFormParams()
    assert i2_of_i1(p, 0.0, 0.01) == 0.01
    assert i2_of_i1(p, -0.01, 0.01) == pytest.approx(0.0, abs=1e-18)
    q = NormalFormParams(1.0, 1.0, {(0, 2): 0.5})
    # omega I2 + 0.5 I2^2 = E by the quadratic formula
    assert i2_of_i1(q, 0.0, 0.01) == pytest.approx(-1 + np.sqrt(1 + 2 * 0.01), rel=1e-12)


def test_i1_minus_examples():
    assert i1_minus(NormalFormParams(), 0.01) == -0.01
    assert i1_minus(NormalFormParams(4.0, 1.0), 0.01) == -0.0025
    # -I1 + I1^2 = E: the negative root of the quadratic, by bisection
    lo, hi = -0.1, 0.0
    g = lambda x: -x + x * x - 0.01
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if g(mid) > 0 else (lo, mid)
    assert i1_minus(NormalFormParams(1.0, 1.0, {(2, 0): 1.0}), 0.01) == pytest.approx(lo, abs=1e-15)
    with pytest.raises(ValueError):
        i1_minus(NormalFormParams(), 0.0)


def test_remainder_degree_is_enforced():
    with pytest.raises(ValueError):
        NormalFormParams(1.0, 1.0, {(1, 0): 0.1})
    with pytest.raises(ValueError):
        NormalFormParams(-1.0, 1.0)
    p = NormalFormParams(1.0, 1.0, {(2, 0): 0.3, (0, 2): 0.2})
    assert p.R(0.0, 0.0) == 0 and p.R(0.0, 0.0, 1, 0) == 0 and p.R(0.0, 0.0, 0, 1) == 0


def test_involution_examples():
    assert np.array_equal(involution_T([1, 2, 3, 4]), [-1, 2, -3, 4])
    pt = involution_T(PhasePoint((1, 2, 3, 4), NORMAL_FORM))
    assert pt.coords == (-1, 2, -3, 4) and pt.chart == NORMAL_FORM


@given(points, remainders)
def test_involution_properties(z, rem):
    m = normal_form_model(NormalFormParams(1.0, 1.5, rem))
    assert np.array_equal(involution_T(involution_T(z)), z)
    assert m.value(involution_T(z)) == pytest.approx(m.value(z), abs=1e-15)
    # K o T = K and T anti-symplectic-free diagonal: X_K(Tz) = T X_K(z)
    X = hamiltonian_vector_field(m, z)
    assert np.allclose(hamiltonian_vector_field(m, involution_T(z)), involution_T(X), atol=1e-15)


def test_exact_flow_examples():
    p = NormalFormParams()
    assert np.allclose(exact_normal_form_flow(p, [1, 0, 0, 0], 1.0), [np.exp(-1), 0, 0, 0],
                       atol=1e-16)
    assert np.allclose(exact_normal_form_flow(p, [0, 1, 0, 0], np.pi / 2), [0, 0, 0, -1],
                       atol=1e-15)


@given(points, remainders, st.floats(-5, 5))
def test_exact_flow_conserves_actions_and_energy(z, rem, t):
    p = NormalFormParams(1.3, 0.7, rem)
    zt = exact_normal_form_flow(p, z, t)
    I1, I2 = actions(z)
    J1, J2 = actions(zt)
    assert J1 == pytest.approx(I1, rel=1e-12, abs=1e-16)
    assert J2 == pytest.approx(I2, rel=1e-12, abs=1e-16)
    assert p.K(J1, J2) == pytest.approx(p.K(I1, I2), rel=1e-12, abs=1e-16)


def test_make_model_and_remainder_parsing():
    assert parse_remainder("2,0:0.5;0,2:-1") == {(2, 0): 0.5, (0, 2): -1.0}
    assert parse_remainder("") == {}
    m = make_model("normal_form", alpha=2.0, remainder="0,2:0.1")
    assert m.normal_form.remainder == {(0, 2): 0.1}
    assert make_model("ham2", b=0.25).params == {"b": 0.25}
    with pytest.raises(KeyError):
        make_model("kepler")
    with pytest.raises(TypeError):
        make_model("ham1", b=0.5)
    with pytest.raises(ValueError):
        ham1(0.5)
    with pytest.raises(ValueError):
        ham2(1.0)
