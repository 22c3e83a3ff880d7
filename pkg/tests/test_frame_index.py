import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from saddlecenter import flow, frame_index as fi, geometry, orbits
from saddlecenter.models import NormalFormParams, ham1, ham2, normal_form_model

J = fi.QUATERNIONS


def test_quaternion_relations():
    I = np.eye(4)
    for i in (1, 2, 3):
        assert np.array_equal(J[i] @ J[i], -I)
    assert np.array_equal(J[1] @ J[2], J[3])
    assert np.array_equal(J[2] @ J[3], J[1])
    assert np.array_equal(J[3] @ J[1], J[2])
    assert np.array_equal(J[0], I)
    for i in range(4):
        assert np.array_equal(J[i].T @ J[i], I)


def test_quaternion_map_formulas():
    v = np.array([1.0, 2.0, 3.0, 4.0])       # (a1, a2, b1, b2)
    assert np.array_equal(fi.quaternion_map(1, v), [4, -3, 2, -1])
    assert np.array_equal(fi.quaternion_map(2, v), [2, -1, -4, 3])
    assert np.array_equal(fi.quaternion_map(3, v), [3, 4, -1, -2])
    assert np.array_equal(fi.quaternion_map(0, v), v)


def test_frame_orthonormal_on_many_points():
    m = ham1()
    rng = np.random.default_rng(0)
    w = rng.uniform(-1, 1, size=(100_000, 4))
    g = m.gradient(w)
    n = g / np.linalg.norm(g, axis=1, keepdims=True)
    F = np.stack([n @ J[i].T for i in range(4)], axis=1)           # (N, 4, 4) rows X0..X3
    gram = np.einsum("nik,njk->nij", F, F)
    assert np.abs(gram - np.eye(4)).max() < 1e-12
    # the per-point constructor agrees with the batch one
    for k in range(0, 100_000, 10_000):
        fr = fi.frame_at(m, w[k])
        assert np.allclose(fr.matrix.T, F[k], atol=1e-15)


def test_frame_tangency_and_flow_direction():
    rng = np.random.default_rng(1)
    for m in (ham1(), ham2(), normal_form_model(NormalFormParams(1.5, 0.5, {(1, 1): 0.2}))):
        for w in m.equilibrium + rng.uniform(-0.5, 0.5, size=(200, 4)):
            fr = fi.frame_at(m, w)
            g = m.gradient(w)
            assert max(abs(g @ fr.X1), abs(g @ fr.X2), abs(g @ fr.X3)) < 1e-12 * max(1, np.linalg.norm(g))
            X = g @ J[3].T
            X = X / np.linalg.norm(X)
            assert np.linalg.norm(fr.X3 - X) < 1e-12
            assert np.allclose(fr.X0, g / np.linalg.norm(g))


def test_frame_fails_at_critical_point():
    with pytest.raises(fi.CriticalPointError):
        fi.frame_at(ham1(), np.zeros(4))
    with pytest.raises(fi.CriticalPointError):
        fi.m_matrix(ham2(), [0, 1, 0, 0])


def test_m_matrix_symmetric_and_positive_on_ham1_level():
    m = ham1()
    rng = np.random.default_rng(2)
    box = [(-0.5, 0.5), (-0.2, 1.1), (-0.6, 0.6), (-0.6, 0.6)]
    pts = geometry.box_level_sampler(m, 0.01, box, 200, rng,
                                     lambda w: w[1] > 0.05 and np.linalg.norm(w) > 0.05)
    for w in pts:
        M = fi.m_matrix(m, w)
        assert np.array_equal(M, M.T)
        assert np.linalg.det(M) > 0 and np.trace(M) > 0


@pytest.mark.parametrize("rem", [{}, {(2, 0): 0.3, (1, 1): -0.2, (0, 2): 0.4, (0, 3): 0.1}],
                         ids=["quadratic", "polynomial"])
def test_m_matrix_matches_closed_form_coefficients(rem):
    alpha, omega = 1.3, 0.8
    m = normal_form_model(NormalFormParams(alpha, omega, rem))
    b, r = 0.03, 0.02
    ab, ob, rbar = oracles.rates(alpha, omega, rem, b, r)
    ts = np.linspace(-2, 2, 200)
    oracle = oracles.pmn_printed if not rem else oracles.pmn_corrected
    for t, w in zip(ts, oracles.saddle_curve(b, r, ab, ob, ts)):
        got = oracles.pmn_from_m_matrix(fi.m_matrix(m, w))
        assert np.allclose(got, oracle(b, r, ab, ob, rbar, t), atol=1e-8, rtol=0)


def test_printed_coefficients_differ_once_the_remainder_curves():
    rem = {(2, 0): 0.3, (0, 2): 0.4}
    ab, ob, rbar = oracles.rates(1.0, 1.0, rem, 0.03, 0.02)
    t = 0.7
    printed = np.array(oracles.pmn_printed(0.03, 0.02, ab, ob, rbar, t))
    corrected = np.array(oracles.pmn_corrected(0.03, 0.02, ab, ob, rbar, t))
    assert printed[0] == corrected[0]
    assert np.abs(printed[1:] - corrected[1:]).max() > 1e-6


def _p2(model, E=0.01):
    return orbits.lyapunov_p2(model, E, with_index=False)


def test_frame_rotation_matches_projected_variational_flow():
    for m in (normal_form_model(), ham1()):
        orb = _p2(m)
        tr = flow.integrate_variational(m, orb.state, (0, orb.period))
        fr = fi.frame_at(m, orb.state)
        ts = np.linspace(0, orb.period, 60)
        for th in np.linspace(0, np.pi, 5, endpoint=False):
            v = np.cos(th) * fr.X1 + np.sin(th) * fr.X2
            rec = fi.transverse_linearized(m, tr, v)
            assert np.abs(rec.alpha_at(ts) - fi.projected_variational(m, tr, v, ts)).max() < 1e-7


def test_neutral_directions_turn_once_along_normal_form_p2():
    m = normal_form_model()
    orb = _p2(m)
    tr = flow.integrate(m, orb.state, (0, orb.period))
    for v in ([1.0, 0, 0, 0], [0, 0, 1.0, 0]):
        rec = fi.transverse_linearized(m, tr, np.array(v))
        assert fi.delta_eta(rec) == pytest.approx(2 * np.pi, rel=1e-7)


def test_eta_increases_where_m_is_positive():
    m = ham1()
    orb = _p2(m)
    tr = flow.integrate(m, orb.state, (0, orb.period))
    fr = fi.frame_at(m, orb.state)
    rec = fi.transverse_linearized(m, tr, fr.X1 + 0.3 * fr.X2)
    assert np.all(np.diff(rec.eta) > 0)
    eta_dot = [a @ fi.m_matrix(m, s) @ a / (a @ a)
               for a, s in zip(np.column_stack([rec.alpha1, rec.alpha2]), tr.state_at(rec.times))]
    assert min(eta_dot) > 0


def test_transverse_linearized_rejects_flow_direction():
    m = ham1()
    orb = _p2(m)
    tr = flow.integrate(m, orb.state, (0, 1.0))
    with pytest.raises(fi.DirectionLossError):
        fi.transverse_linearized(m, tr, fi.frame_at(m, orb.state).X3)


def test_delta_eta_trivial_cases():
    m = ham1()
    w = np.array([0.1, 0.2, 0.0, 0.1])
    fr = fi.frame_at(m, w)
    v = fr.X1 + fr.X2
    rec0 = fi.transverse_linearized(m, flow.integrate(m, w, (0, 0)), v)
    assert fi.delta_eta(rec0) == 0
    fwd = fi.transverse_linearized(m, flow.integrate(m, w, (0, 2.0)), v)
    end = flow.flow_map(m, w, 2.0)
    u = flow.integrate_variational(m, w, (0, 2.0)).variational[-1] @ v
    back = fi.transverse_linearized(m, flow.integrate(m, end, (0, -2.0)), u)
    assert fi.delta_eta(back) == pytest.approx(-fi.delta_eta(fwd), rel=1e-8)


@pytest.mark.parametrize("lo,hi,index,degenerate", [
    (0.78, 1.22, 2, False), (1.1, 1.4, 3, False), (0.1, 0.4, 1, False),
    (-0.3, 0.2, 0, False), (1.00001, 1.3, 3, True), (1.0000005, 1.3, 2, True), (2.5, 2.99999, 5, True),
])
def test_interval_rule(lo, hi, index, degenerate):
    assert fi.cz_from_interval(lo, hi) == (index, degenerate)


@given(st.integers(-3, 3), st.floats(0.01, 0.48), st.floats(0.01, 0.49))
def test_interval_rule_properties(k, a, w):
    # an interval strictly inside (k, k+1) has odd index 2k+1; one containing k has index 2k
    lo = k + a
    hi = min(lo + w, k + 0.99)
    assert fi.cz_from_interval(lo, hi)[0] == 2 * k + 1
    assert fi.cz_from_interval(k - a / 2, k + w / 2)[0] == 2 * k


def test_cz_of_p2():
    res = fi.cz_index(normal_form_model(), _p2(normal_form_model()))
    assert res.index == 2 and res.interval[0] < 1 < res.interval[1]
    assert res.interval[1] - res.interval[0] < 0.51 and not res.degenerate_flag
    assert fi.cz_index(ham1(), _p2(ham1())).index == 2
    with pytest.raises(ValueError):
        fi.cz_index(ham1(), _p2(ham1()), n_directions=4)


def test_transverse_monodromy():
    orb = _p2(normal_form_model())
    P, kind = fi.monodromy_transverse(normal_form_model(), orb)
    ev = np.sort(np.linalg.eigvals(P).real)
    assert ev[1] == pytest.approx(oracles.E_2PI, rel=1e-6)
    assert ev[0] == pytest.approx(oracles.E_M2PI, rel=1e-6)
    assert abs(np.linalg.det(P) - 1) < 1e-8 and kind == "hyperbolic"
    P1, kind1 = fi.monodromy_transverse(ham1(), _p2(ham1()))
    assert abs(np.linalg.det(P1) - 1) < 1e-8 and kind1 == "hyperbolic"
    assert fi.stability_of(1.0) == "elliptic" and fi.stability_of(2.0) == "parabolic"


def test_ball_transit_hits_the_sphere():
    p = NormalFormParams(1.0, 1.0, {(0, 2): 0.2})
    rng = np.random.default_rng(4)
    from saddlecenter.models import exact_normal_form_flow
    for _ in range(50):
        z = rng.normal(size=4)
        z *= 0.05 * rng.uniform(0.1, 1) / np.linalg.norm(z)
        tm, tp = fi.ball_transit(p, z, 0.05)
        assert tm <= 0 <= tp
        for t in (tm, tp):
            assert np.linalg.norm(exact_normal_form_flow(p, z, t)) == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(ValueError):
        fi.ball_transit(p, [0, 0.01, 0.01, 0], 0.05)
    with pytest.raises(ValueError):
        fi.ball_transit(p, [0.1, 0, 0.1, 0], 0.05)


def test_ball_rotation_bound_on_a_few_samples():
    p = NormalFormParams()
    rng = np.random.default_rng(11)
    for _ in range(40):
        z = rng.normal(size=4)
        z *= 0.05 * rng.uniform() ** 0.25 / np.linalg.norm(z)
        margin, _ = fi.ball_rotation_margin(p, z, rng.uniform(0, 2 * np.pi), 0.05)
        assert margin > 0


def test_rotation_record_csv(tmp_path):
    m = ham1()
    w = np.array([0.1, 0.2, 0.0, 0.1])
    fr = fi.frame_at(m, w)
    rec = fi.transverse_linearized(m, flow.integrate(m, w, (0, 1.0)), fr.X1)
    rec.to_csv(tmp_path / "r.csv")
    data = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1)
    assert data.shape[1] == 4 and np.allclose(data[:, 3], rec.eta)
