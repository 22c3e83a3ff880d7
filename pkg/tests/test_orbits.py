import numpy as np
import pytest

from saddlecenter import flow, orbits
from saddlecenter.models import NormalFormParams, ham1, ham2, i2_of_i1, normal_form_model
from saddlecenter.orbits import LinkingError, OrbitError, linking_number


@pytest.fixture(scope="module")
def h1():
    return ham1()


@pytest.fixture(scope="module")
def p3(h1):
    return orbits.ham1_p3(0.01)


@pytest.fixture(scope="module")
def homoclinic(h1):
    return orbits.find_homoclinic(h1, 0.01)


def test_normal_form_p2_is_exact():
    m = normal_form_model()
    orb = orbits.lyapunov_p2(m, 0.01)
    assert np.allclose(orb.state, [0, 0, 0, np.sqrt(0.02)], atol=1e-16)
    assert orb.period == pytest.approx(2 * np.pi, rel=1e-15)
    assert orb.residual < 1e-10
    assert orb.action == pytest.approx(2 * np.pi * 0.01, abs=1e-8)
    # period and action are different quantities
    assert abs(orb.period - orb.action) > 1


def test_normal_form_p2_with_remainder():
    p = NormalFormParams(1.0, 2.0, {(0, 2): 0.5})
    orb = orbits.lyapunov_p2(normal_form_model(p), 0.01, with_index=False)
    I2 = i2_of_i1(p, 0.0, 0.01)
    assert orb.period == pytest.approx(2 * np.pi / (2.0 + I2), rel=1e-14)
    assert orb.action == pytest.approx(2 * np.pi * I2, rel=1e-9)


def test_ham1_p2_period_two_ways(h1):
    orb = orbits.lyapunov_p2(h1, 0.01, with_index=False)
    assert orb.period == pytest.approx(orbits.ham1_p2_period_quadrature(0.01), abs=1e-9)
    assert orb.residual < 1e-10 and abs(orb.energy - 0.01) < 1e-15
    assert np.allclose(orb.state[[1, 3]], 0)


def test_ham1_p2_action_limit(h1):
    orb = orbits.lyapunov_p2(h1, 1e-3, with_index=False)
    assert orb.action / (2 * np.pi * 1e-3) == pytest.approx(1.0, rel=0.05)


def test_p2_range_is_enforced(h1):
    with pytest.raises(OrbitError):
        orbits.lyapunov_p2(h1, -0.01)
    with pytest.raises(OrbitError):
        orbits.lyapunov_p2(h1, 0.5)


def test_ham2_p2(h1):
    m = ham2()
    orb = orbits.lyapunov_p2(m, 1 / 6 + 0.01)
    assert orb.residual < 1e-10 and orb.cz.index == 2 and orb.stability == "hyperbolic"


def test_p3_properties(h1, p3):
    p2 = orbits.lyapunov_p2(h1, 0.01, with_index=False)
    tr = flow.integrate(h1, p3.state, (0, p3.period))
    ts = np.linspace(0, p3.period, 2001)
    curve = tr.state_at(ts)
    assert p3.residual < 1e-9 and p3.label == "P3"
    assert curve[:, 1].min() > 0
    assert p3.cz.index == 3
    assert p3.action > p2.action
    curve[-1] = curve[0]
    assert linking_number(curve, "global", h1, 0.01) == 0
    # the mirror image under x1 -> -x1 (with y1 -> -y1) traces the same orbit
    mirror = curve * np.array([-1, 1, -1, 1])
    assert max(orbits.distance_to_orbit(tr, w) for w in mirror[::50]) < 1e-7


def test_p3_from_a_seed_point(h1, p3):
    section = orbits.SymmetrySection(anchor=(0.0, 1 / np.sqrt(2)))
    x, _ = orbits.hill_ray_point(h1, 0.01, section.anchor, 0.05)
    orb = orbits.find_symmetric_orbit(h1, 0.01, np.array([x[0], x[1], 0, 0]), section,
                                      label="P3", with_index=False)
    assert orbits.distance_to_orbit(flow.integrate(h1, p3.state, (0, p3.period)), orb.state) < 1e-8
    # doubling the integration span returns to the start again
    assert np.linalg.norm(flow.flow_map(h1, orb.state, 2 * orb.period) - orb.state) < 1e-8


def test_symmetric_shooting_needs_reversible_model():
    with pytest.raises(OrbitError):
        orbits.find_symmetric_orbit(normal_form_model(), 0.01, 0.0,
                                    orbits.SymmetrySection(anchor=(0.0, 0.5)))


def test_action_of_circles():
    t = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    r = 0.3
    for (i, j) in ((1, 3), (0, 2)):          # (x2, y2) and (x1, y1) planes
        loop = np.zeros((256, 4))
        loop[:, i] = r * np.cos(t)
        loop[:, j] = -r * np.sin(t)
        a = orbits.loop_action(loop)
        assert a == pytest.approx(np.pi * r * r, rel=1e-12)
        assert orbits.loop_action(loop[::-1]) == pytest.approx(-a, rel=1e-12)


def test_action_rejects_sign_change():
    # lambda_0(X_H) = (|y|^2 + x . grad U)/2 starts negative at rest on the x2-axis
    m = ham1()
    orb = orbits.PeriodicOrbit("ham1", np.array([0.0, 0.3, 0.0, 0.0]), 3.0, 0.0)
    with pytest.raises(OrbitError):
        orbits.action(m, orb)


def test_normal_form_manifolds():
    p = NormalFormParams()
    m = normal_form_model(p)
    p2 = orbits.lyapunov_p2(m, 0.01, with_index=False)
    seeds = orbits.local_invariant_manifolds(m, p2, 1e-4)
    by = {s.branch: s for s in seeds}
    u = by["unstable+"].samples
    assert np.abs(u[:, 0]).max() < 1e-12
    assert np.abs(0.5 * (u[:, 1] ** 2 + u[:, 3] ** 2) - i2_of_i1(p, 0.0, 0.01)).max() < 1e-12
    assert np.all(u[:, 2] > 0) and np.all(by["stable-"].samples[:, 0] < 0)
    for s in seeds:
        assert np.abs(m.value(s.samples) - 0.01).max() < 1e-10
    # separation from P2 grows like e^{alpha t}
    tr = flow.integrate(m, u[0], (0, 5.0))
    ts = np.linspace(0, 5.0, 50)
    slope = np.polyfit(ts, np.log(np.abs(tr.state_at(ts)[:, 2])), 1)[0]
    assert slope == pytest.approx(1.0, rel=0.02)


def test_ham1_manifolds(h1):
    p2 = orbits.lyapunov_p2(h1, 0.01)
    seeds = orbits.local_invariant_manifolds(h1, p2, 1e-5, n_fiber=8)
    for s in seeds:
        assert np.abs(h1.value(s.samples) - 0.01).max() < 1e-10
    up = next(s for s in seeds if s.branch == "unstable+")
    assert np.all(up.samples[:, 1] > 0)
    with pytest.raises(ValueError):
        orbits.local_invariant_manifolds(h1, p2, 1e-5, branches=("sideways",))


def test_homoclinic(h1, homoclinic):
    res = homoclinic
    assert res.symmetry_residual < 1e-8 and res.match_residual < 1e-4
    t, s = res.states(1500)
    # stays in the lobe x2 > 0 away from the neck
    assert np.all(s[np.abs(t) < 0.5 * res.crossing_time, 1] > 0)
    # reversibility about the symmetric point
    n = len(t) // 2
    fwd, bwd = s[n:], s[n::-1]
    assert np.abs(fwd[:, :2] - bwd[:, :2]).max() < 1e-7
    assert np.abs(fwd[:, 2:] + bwd[:, 2:]).max() < 1e-7
    assert np.abs(h1.value(s) - 0.01).max() < 1e-10


def test_homoclinic_needs_reversible_model():
    with pytest.raises(OrbitError):
        orbits.find_homoclinic(normal_form_model(), 0.01)


def _circle(rho, n, q2=0.05, p2=0.05, phase=0.0):
    t = np.linspace(0, 2 * np.pi, n) + phase
    c = np.zeros((n, 4))
    c[:, 0], c[:, 2] = rho * np.cos(t), rho * np.sin(t)
    c[:, 1], c[:, 3] = q2, p2
    c[-1] = c[0]
    return c


def test_linking_examples():
    c = _circle(0.01, 400)
    assert abs(linking_number(c)) == 1
    shifted = c.copy()
    shifted[:, [0, 2]] += 0.05
    assert linking_number(shifted) == 0
    assert linking_number(c[::-1]) == -linking_number(c)


def test_linking_is_invariant_under_refinement_and_reparameterization():
    base = linking_number(_circle(0.01, 400))
    assert linking_number(_circle(0.01, 800)) == base
    assert linking_number(_circle(0.01, 401, phase=0.3)) == base


def test_linking_errors():
    c = _circle(0.01, 100)
    with pytest.raises(LinkingError):
        linking_number(c[:-1])
    with pytest.raises(LinkingError):
        linking_number(_circle(1e-7, 100))
    with pytest.raises(LinkingError):
        linking_number(c, model=normal_form_model(), E=0.5)


def test_orbit_serialization(p3):
    d = p3.to_dict()
    assert d["label"] == "P3" and d["cz"]["index"] == 3 and len(d["state"]) == 4
