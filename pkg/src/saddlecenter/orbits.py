"""Periodic orbits near the saddle-center: the Lyapunov orbit in the neck, the
symmetric brake orbit in the lobe, actions, invariant manifolds, homoclinics
and linking numbers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import flow
from .flow import DEFAULT_CONFIG, IntegratorConfig, first_crossing, integrate, integrate_variational
from .frame_index import cz_index, monodromy_transverse
from .models import NORMAL_FORM, HamiltonianModel, as_array, exact_normal_form_flow, i2_of_i1


class OrbitError(RuntimeError):
    pass


class NewtonDivergence(OrbitError):
    pass


class CollapsedOrbit(OrbitError):
    pass


class HomoclinicNotFound(OrbitError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


class LinkingError(ValueError):
    pass


@dataclass
class PeriodicOrbit:
    model: str
    state: np.ndarray
    period: float
    energy: float
    action: float = float("nan")
    residual: float = float("nan")
    cz: object = None
    stability: str | None = None
    label: str = "other"
    chart: str = "global"
    monodromy: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {"model": self.model, "label": self.label, "chart": self.chart,
               "state": [float(v) for v in self.state], "period": float(self.period),
               "energy": float(self.energy), "action": float(self.action),
               "residual": float(self.residual), "stability": self.stability}
        if self.cz is not None:
            out["cz"] = {"index": int(self.cz.index),
                         "interval": [float(v) for v in self.cz.interval],
                         "directions_sampled": int(self.cz.directions_sampled),
                         "degenerate_flag": bool(self.cz.degenerate_flag)}
        else:
            out["cz"] = None
        return out


# ---------------------------------------------------------------------------
# actions
# ---------------------------------------------------------------------------

def liouville_form(w, v) -> np.ndarray:
    """``lambda_0(v) = (y . dx - x . dy)/2`` at ``w``, batched over leading axes."""
    w, v = np.asarray(w), np.asarray(v)
    return 0.5 * (w[..., 2] * v[..., 0] + w[..., 3] * v[..., 1]
                  - w[..., 0] * v[..., 2] - w[..., 1] * v[..., 3])


def _gauss_nodes(t0, t1, panels, order=10):
    x, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(t0, t1, panels + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None]).ravel()
    weights = (half[:, None] * wts[None]).ravel()
    return nodes, weights


def action(model: HamiltonianModel, orbit: PeriodicOrbit, panels: int = 64,
           cfg: IntegratorConfig = DEFAULT_CONFIG, check_star_shaped: bool = True) -> float:
    """Integral of ``lambda_0`` over one period, by composite Gauss-Legendre."""
    traj = integrate(model, orbit.state, (0.0, orbit.period), cfg)
    nodes, weights = _gauss_nodes(0.0, orbit.period, panels)
    w = traj.state_at(nodes)
    xh = np.array([flow.J4 @ model.gradient(s) for s in w])
    lam = liouville_form(w, xh)
    if check_star_shaped and not (np.all(lam > 0) or np.all(lam < 0)):
        raise OrbitError("lambda_0(X_H) changes sign along the orbit: level not star-shaped there")
    return float(weights @ lam)


def loop_action(points) -> float:
    """``lambda_0`` integrated around a closed, uniformly sampled loop.

    ``points`` has shape ``(n, 4)`` and excludes the repeated endpoint; the
    periodic trapezoid rule with spectral derivatives is used.
    """
    p = np.asarray(points, dtype=float)
    n = len(p)
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    # derivative with respect to a parameter running over [0, 2 pi)
    dp = np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(p, axis=0), axis=0))
    return float(np.sum(liouville_form(p, dp)) * 2 * np.pi / n)


# ---------------------------------------------------------------------------
# symmetric orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetrySection:
    """Brake-orbit shooting setup for reversible mechanical models.

    Seeds are rest points on the Hill boundary reached along the ray from
    ``anchor`` at angle ``phi``.  The orbit is followed until the first
    decreasing crossing of ``x[position_index] = 0``; there ``momentum_index``
    must vanish.  The period is four times that crossing time.
    """

    anchor: tuple
    position_index: int = 0
    momentum_index: int = 3
    ray_max: float = 2.0


def hill_ray_point(model: HamiltonianModel, E: float, anchor, phi: float, ray_max: float = 2.0):
    """First point of ``{U = E}`` along the ray from ``anchor`` at angle ``phi``.

    Returns ``(x, s)`` with ``x = anchor + s (cos phi, sin phi)``.
    """
    a = np.asarray(anchor, dtype=float)
    d = np.array([np.cos(phi), np.sin(phi)])
    f = lambda s: float(model.potential(*(a + s * d))) - E
    if f(0.0) >= 0:
        raise OrbitError("anchor is not inside the Hill region")
    ss = np.linspace(0.0, ray_max, 801)
    vals = np.array([f(s) for s in ss])
    idx = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if not len(idx):
        raise OrbitError(f"ray at angle {phi} does not meet the Hill boundary")
    i = idx[0]
    s = brentq(f, ss[i], ss[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return a + s * d, s


def _seed_and_tangent(model, E, section, phi):
    x, s = hill_ray_point(model, E, section.anchor, phi, section.ray_max)
    d = np.array([np.cos(phi), np.sin(phi)])
    dperp = np.array([-np.sin(phi), np.cos(phi)])
    gU = model.potential_grad(*x)
    ds = -s * (gU @ dperp) / (gU @ d)
    dx = ds * d + s * dperp
    return np.array([x[0], x[1], 0.0, 0.0]), np.array([dx[0], dx[1], 0.0, 0.0])


def _quarter_shot(model, z0, section, cfg, t_max, variational):
    i = section.position_index
    hit = first_crossing(model, z0, lambda w: w[i], "-", t_max, cfg, t_min=1e-9,
                         chunk=min(t_max, 5.0), variational=variational)
    if hit is None:
        raise OrbitError("no crossing of the symmetry section before t_max")
    return hit


def symmetric_residual(model, E, section, phi, cfg=DEFAULT_CONFIG, t_max=30.0, jacobian=False):
    """Momentum residual at the symmetry section for the seed at angle ``phi``."""
    z0, dz0 = _seed_and_tangent(model, E, section, phi)
    if not jacobian:
        t, s, _ = _quarter_shot(model, z0, section, cfg, t_max, False)
        return float(s[section.momentum_index]), t, z0
    t, s, phi_mat, _ = _quarter_shot(model, z0, section, cfg, t_max, True)
    j, i = section.momentum_index, section.position_index
    du = phi_mat @ dz0
    vel = flow.J4 @ model.gradient(s)
    dF = du[j] - vel[j] / vel[i] * du[i]
    return float(s[j]), t, z0, float(dF)


def _polish_symmetric(model, E, section, phi, cfg, t_max, F, t, z0, dF, steps=3):
    # the closing error of a hyperbolic orbit is the section residual amplified
    # by its multiplier, so keep stepping while the residual still drops
    for _ in range(steps):
        if dF == 0 or F == 0:
            break
        try:
            Fn, tn, zn, dFn = symmetric_residual(model, E, section, phi - F / dF, cfg, t_max,
                                                 jacobian=True)
        except OrbitError:
            break
        if not abs(Fn) < abs(F):
            break
        phi, F, t, z0, dF = phi - F / dF, Fn, tn, zn, dFn
    return phi, t, z0, F


def _newton_symmetric(model, E, section, phi, cfg, tol=1e-10, maxiter=50, t_max=30.0):
    F, t, z0, dF = symmetric_residual(model, E, section, phi, cfg, t_max, jacobian=True)
    for _ in range(maxiter):
        if abs(F) < tol:
            return _polish_symmetric(model, E, section, phi, cfg, t_max, F, t, z0, dF)
        step = -F / dF
        lam = 1.0
        while True:
            try:
                Fn, tn, zn, dFn = symmetric_residual(model, E, section, phi + lam * step, cfg,
                                                     t_max, jacobian=True)
            except OrbitError:
                Fn = np.inf
            if abs(Fn) < abs(F) or lam < 1e-6:
                break
            lam *= 0.5
        if not np.isfinite(Fn):
            raise NewtonDivergence("symmetric shooting left the admissible seed range")
        phi, F, t, z0, dF = phi + lam * step, Fn, tn, zn, dFn
    if abs(F) < tol:
        return phi, t, z0, F
    raise NewtonDivergence(f"symmetric shooting did not converge: residual {F:.3e}")


def _finish_orbit(model, z0, period, label, cfg, with_index=True):
    tr = integrate_variational(model, z0, (0.0, period),
                               IntegratorConfig(**{**cfg.__dict__, "symplectic_residual_tol": 1e-6}))
    residual = float(np.linalg.norm(tr.states[-1] - z0))
    orb = PeriodicOrbit(model.name, np.asarray(z0, dtype=float), float(period),
                        float(model.value(z0)), residual=residual, label=label,
                        chart=model.chart, monodromy=tr.variational[-1])
    orb.action = action(model, orb, cfg=cfg, check_star_shaped=False)
    if with_index:
        orb.cz = cz_index(model, orb, cfg=cfg)
        _, orb.stability = monodromy_transverse(model, orb, cfg)
    return orb


def find_symmetric_orbit(model: HamiltonianModel, E: float, seed, section: SymmetrySection,
                         cfg: IntegratorConfig = DEFAULT_CONFIG, label: str = "other",
                         plane_tol: float = 1e-6, with_index: bool = True) -> PeriodicOrbit:
    """Refine a symmetric brake orbit from a seed angle (or a seed point on ``y = 0``).

    The seed is converted to its angle about ``section.anchor``; Newton then
    solves for the seed whose orbit crosses the symmetry section
    perpendicularly.  Collapse onto the invariant plane ``x2 = y2 = 0`` is
    reported as an error.
    """
    if not model.reversible:
        raise OrbitError("symmetric shooting needs a reversible mechanical model")
    if np.ndim(seed) == 0:
        phi = float(seed)
    else:
        w = as_array(seed, model.chart)
        if abs(w[2]) > 1e-12 or abs(w[3]) > 1e-12:
            raise OrbitError("seed must lie on the symmetry set y = 0")
        d = w[:2] - np.asarray(section.anchor)
        phi = float(np.arctan2(d[1], d[0]))
    phi, tq, z0, F = _newton_symmetric(model, E, section, phi, cfg)
    if abs(z0[1]) < plane_tol and section.anchor[1] != 0:
        raise CollapsedOrbit("shooting collapsed onto the invariant plane")
    return _finish_orbit(model, z0, 4.0 * tq, label, cfg, with_index)


def ham1_p2_amplitude(E: float) -> float:
    """Turning point of ``y1^2 + x1^2 + x1^4 = 2E`` on the positive x1-axis."""
    return float(np.sqrt((np.sqrt(1.0 + 8.0 * E) - 1.0) / 2.0))


def lyapunov_p2(model: HamiltonianModel, E: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
                with_index: bool = True, e_max: float | None = None) -> PeriodicOrbit:
    """The hyperbolic orbit ``P2`` on the level ``H = E`` in the neck."""
    ec = model.critical_energy
    if not E > ec:
        raise OrbitError(f"P2 exists for E > {ec}")
    e_max = e_max if e_max is not None else {"ham1": 0.1, "ham2": ec + 0.05}.get(model.name, 0.05)
    if E - ec > e_max:
        raise OrbitError(f"energy {E} outside the validated range ({ec}, {ec + e_max}]")
    if model.chart == NORMAL_FORM:
        p = model.normal_form
        I2 = i2_of_i1(p, 0.0, E)
        z0 = np.array([0.0, 0.0, 0.0, np.sqrt(2.0 * I2)])
        period = 2 * np.pi / p.omega_bar(0.0, I2)
        return _finish_orbit(model, z0, period, "P2", cfg, with_index)
    if model.name == "ham1":
        a = ham1_p2_amplitude(E)
        z0 = np.array([a, 0.0, 0.0, 0.0])
        t, s, tr = first_crossing(model, z0, lambda w: w[0], "-", 20.0, cfg, t_min=1e-9)
        return _finish_orbit(model, z0, 4.0 * t, "P2", cfg, with_index)
    # general reversible model: brake orbit through the saddle-center along
    # the centre direction, symmetric about x1 = 0
    section = SymmetrySection(anchor=tuple(model.equilibrium[:2]), ray_max=1.0)
    phi, tq, z0, F = _newton_symmetric(model, E, section, 0.0, cfg)
    return _finish_orbit(model, z0, 4.0 * tq, "P2", cfg, with_index)


def ham1_p2_period_quadrature(E: float, n: int = 64) -> float:
    """Period of the planar Ham1 orbit by Gauss-Legendre quadrature.

    With ``x1 = a sin(theta)`` the period integral becomes
    ``4 int_0^{pi/2} dtheta / sqrt(1 + a^2 (1 + sin^2 theta))``.
    """
    a = ham1_p2_amplitude(E)
    x, w = np.polynomial.legendre.leggauss(n)
    th = (x + 1) * np.pi / 4
    return float(4 * (np.pi / 4) * np.sum(w / np.sqrt(1 + a * a * (1 + np.sin(th) ** 2))))


def ham1_p3(E: float, cfg: IntegratorConfig = DEFAULT_CONFIG, scan: int = 25,
            with_index: bool = True) -> PeriodicOrbit:
    """The symmetric brake orbit ``P3`` of Ham1 in the lobe ``x2 > 0``.

    Brake seeds are scanned along the Hill boundary of the lobe by their angle
    about the well bottom ``(0, 1/sqrt 2)``; the sign change of the section
    residual nearest to the horizontal is refined by Newton.
    """
    from .models import ham1
    model = ham1()
    section = SymmetrySection(anchor=(0.0, 1.0 / np.sqrt(2.0)))
    phis = np.linspace(-1.3, 1.3, scan)
    vals = []
    for phi in phis:
        try:
            x, _ = hill_ray_point(model, E, section.anchor, phi)
            vals.append(symmetric_residual(model, E, section, phi, cfg)[0] if x[1] > 0 else np.nan)
        except OrbitError:
            vals.append(np.nan)
    vals = np.array(vals)
    roots = [0.5 * (phis[i] + phis[i + 1]) for i in range(len(phis) - 1)
             if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] < 0]
    if not roots:
        raise OrbitError("no sign change of the symmetric residual in the lobe")
    phi0 = min(roots, key=abs)
    return find_symmetric_orbit(model, E, phi0, section, cfg, label="P3",
                                with_index=with_index)


# ---------------------------------------------------------------------------
# invariant manifolds
# ---------------------------------------------------------------------------

@dataclass
class ManifoldSeed:
    base: PeriodicOrbit
    branch: str
    displacement: float
    samples: np.ndarray
    phases: np.ndarray
    directions: np.ndarray


BRANCHES = ("stable+", "stable-", "unstable+", "unstable-")


def project_to_level(model, w, E, tol=1e-14, maxiter=30):
    """Newton correction of ``w`` along ``grad H`` onto ``H = E``."""
    w = np.array(w, dtype=float)
    for _ in range(maxiter):
        r = model.value(w) - E
        if abs(r) < tol:
            break
        g = model.gradient(w)
        w = w - r * g / (g @ g)
    return w


def local_invariant_manifolds(model: HamiltonianModel, p2: PeriodicOrbit, displacement: float,
                              n_fiber: int = 32, branches=BRANCHES,
                              cfg: IntegratorConfig = DEFAULT_CONFIG) -> list:
    """Fiber samples of the local stable and unstable manifolds of ``p2``.

    Branch signs: in the normal form ``unstable+`` has ``p1 > 0`` and
    ``stable+`` has ``q1 > 0``; for global models ``+`` has ``x2 > 0``.
    """
    for b in branches:
        if b not in BRANCHES:
            raise ValueError(f"unknown branch {b!r}")
    phases = p2.period * np.arange(n_fiber) / n_fiber
    if model.chart == NORMAL_FORM:
        base = exact_normal_form_flow(model.normal_form, p2.state, phases)
        out = []
        for b in branches:
            sgn = 1.0 if b.endswith("+") else -1.0
            slot = 2 if b.startswith("unstable") else 0
            dirs = np.zeros_like(base)
            dirs[:, slot] = sgn
            out.append(ManifoldSeed(p2, b, displacement, base + displacement * dirs, phases, dirs))
        return out
    mono = p2.monodromy
    if mono is None:
        mono = integrate_variational(model, p2.state, (0.0, p2.period), cfg).variational[-1]
    ev, evec = np.linalg.eig(mono)
    ev_abs = np.abs(ev)
    if ev_abs.max() < 1 + 1e-6:
        raise OrbitError("base orbit is not hyperbolic")
    vu = np.real(evec[:, np.argmax(ev_abs)])
    vs = np.real(evec[:, np.argmin(ev_abs)])
    tr = integrate_variational(model, p2.state, (0.0, p2.period),
                               IntegratorConfig(**{**cfg.__dict__, "symplectic_residual_tol": 1e-6}))
    base = tr.state_at(phases)
    phi = tr.variational_at(phases)
    out = []
    for b in branches:
        v0 = vu if b.startswith("unstable") else vs
        dirs = np.einsum("nij,j->ni", phi, v0)
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        dirs *= np.sign(dirs[:, 1])[:, None]
        if b.endswith("-"):
            dirs = -dirs
        pts = np.array([project_to_level(model, z + displacement * d, p2.energy)
                        for z, d in zip(base, dirs)])
        out.append(ManifoldSeed(p2, b, displacement, pts, phases, dirs))
    return out


def unstable_fiber_point(model, p2: PeriodicOrbit, tau: float, displacement: float,
                         cfg: IntegratorConfig = DEFAULT_CONFIG, _cache={}):
    """Point of the ``unstable+`` fiber over phase ``tau`` of ``p2``."""
    key = (id(p2), cfg)
    if key not in _cache:
        _cache.clear()
        mono = p2.monodromy
        ev, evec = np.linalg.eig(mono)
        vu = np.real(evec[:, np.argmax(np.abs(ev))])
        tr = integrate_variational(model, p2.state, (0.0, p2.period),
                                   IntegratorConfig(**{**cfg.__dict__, "symplectic_residual_tol": 1e-6}))
        _cache[key] = (vu, tr)
    vu, tr = _cache[key]
    tau = tau % p2.period
    d = tr.variational_at(tau) @ vu
    d = d / np.linalg.norm(d)
    d *= np.sign(d[1])
    return project_to_level(model, tr.state_at(tau) + displacement * d, p2.energy)


# ---------------------------------------------------------------------------
# homoclinic orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomoclinicConfig:
    displacement: float = 1e-6
    n_scan: int = 48
    t_max: float = 60.0
    integrator: IntegratorConfig = DEFAULT_CONFIG


@dataclass
class HomoclinicResult:
    trajectory_backward: flow.Trajectory
    trajectory_forward: flow.Trajectory
    symmetric_point: np.ndarray
    crossing_time: float
    fiber_phase: float
    symmetry_residual: float
    match_residual: float
    p2: PeriodicOrbit
    trace: tuple = ()

    def states(self, n: int = 2000) -> tuple:
        """Times centred on the symmetric point and states, ordered in time."""
        tb = np.linspace(-self.crossing_time, 0.0, n)
        tf = np.linspace(0.0, self.crossing_time, n)[1:]
        sb = self.trajectory_backward.state_at(tb)
        sf = self.trajectory_forward.state_at(tf)
        return np.concatenate([tb, tf]), np.concatenate([sb, sf])


def distance_to_orbit(traj: flow.Trajectory, w) -> float:
    """Distance from ``w`` to the closed curve traced by ``traj``."""
    ts = np.linspace(traj.t0, traj.t1, 2001)
    d = np.linalg.norm(traj.state_at(ts) - w, axis=1)
    i = int(np.argmin(d))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
    res = minimize_scalar(lambda t: np.linalg.norm(traj.state_at(t) - w), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-14})
    return float(min(res.fun, d[i]))


def _homoclinic_shot(model, p2, tau, hcfg):
    z = unstable_fiber_point(model, p2, tau, hcfg.displacement, hcfg.integrator)
    hit = first_crossing(model, z, lambda w: w[3], "-", hcfg.t_max, hcfg.integrator,
                         t_min=1e-9, chunk=10.0)
    if hit is None:
        return np.nan, None, None
    t, s, _ = hit
    return float(s[2]), t, s


def find_homoclinic(model: HamiltonianModel, E: float, hcfg: HomoclinicConfig = HomoclinicConfig(),
                    p2: PeriodicOrbit | None = None) -> HomoclinicResult:
    """Symmetric homoclinic orbit to ``P2`` inside the lobe ``x2 > 0``.

    The ``unstable+`` fiber is followed to the first decreasing crossing of
    ``y2 = 0``; a zero of ``y1`` there is a point of the symmetry set
    ``y = 0`` and the time-reversed half closes the orbit onto the stable
    manifold.
    """
    if not model.reversible:
        raise OrbitError("homoclinic search needs a reversible mechanical model")
    cfg = hcfg.integrator
    p2 = p2 or lyapunov_p2(model, E, cfg, with_index=False)
    taus = p2.period * np.arange(hcfg.n_scan) / hcfg.n_scan
    vals = np.array([_homoclinic_shot(model, p2, tau, hcfg)[0] for tau in taus])
    trace = tuple(zip(taus.tolist(), vals.tolist()))
    roots = []
    for i in range(len(taus)):
        a, b = taus[i], taus[(i + 1) % len(taus)] + (p2.period if i + 1 == len(taus) else 0.0)
        va, vb = vals[i], vals[(i + 1) % len(taus)]
        if np.isfinite(va) and np.isfinite(vb) and va * vb < 0:
            r = brentq(lambda s: _homoclinic_shot(model, p2, s, hcfg)[0], a, b,
                       xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            roots.append(r)
    if not roots:
        raise HomoclinicNotFound("no sign change of y1 at the symmetry section", trace)
    shots = [(r,) + _homoclinic_shot(model, p2, r, hcfg) for r in roots]
    # mirror images under x1 -> -x1 come in pairs; keep the x1 >= 0 member
    # and then the earliest symmetric crossing
    shots.sort(key=lambda s: (s[3][0] < 0, round(s[2], 6)))
    tau, f, t_hit, zs = shots[0]
    zs = np.array(zs)
    back = integrate(model, zs, (0.0, -t_hit), cfg)
    fwd = integrate(model, zs, (0.0, t_hit), cfg)
    p2traj = integrate(model, p2.state, (0.0, p2.period), cfg)
    match = distance_to_orbit(p2traj, fwd.states[-1])
    return HomoclinicResult(back, fwd, zs, float(t_hit), float(tau), abs(float(zs[2])),
                            match, p2, trace)


# ---------------------------------------------------------------------------
# linking with the spanning disk of P2
# ---------------------------------------------------------------------------

def _disk_functions(chart, model_name=None):
    if chart == NORMAL_FORM:
        # U1 = {q1 + p1 = 0, q1 < 0}, boundary at q1 = p1 = 0
        return (lambda w: w[..., 0] + w[..., 2], lambda w: w[..., 0] < 0,
                lambda w: np.hypot(w[..., 0], w[..., 2]))
    # Ham1: U1 = {x2 = 0, y2 > 0}, boundary at x2 = y2 = 0
    return (lambda w: w[..., 1], lambda w: w[..., 3] > 0,
            lambda w: np.hypot(w[..., 1], w[..., 3]))


def linking_number(curve, chart: str = NORMAL_FORM, model: HamiltonianModel | None = None,
                   E: float | None = None, level_tol: float = 1e-6,
                   closure_tol: float = 1e-9, boundary_tol: float = 1e-6) -> int:
    """Signed count of crossings of a closed polyline with the disk ``U1``.

    ``curve`` has shape ``(n, 4)`` with ``curve[-1] == curve[0]``.  When
    ``model`` and ``E`` are given, the curve is first checked to lie on the
    level ``H = E``.
    """
    c = np.asarray(curve, dtype=float)
    if np.linalg.norm(c[-1] - c[0]) > closure_tol:
        raise LinkingError("curve is not closed")
    if model is not None and E is not None:
        err = np.abs(model.value(c) - E).max()
        if err > level_tol:
            raise LinkingError(f"curve leaves the energy level (max error {err:.2e})")
    g, on_disk, dist = _disk_functions(chart)
    if np.any(dist(c) < boundary_tol):
        raise LinkingError("curve passes within the boundary tolerance of P2")
    gv = g(c)
    # a vertex exactly on the hypersurface counts as the positive side
    side = np.where(gv >= 0, 1, -1)
    count = 0
    for i in np.nonzero(side[:-1] != side[1:])[0]:
        a, b = gv[i], gv[i + 1]
        s = a / (a - b)
        w = c[i] + s * (c[i + 1] - c[i])
        slope = (b - a) / max(np.linalg.norm(c[i + 1] - c[i]), 1e-300)
        if abs(slope) < 1e-8:
            raise LinkingError("tangential crossing of the spanning disk")
        if on_disk(w):
            count += 1 if b > a else -1
    return int(count)
