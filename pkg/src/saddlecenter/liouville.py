"""Interpolated Liouville vector fields near the saddle-center and their
numerical certification.

All fields live in the normal-form chart ``z = (q1, q2, p1, p2)`` with the
symplectic form ``omega0 = sum dp_i ^ dq_i``, so that ``i_{X_F} omega0 = -dF``
for ``X_F = J grad F``.  The Liouville form of a field ``Y`` has coefficients
``theta_{q_i} = Y^{p_i}`` and ``theta_{p_i} = -Y^{q_i}``.

Stage one interpolates the radial field ``(z - z0)/2`` (near the origin) with
``(z - z0)/2 + R(z)`` (away from it), where ``R`` is a Hamiltonian
perturbation quadratic in ``|z - z0|``.  Stage two interpolates ``(z - z0)/2``
with ``z/2`` in a thin slab around ``{q1 + p1 = 0}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .models import (NORMAL_FORM, J4, NormalFormParams, actions, as_array,
                     i1_minus, i2_of_i1, normal_form_model)

SQRT2 = np.sqrt(2.0)

# Omega[a, b] is the coefficient of dz_a ^ dz_b in omega0 (antisymmetric)
OMEGA0 = np.zeros((4, 4))
OMEGA0[2, 0] = OMEGA0[3, 1] = 1.0
OMEGA0[0, 2] = OMEGA0[1, 3] = -1.0

# J grad(q1 + p1): the Hamiltonian field of K_f divided by f'
_SLAB_DIRECTION = np.array([1.0, 0.0, -1.0, 0.0])
_SLAB_NORMAL = np.array([1.0, 0.0, 1.0, 0.0])
_T_DIAG = np.array([-1.0, 1.0, -1.0, 1.0])


class SamplingError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------

def _smoothstep(u):
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_d(u):
    return 30.0 * u * u * (1.0 - u) ** 2


def _log_ratio(u):
    # log(a/b) for a = exp(-1/u), b = exp(-1/(1-u)); both steps are flat to
    # double precision outside [1e-3, 1 - 1e-3]
    uu = np.clip(u, 1e-3, 1.0 - 1e-3)
    return uu, np.clip(1.0 / (1.0 - uu) - 1.0 / uu, -700.0, 700.0)


def _bumpstep(u):
    # a / (a + b): C-infinity, 0 at u <= 0 and 1 at u >= 1
    _, x = _log_ratio(u)
    return 1.0 / (1.0 + np.exp(-x))


def _bumpstep_d(u):
    uu, x = _log_ratio(u)
    out = (1.0 / uu ** 2 + 1.0 / (1.0 - uu) ** 2) / (np.exp(x) + 2.0 + np.exp(-x))
    return np.where((u <= 1e-3) | (u >= 1.0 - 1e-3), 0.0, out)


_PROFILES = {"quintic": (_smoothstep, _smoothstep_d, 15.0 / 8.0),
             "smooth": (_bumpstep, _bumpstep_d, 2.0)}


@dataclass(frozen=True)
class CutoffSpec:
    """Non-increasing cutoff equal to 1 on ``[0, lo]`` and 0 on ``[hi, inf)``.

    ``profile="quintic"`` uses the smoothstep ``6u^5 - 15u^4 + 10u^3`` (C^2,
    steepest slope ``-15/(8 (hi - lo))``); ``"smooth"`` uses the C-infinity
    step ``e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)})`` (steepest slope ``-2/(hi - lo)``).
    """

    lo: float
    hi: float
    delta1: float | None = None
    profile: str = "quintic"

    def __post_init__(self):
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown cutoff profile {self.profile!r}")
        if not 0 <= self.lo < self.hi:
            raise ValueError("need 0 <= lo < hi")

    def _u(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def __call__(self, t):
        return 1.0 - _PROFILES[self.profile][0](self._u(t))

    def derivative(self, t):
        return -_PROFILES[self.profile][1](self._u(t)) / (self.hi - self.lo)

    @property
    def min_slope(self) -> float:
        return -_PROFILES[self.profile][2] / (self.hi - self.lo)

    def certify(self, n: int = 10_000, t_max: float | None = None) -> dict:
        """Check the defining properties and the two linear bounds on a grid.

        Only meaningful for cutoffs built by :func:`make_cutoff`.
        """
        d1 = self.delta1
        if d1 is None:
            raise ValueError("certify needs a cutoff built from delta1")
        t = np.linspace(0.0, t_max if t_max is not None else 1.5 * d1, n)
        f, fp = self(t), self.derivative(t)
        trans = (t > self.lo) & (t < self.hi)
        checks = {
            "one_below": bool(np.all(f[t <= self.lo] == 1.0)),
            "zero_above": bool(np.all(f[t >= self.hi] == 0.0)),
            "non_increasing": bool(np.all(fp <= 0.0)),
            "slope_bound": bool(np.all(fp[trans] > -6.0 / d1) and np.all(fp[trans] < 0.0)),
            "one_minus_f_bound": bool(np.all((1.0 - f >= 0.0) & (1.0 - f <= 6.0 * t / d1))),
            "slope_linear_bound": bool(np.all(np.abs(fp) <= 18.0 * t / d1 ** 2)),
        }
        checks["ok"] = all(checks.values())
        checks["n_grid"] = n
        return checks


def make_cutoff(delta1: float) -> CutoffSpec:
    """Cutoff with transition on ``[delta1/3, 2 delta1/3]``; slope ``> -6/delta1``."""
    if not delta1 > 0:
        raise ValueError("delta1 must be positive")
    return CutoffSpec(delta1 / 3.0, 2.0 * delta1 / 3.0, float(delta1))


def slab_cutoff(epsilon: float) -> CutoffSpec:
    """C-infinity cutoff equal to 1 below ``epsilon/4`` and 0 above ``epsilon/2``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return CutoffSpec(epsilon / 4.0, epsilon / 2.0, profile="smooth")


# ---------------------------------------------------------------------------
# constants and perturbations
# ---------------------------------------------------------------------------

def c2_constant(params: NormalFormParams) -> float:
    """``4 / sqrt(min(omega/alpha, 1))``."""
    return 4.0 / np.sqrt(min(params.omega / params.alpha, 1.0))


def base_point(delta0: float) -> np.ndarray:
    """``z0 = (delta0, 0, delta0, 0) / sqrt 2``."""
    return np.array([delta0, 0.0, delta0, 0.0]) / SQRT2


def g_z0_stage2(z, delta0: float):
    """``(q1 - p1) delta0 / (2 sqrt 2)``, the potential of the constant field ``-z0/2``."""
    a = as_array(z, NORMAL_FORM)
    return (a[..., 0] - a[..., 2]) * delta0 / (2.0 * SQRT2)


@dataclass(frozen=True)
class SyntheticRemainder:
    """Hamiltonian stand-in for the coordinate-change remainder.

    ``R = J grad G`` with ``G(z) = (c/3) |z - z0|^2 <a, z - z0>`` for a fixed
    unit vector ``a``.  Then ``G(z0) = 0``, ``grad G(z0) = 0`` and
    ``|R(z)| <= c |z - z0|^2``.
    """

    z0: np.ndarray
    c: float
    direction: np.ndarray

    def potential(self, z):
        d = np.asarray(z, dtype=float) - self.z0
        return self.c / 3.0 * np.sum(d * d, axis=-1) * (d @ self.direction)

    def potential_gradient(self, z):
        d = np.asarray(z, dtype=float) - self.z0
        ad = (d @ self.direction)[..., None]
        dd = np.sum(d * d, axis=-1)[..., None]
        return self.c / 3.0 * (2.0 * ad * d + dd * self.direction)

    def __call__(self, z):
        return self.potential_gradient(z) @ J4.T


DEFAULT_DIRECTION = np.array([1.0, 2.0, -1.0, 0.5]) / np.sqrt(6.25)


def synthetic_remainder(delta0: float, c: float, direction=None) -> SyntheticRemainder:
    a = DEFAULT_DIRECTION if direction is None else np.asarray(direction, dtype=float)
    a = a / np.linalg.norm(a)
    return SyntheticRemainder(base_point(delta0), float(c), a)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def potential_by_quadrature(R: Callable, z0, z) -> np.ndarray:
    """``G(z) = int_0^1 grad G(z0 + s (z - z0)) . (z - z0) ds`` with ``grad G = -J R``.

    Eight-point Gauss-Legendre on the segment; exact for polynomial ``R`` up
    to degree 14.
    """
    z = np.asarray(z, dtype=float)
    d = z - z0
    total = np.zeros(z.shape[:-1])
    for s, w in zip(_GL_NODES, _GL_WEIGHTS):
        grad = -(R(z0 + s * d) @ J4.T)
        total = total + w * np.sum(grad * d, axis=-1)
    return total


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclass
class LiouvilleField:
    """An interpolated Liouville field on ``{q1 + p1 >= 0}`` near the origin.

    ``reflect=True`` extends it to ``{q1 + p1 < 0}`` by ``Y(z) = T Y(T z)``
    with the symplectic involution ``T``.  The extension is smooth only when
    the field equals ``z/2`` near ``{q1 + p1 = 0}`` (stage two); the
    stage-one formula already extends smoothly by itself.
    """

    stage: str
    params: NormalFormParams
    delta0: float
    cutoff: CutoffSpec
    remainder: Callable | None = None
    reflect: bool = True
    epsilon: float | None = None
    _potential: Callable | None = field(default=None, repr=False)

    @property
    def c2(self) -> float:
        return c2_constant(self.params)

    @property
    def delta1(self) -> float:
        return self.delta0 / self.c2

    @property
    def delta2(self) -> float:
        return self.delta1 / 6.0

    @property
    def z0(self) -> np.ndarray:
        return base_point(self.delta0)

    def potential(self, z):
        """The function ``G`` whose cutoff product is subtracted."""
        if self.stage == "two":
            return g_z0_stage2(z, self.delta0)
        if self.remainder is None:
            return np.zeros(np.shape(z)[:-1])
        return potential_by_quadrature(self.remainder, self.z0, z)

    def _R(self, z):
        if self.stage == "two":
            return np.broadcast_to(-0.5 * self.z0, np.shape(z)).copy()
        if self.remainder is None:
            return np.zeros(np.shape(z))
        return self.remainder(z)

    def _half_plane(self, z):
        # evaluation on {q1 + p1 >= 0}
        s = z[..., 0] + z[..., 2]
        f = self.cutoff(s)[..., None]
        fp = self.cutoff.derivative(s)[..., None]
        G = self.potential(z)[..., None]
        if self.stage == "two":
            return 0.5 * z - (1.0 - f) * 0.5 * self.z0 - G * fp * _SLAB_DIRECTION
        return 0.5 * (z - self.z0) + (1.0 - f) * self._R(z) - G * fp * _SLAB_DIRECTION

    def __call__(self, z):
        z = np.asarray(as_array(z, NORMAL_FORM), dtype=float)
        flat = np.atleast_2d(z)
        out = self._half_plane(flat)
        if self.reflect:
            neg = flat[:, 0] + flat[:, 2] < 0
            if np.any(neg):
                out[neg] = self._half_plane(flat[neg] * _T_DIAG) * _T_DIAG
        return out.reshape(z.shape)

    def terms(self, z) -> dict:
        """The three summands of ``dK . Y`` on ``{q1 + p1 >= 0}``, evaluated separately.

        ``(1 - K_f) dK.R + dK.Y0 - G dK.Y_f`` with ``Y0 = (z - z0)/2``
        (stage one) or ``z/2`` (stage two, where ``R = -z0/2``), and
        ``dK.Y_f = alpha_bar (q1 - p1) f'``.
        """
        z = np.atleast_2d(np.asarray(z, dtype=float))
        model = normal_form_model(self.params)
        dK = model.gradient(z)
        I1, I2 = actions(z)
        s = z[:, 0] + z[:, 2]
        f = self.cutoff(s)
        Y0 = 0.5 * z if self.stage == "two" else 0.5 * (z - self.z0)
        ab = self.params.alpha_bar(I1, I2)
        return {
            "remainder": (1.0 - f) * np.sum(dK * self._R(z), axis=-1),
            "radial": np.sum(dK * Y0, axis=-1),
            "cutoff": -self.potential(z) * ab * (z[:, 0] - z[:, 2]) * self.cutoff.derivative(s),
        }


def build_field(params: NormalFormParams, stage: str = "one", delta0: float = 0.05,
                remainder: Callable | None = None, epsilon: float | None = None,
                c: float = 0.0, reflect: bool | None = None) -> LiouvilleField:
    """Construct the stage-one or stage-two interpolated field.

    Stage one: ``Y = (z - z0)/2 + R - X_{f G}`` with ``f`` from
    :func:`make_cutoff` at ``delta1 = delta0 / c2`` and ``G`` from ``R`` by
    line-integral quadrature (``G(z0) = 0``).  Passing ``c > 0`` declares
    that a nonzero perturbation is wanted, in which case ``remainder`` must
    be given (see :func:`synthetic_remainder`).

    Stage two: ``Y = (z - z0)/2 - X_{f G}`` with ``G = (q1 - p1) delta0/(2 sqrt 2)``
    and the slab cutoff of width ``epsilon``.

    ``reflect`` defaults to False for stage one and True for stage two.
    """
    if not delta0 > 0:
        raise ValueError("delta0 must be positive")
    if stage == "one":
        if c and remainder is None:
            raise ValueError(f"stage one with c = {c} needs a synthetic remainder")
        return LiouvilleField("one", params, float(delta0),
                              make_cutoff(delta0 / c2_constant(params)), remainder,
                              bool(reflect))
    if stage == "two":
        if remainder is not None:
            raise ValueError("stage two takes no remainder")
        if epsilon is None:
            raise ValueError("stage two needs the slab width epsilon")
        return LiouvilleField("two", params, float(delta0), slab_cutoff(epsilon), None,
                              True if reflect is None else bool(reflect), float(epsilon))
    raise ValueError(f"unknown stage {stage!r}")


# ---------------------------------------------------------------------------
# Liouville identity
# ---------------------------------------------------------------------------

def liouville_form(Y, z) -> np.ndarray:
    """Coefficients of ``i_Y omega0`` in ``(dq1, dq2, dp1, dp2)``."""
    y = Y(z)
    return np.stack([y[..., 2], y[..., 3], -y[..., 0], -y[..., 1]], axis=-1)


def _jacobian_fd(F, z, h):
    # Dtheta[n, b, a] = d theta_b / d z_a by central differences
    n = z.shape[0]
    out = np.empty((n, 4, 4))
    for a in range(4):
        e = np.zeros(4)
        e[a] = h
        out[:, :, a] = (F(z + e) - F(z - e)) / (2.0 * h)
    return out


def liouville_residual(Y: Callable, z, h: float = 1e-5) -> np.ndarray:
    """Pointwise ``max |d(i_Y omega0) - omega0|`` by Richardson-extrapolated differences."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    F = lambda w: liouville_form(Y, w)
    D1 = _jacobian_fd(F, z, h)
    D2 = _jacobian_fd(F, z, h / 2.0)
    Dth = (4.0 * D2 - D1) / 3.0
    # (d theta)_{ab} = d_a theta_b - d_b theta_a
    dtheta = np.transpose(Dth, (0, 2, 1)) - Dth
    return np.max(np.abs(dtheta - OMEGA0), axis=(1, 2))


def default_step(Y) -> float:
    """``min(1e-5, 1e-3 w)`` with ``w`` the cutoff transition width of ``Y``.

    The interpolated fields vary on the scale ``w``; keeping ``h / w`` small
    keeps the extrapolated truncation error below the roundoff floor.
    """
    cut = getattr(Y, "cutoff", None)
    if cut is None:
        return 1e-5
    return min(1e-5, 1e-3 * (cut.hi - cut.lo))


def verify_liouville_identity(Y: Callable, grid, h: float | None = None) -> float:
    """Max over ``grid`` of :func:`liouville_residual`; step from :func:`default_step`."""
    return float(np.max(liouville_residual(Y, grid, default_step(Y) if h is None else h)))


def ball_grid(radius: float, n: int, rng) -> np.ndarray:
    """``n`` points uniform in the ball of the given radius."""
    g = rng.normal(size=(n, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius * rng.uniform(size=(n, 1)) ** 0.25


# ---------------------------------------------------------------------------
# transversality
# ---------------------------------------------------------------------------

def level_samples(params: NormalFormParams, E: float, n: int, rng, radius: float,
                  slab=None, max_tries: int = 200) -> np.ndarray:
    """Points of ``K = E`` in the ball of ``radius`` with ``q1 + p1`` in ``slab``.

    ``s = q1 + p1`` and ``d = q1 - p1`` are drawn uniformly; ``I2`` follows
    from the level equation and the phase of ``(q2, p2)`` is uniform.
    """
    s_lo, s_hi = slab if slab is not None else (0.0, SQRT2 * radius)
    i1_low = i1_minus(params, E) if E > 0 else -4.0 * radius ** 2
    d_max = np.sqrt(s_hi ** 2 - 4.0 * i1_low) * 1.01
    d_max = min(d_max, SQRT2 * radius)
    out = np.empty((0, 4))
    for _ in range(max_tries):
        m = max(4 * (n - len(out)), 64)
        s = rng.uniform(s_lo, s_hi, m)
        d = rng.uniform(-d_max, d_max, m)
        I1 = 0.25 * (s * s - d * d)
        if params.is_quadratic:
            I2 = (E + params.alpha * I1) / params.omega
        else:
            I2 = np.full(m, -1.0)
            for i in range(m):
                try:
                    I2[i] = i2_of_i1(params, I1[i], E)
                except RuntimeError:
                    pass
        keep = I2 >= 0
        th = rng.uniform(0.0, 2.0 * np.pi, m)
        r = np.sqrt(np.where(keep, 2.0 * I2, 0.0))
        pts = np.column_stack([0.5 * (s + d), r * np.sin(th), 0.5 * (s - d), r * np.cos(th)])
        keep &= np.linalg.norm(pts, axis=1) <= radius
        out = np.vstack([out, pts[keep]])
        if len(out) >= n:
            return out[:n]
    raise SamplingError(f"only {len(out)} of {n} level samples at E={E} in radius {radius}")


@dataclass(frozen=True)
class TransversalityResult:
    min_value: float
    argmin: np.ndarray
    n_samples: int
    min_ratio: float
    lower_bound_ratio: float
    positive: bool


def verify_transversality(Y: LiouvilleField, params: NormalFormParams, E: float,
                          n_samples: int = 10_000, rng=None, radius=None,
                          slab=None, samples=None) -> TransversalityResult:
    """Minimum of ``dK . Y`` over samples of ``K = E`` in ``{q1 + p1 >= 0}``.

    Also reports ``min (dK.Y)/(q1 + p1)`` next to the linear lower-bound
    coefficient ``delta0 alpha/(8 sqrt 2) - (A1 + A3) delta0^2`` (stage one,
    with the nominal constants) so the two can be compared.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    radius = Y.delta0 if radius is None else radius
    z = level_samples(params, E, n_samples, rng, radius, slab) if samples is None else samples
    dK = normal_form_model(params).gradient(z)
    vals = np.sum(dK * Y(z), axis=-1)
    s = z[:, 0] + z[:, 2]
    pos = s > 0
    ratio = float(np.min(vals[pos] / s[pos])) if np.any(pos) else float("nan")
    i = int(np.argmin(vals))
    c = getattr(Y.remainder, "c", 0.0) if Y.remainder is not None else 0.0
    consts = lemma_constants(params, Y.delta0, c, c0=1.0)
    return TransversalityResult(float(vals[i]), z[i].copy(), len(z), ratio,
                                consts["linear_margin"], bool(vals[i] > 0))


def measure_c0(params: NormalFormParams, radius: float, n: int = 4000, rng=None) -> float:
    """``sup |dK(z)| / |z|`` over the ball, estimated by sampling."""
    rng = np.random.default_rng(1) if rng is None else rng
    z = ball_grid(radius, n, rng)
    z = z[np.linalg.norm(z, axis=1) > 0]
    g = normal_form_model(params).gradient(z)
    return float(np.max(np.linalg.norm(g, axis=1) / np.linalg.norm(z, axis=1)))


def lemma_constants(params: NormalFormParams, delta0: float, c: float, c0: float) -> dict:
    """``A1 = 24 c0 c c2``, ``A3 = 768 c c2^2 alpha`` and the linear margin."""
    c2 = c2_constant(params)
    A1 = 24.0 * c0 * c * c2
    A3 = 768.0 * c * c2 ** 2 * params.alpha
    lead = delta0 * params.alpha / (8.0 * SQRT2)
    return {"c0": c0, "c2": c2, "A1": A1, "A3": A3, "lead": lead,
            "linear_margin": lead - (A1 + A3) * delta0 ** 2}


def certify_lemma_bounds(Y: LiouvilleField, samples, c0: float | None = None) -> dict:
    """Check the three term bounds of the stage-one decomposition on samples.

    Margins are ``1 - max(|term| / bound)`` for the two error terms and
    ``min(term / bound) - 1`` for the radial term; all positive on success.
    Also returns the decomposition residual against the direct evaluation.
    """
    if Y.stage != "one":
        raise ValueError("lemma bounds concern the stage-one field")
    z = np.atleast_2d(np.asarray(samples, dtype=float))
    z = z[z[:, 0] + z[:, 2] > 0]
    params, d0 = Y.params, Y.delta0
    c = getattr(Y.remainder, "c", 0.0) if Y.remainder is not None else 0.0
    if c0 is None:
        c0 = measure_c0(params, d0)
    k = lemma_constants(params, d0, c, c0)
    s = z[:, 0] + z[:, 2]
    t = Y.terms(z)
    direct = np.sum(normal_form_model(params).gradient(z) * Y(z), axis=-1)
    decomposition = float(np.max(np.abs(t["remainder"] + t["radial"] + t["cutoff"] - direct)))

    def ratio_margin(term, A):
        if A == 0:
            return 1.0 if np.all(term == 0) else -np.inf
        return float(1.0 - np.max(np.abs(term) / (A * d0 ** 2 * s)))

    radial_bound = s * d0 * params.alpha / (8.0 * SQRT2)
    return {
        **k,
        "n_samples": int(len(z)),
        "remainder_margin": ratio_margin(t["remainder"], k["A1"]),
        "radial_margin": float(np.min(t["radial"] / radial_bound) - 1.0),
        "cutoff_margin": ratio_margin(t["cutoff"], k["A3"]),
        "decomposition_residual": decomposition,
    }


def stage_two_energy(params: NormalFormParams, delta0: float, fraction: float = 0.5) -> float:
    """An energy whose boundary circle set ``{q1 + p1 = 0} n K = E`` lies in ``B_{delta2}``.

    For the quadratic normal form ``|z|^2 <= 2E / min(alpha, omega)`` there,
    so ``E = fraction * min(alpha, omega) delta2^2 / 2`` works for ``fraction < 1``.
    """
    d2 = delta0 / c2_constant(params) / 6.0
    return fraction * min(params.alpha, params.omega) * d2 ** 2 / 2.0


def scan_epsilon(params: NormalFormParams, E_bar: float, delta0: float,
                 energy_window: float = 0.1, n: int = 2000, n_levels: int = 5,
                 candidates=None, rng=None) -> float:
    """Largest slab width ``epsilon`` whose slab lies in the validated region.

    The region is ``B_{delta2}`` intersected with ``{-alpha_bar I1 + omega_bar I2 > 0}``,
    tested on samples of ``K = E`` for ``E`` within ``energy_window * E_bar`` of ``E_bar``.
    """
    rng = np.random.default_rng(2) if rng is None else rng
    d2 = delta0 / c2_constant(params) / 6.0
    if candidates is None:
        candidates = d2 * np.geomspace(1.0, 1e-3, 61)
    energies = E_bar * np.linspace(1 - energy_window, 1 + energy_window, n_levels)
    for eps in sorted(candidates, reverse=True):
        ok = True
        for E in energies:
            try:
                z = level_samples(params, E, n, rng, radius=4.0 * d2, slab=(0.0, eps))
            except SamplingError:
                ok = False
                break
            I1, I2 = actions(z)
            q = -params.alpha_bar(I1, I2) * I1 + params.omega_bar(I1, I2) * I2
            if np.any(np.linalg.norm(z, axis=1) >= d2) or np.any(q <= 0):
                ok = False
                break
        if ok:
            return float(eps)
    raise SamplingError("no admissible epsilon found")


def reflection_residual(Y: LiouvilleField, z) -> float:
    """``max |Y(z) - T Y(T z)|`` over the given points."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return float(np.max(np.abs(Y(z) - Y(z * _T_DIAG) * _T_DIAG)))


def certify_liouville(params: NormalFormParams, delta0: float = 0.05,
                      energies=(1e-5, 1e-4), cs=(0.0, 0.5), n: int = 10_000,
                      seed: int = 0) -> dict:
    """Run the identity, transversality and lemma checks; returns a plain dict."""
    rng = np.random.default_rng(seed)
    report = {"delta0": delta0, "c2": c2_constant(params), "stage_one": [], "n": n}
    grid = ball_grid(delta0, n, rng)
    for c in cs:
        R = synthetic_remainder(delta0, c) if c else None
        Y = build_field(params, "one", delta0, R, c=c)
        entry = {"c": c, "liouville_residual": verify_liouville_identity(Y, grid),
                 "reflection_residual": reflection_residual(Y, grid), "levels": []}
        for E in energies:
            z = level_samples(params, E, n, rng, delta0)
            tr = verify_transversality(Y, params, E, samples=z)
            entry["levels"].append({"E": E, "min_dKY": tr.min_value,
                                    "argmin": tr.argmin.tolist(),
                                    "min_ratio": tr.min_ratio, "positive": tr.positive,
                                    "lemmas": certify_lemma_bounds(Y, z)})
        report["stage_one"].append(entry)
    E_bar = stage_two_energy(params, delta0)
    eps = scan_epsilon(params, E_bar, delta0, rng=rng)
    Y2 = build_field(params, "two", delta0, epsilon=eps)
    z2 = level_samples(params, E_bar, n, rng, delta0, slab=(0.0, eps))
    tr2 = verify_transversality(Y2, params, E_bar, samples=z2)
    report["stage_two"] = {
        "E_bar": E_bar, "epsilon": eps,
        "liouville_residual": verify_liouville_identity(Y2, ball_grid(Y2.delta2, n, rng)),
        "min_dKY": tr2.min_value, "argmin": tr2.argmin.tolist(), "positive": tr2.positive,
    }
    report["ok"] = bool(
        all(e["liouville_residual"] < 1e-6 and all(l["positive"] for l in e["levels"])
            for e in report["stage_one"])
        and report["stage_two"]["positive"] and report["stage_two"]["liouville_residual"] < 1e-6)
    return report
