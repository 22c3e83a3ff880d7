"""Explicit finite-energy planes asymptotic to the Lyapunov orbit.

In the normal-form chart the planes are ``u(s, t) = (-h, f cos 2 pi t, h, -f sin 2 pi t)``
with ``f`` fixed by the level ``K(-h^2, f^2/2) = E`` and ``h`` solving the
scalar equation

    h' = -2 pi abar wbar h f^2 / (wbar^2 f^2 + 2 abar^2 h^2),

where ``abar, wbar`` are evaluated at ``(I1, I2) = (-h^2, f^2/2)``, node by
node.  The symplectization coordinate is ``a(s) = pi int_0^s f^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .models import (NormalFormParams, actions, i1_minus, i2_of_i1,
                     normal_form_model)
from .frame_index import QUATERNIONS

BRANCHES = ("positive_h", "negative_h")


class ProfileError(RuntimeError):
    pass


def h_star(params: NormalFormParams, E: float) -> float:
    """``sqrt(-I1^-(E))``: the value of ``|h|`` at which ``f`` vanishes."""
    return float(np.sqrt(-i1_minus(params, E)))


def r_E(params: NormalFormParams, E: float) -> float:
    """Radius of the Lyapunov orbit, ``sqrt(2 I2(0, E))``."""
    return float(np.sqrt(2.0 * i2_of_i1(params, 0.0, E)))


def _level_i2(params: NormalFormParams, I1m: float, dI1, maxiter: int = 60):
    """``I2`` on ``K = E`` at ``I1 = I1m + dI1``, where ``K(I1m, 0) = E``.

    The level equation is written as ``K(I1, I2) - K(I1m, 0) = 0`` with the
    ``I2``-free monomials differenced analytically, so ``I2`` keeps full
    relative precision as ``dI1 -> 0``.
    """
    dI1 = np.asarray(dI1, dtype=float)
    I1 = I1m + dI1
    base = -params.alpha * dI1
    for (i, j), c in params.remainder.items():
        if j == 0:
            # c (I1^i - I1m^i) = c dI1 sum_k I1^k I1m^(i-1-k)
            base = base + c * dI1 * sum(I1 ** k * I1m ** (i - 1 - k) for k in range(i))
    I2 = params.alpha * dI1 / params.omega
    if params.is_quadratic:
        return I2
    for _ in range(maxiter):
        F = base + params.omega * I2
        for (i, j), c in params.remainder.items():
            if j > 0:
                F = F + c * I1 ** i * I2 ** j
        step = F / params.K_I2(I1, I2)
        I2 = I2 - step
        if np.all(np.abs(step) <= 1e-15 * np.abs(I2) + 1e-300):
            return I2
    raise ProfileError("level equation for f^2 did not converge")


def f_squared(params: NormalFormParams, E: float, h, hs: float | None = None,
              gap=None):
    """``f^2 = 2 I2(-h^2, E)``.

    ``gap = h* - |h|`` may be passed to avoid cancellation near the
    degenerate end; then ``I1 - I1^- = gap (2 h* - gap)`` exactly.
    """
    h = np.abs(np.asarray(h, dtype=float))
    hs = h_star(params, E) if hs is None else hs
    g = hs - h if gap is None else np.asarray(gap, dtype=float)
    out = 2.0 * _level_i2(params, -hs * hs, g * (2.0 * hs - g))
    return out if np.ndim(out) else float(out)


def _rates(params, h, f2):
    I1, I2 = -h * h, 0.5 * f2
    return params.alpha_bar(I1, I2), params.omega_bar(I1, I2)


def rhs_G(h: float, params: NormalFormParams, E: float) -> float:
    """The right-hand side ``G(h)`` of the profile equation."""
    hs = h_star(params, E)
    if abs(h) > hs * (1.0 + 1e-12):
        raise ValueError(f"|h| = {abs(h)} exceeds h* = {hs}")
    h = float(np.clip(h, -hs, hs))
    f2 = max(float(f_squared(params, E, h, hs)), 0.0)
    ab, wb = _rates(params, h, f2)
    den = wb * wb * f2 + 2.0 * ab * ab * h * h
    if den == 0.0:
        return 0.0
    return float(-2.0 * np.pi * ab * wb * h * f2 / den)


@dataclass
class PlaneProfile:
    """Solution of the profile equation on an adaptive ``s`` grid."""

    s: np.ndarray
    h: np.ndarray
    f: np.ndarray
    a: np.ndarray
    direction: str
    h_star: float
    r_E: float
    T2E: float
    params: NormalFormParams
    E: float
    dense: Callable = field(default=None, repr=False)

    def at(self, s) -> tuple:
        """``(h, f, a)`` at arbitrary ``s`` inside the solved range."""
        s = np.asarray(s, dtype=float)
        x, a = self.dense(s)
        hp, gap = _from_logit(x, self.h_star)
        f = np.sqrt(np.maximum(f_squared(self.params, self.E, hp, self.h_star, gap), 0.0))
        sign = 1.0 if self.direction == "positive_h" else -1.0
        return sign * hp, f, a

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.s, self.h, self.f, self.a]),
                   delimiter=",", header="s,h,f,a", comments="")


def _from_logit(x, hs):
    # h = hs sigma(x) and hs - h = hs sigma(-x), both without cancellation
    x = np.asarray(x, dtype=float)
    return hs / (1.0 + np.exp(-x)), hs / (1.0 + np.exp(x))


def _logit_rhs(params, E, hs, rhs):
    # x = log(h / (h* - h)); x' = h' h* / (h (h* - h)) stays bounded at both ends
    def fun(s, y):
        h, gap = _from_logit(y[0], hs)
        f2 = max(float(f_squared(params, E, h, hs, gap)), 0.0)
        if rhs is None:
            ab, wb = _rates(params, h, f2)
            # G / (h (h* - h)) with f^2 / (h* - h) taken analytically when possible
            den = wb * wb * f2 + 2.0 * ab * ab * h * h
            if params.is_quadratic:
                f2_over_gap = 2.0 * params.alpha * (hs + h) / params.omega
            else:
                f2_over_gap = f2 / gap if gap > 0 else 0.0
            xdot = -2.0 * np.pi * ab * wb * f2_over_gap * hs / den
        else:
            xdot = rhs(h, params, E) * hs / (h * gap)
        return [xdot, np.pi * f2]
    return fun


def solve_profile(params: NormalFormParams, E: float, h0: float,
                  s_range=None, direction: str = "positive_h",
                  rtol: float = 1e-12, atol: float = 1e-14,
                  tol_plus: float = 1e-6, tol_minus: float = 1e-6,
                  rhs: Callable | None = None, check_limits: bool = True) -> PlaneProfile:
    """Integrate the profile equation from ``h(0) = h0`` over ``s_range``.

    ``h0`` is the magnitude ``|h(0)|``; ``direction`` picks the sign of ``h``.
    The default ``s_range`` is ``(-3, 4 max(1, wbar/abar))``: ``h`` decays like
    ``exp(-2 pi abar s / wbar)`` at the positive end and ``h* - |h|`` like
    ``exp(4 pi s)`` at the negative end.
    A custom ``rhs(h, params, E)`` replaces :func:`rhs_G` (used for negative
    controls).  With ``check_limits`` the terminal values must satisfy
    ``|h(s_max)| < tol_plus`` and ``|h* - |h(s_min)|| < tol_minus``.
    """
    if direction not in BRANCHES:
        raise ValueError(f"direction must be one of {BRANCHES}")
    hs = h_star(params, E)
    if not 0.0 < h0 < hs:
        raise ValueError(f"h0 must lie in (0, h*) = (0, {hs})")
    if s_range is None:
        I2 = 0.5 * r_E(params, E) ** 2
        s_range = (-3.0, 4.0 * max(1.0, params.omega_bar(0.0, I2) / params.alpha_bar(0.0, I2)))
    s_min, s_max = map(float, s_range)
    if not s_min < 0.0 < s_max:
        raise ValueError("s_range must contain 0 in its interior")
    fun = _logit_rhs(params, E, hs, rhs)
    x0 = np.log(h0 / (hs - h0))
    y0 = [x0, 0.0]
    pieces = []
    for end in (s_min, s_max):
        sol = solve_ivp(fun, (0.0, end), y0, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True)
        if sol.status != 0:
            raise ProfileError(f"profile integration stalled: {sol.message}")
        pieces.append(sol)
    back, fwd = pieces
    s = np.concatenate([back.t[::-1], fwd.t[1:]])
    y = np.concatenate([back.y[:, ::-1], fwd.y[:, 1:]], axis=1)

    def dense(t, back=back.sol, fwd=fwd.sol):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0.0, back(t), fwd(t))

    hp, gap = _from_logit(y[0], hs)
    f = np.sqrt(np.maximum(f_squared(params, E, hp, hs, gap), 0.0))
    sign = 1.0 if direction == "positive_h" else -1.0
    rE = r_E(params, E)
    prof = PlaneProfile(s, sign * hp, f, y[1], direction, hs, rE, np.pi * rE * rE,
                        params, float(E), dense)
    if check_limits:
        if not hp[-1] < tol_plus:
            raise ProfileError(f"|h(s_max)| = {hp[-1]:.3e} has not reached 0; extend s_max")
        if not gap[0] < tol_minus:
            raise ProfileError(f"h* - |h(s_min)| = {gap[0]:.3e}; extend s_min")
        # monotonicity is tested on the logit coordinate: |h| itself rounds
        # to h* in double precision well before s_min
        if np.any(np.diff(y[0]) >= 0):
            raise ProfileError("|h| is not strictly decreasing")
    return prof


def assemble_plane(profile: PlaneProfile, t_samples=256, s=None) -> dict:
    """Samples of ``u(s, t)`` on ``s`` (default: the profile grid) times ``t``.

    ``t_samples`` is a count (uniform on ``[0, 1)``) or an explicit array.
    Returns ``{"s", "t", "u"}`` with ``u`` of shape ``(len(s), len(t), 4)``.
    """
    t = (np.arange(t_samples) / t_samples if np.isscalar(t_samples)
         else np.asarray(t_samples, dtype=float))
    if s is None:
        s, h, f = profile.s, profile.h, profile.f
    else:
        s = np.asarray(s, dtype=float)
        h, f, _ = profile.at(s)
    c, sn = np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)
    u = np.empty((len(s), len(t), 4))
    u[..., 0] = -h[:, None]
    u[..., 1] = f[:, None] * c
    u[..., 2] = h[:, None]
    u[..., 3] = -f[:, None] * sn
    return {"s": s, "t": t, "u": u}


def verify_on_level(plane, params: NormalFormParams, E: float) -> float:
    """``max |K(u) - E|`` over the samples."""
    u = plane["u"] if isinstance(plane, dict) else np.asarray(plane)
    I1, I2 = actions(u.reshape(-1, 4))
    return float(np.max(np.abs(params.K(I1, I2) - E)))


# ---------------------------------------------------------------------------
# Cauchy-Riemann system
# ---------------------------------------------------------------------------

def contact_form(z, v):
    """``lambda(v) = (1/2) sum p_i v_{q_i} - q_i v_{p_i}`` at ``z``."""
    return 0.5 * (z[..., 2] * v[..., 0] + z[..., 3] * v[..., 1]
                  - z[..., 0] * v[..., 2] - z[..., 1] * v[..., 3])


def reeb_field(params: NormalFormParams, z):
    """``X_K / (-abar I1 + wbar I2)``."""
    I1, I2 = actions(z)
    ab, wb = params.alpha_bar(I1, I2), params.omega_bar(I1, I2)
    X = np.stack([-ab * z[..., 0], wb * z[..., 3], ab * z[..., 2], -wb * z[..., 1]], axis=-1)
    return X / (-ab * I1 + wb * I2)[..., None]


def contact_projection(params: NormalFormParams, z, v):
    """``pi v = v - lambda(v) X_lambda``: projection onto the contact plane."""
    return v - contact_form(z, v)[..., None] * reeb_field(params, z)


def xi_basis(params: NormalFormParams, z) -> tuple:
    """``(e1bar, e2bar) = pi(j_1 grad K), pi(j_2 grad K)`` at ``z``."""
    g = normal_form_model(params).gradient(z)
    e1 = g @ QUATERNIONS[1].T
    e2 = g @ QUATERNIONS[2].T
    return contact_projection(params, z, e1), contact_projection(params, z, e2)


def xi_basis_boundary(params: NormalFormParams, z) -> tuple:
    """Closed-form ``(e1bar, e2bar)`` valid on ``{q1 + p1 = 0}``.

    With ``p1 = -q1``, ``k_a = q1 (q2 +- p2)(wbar - abar) / (2 (abar I1 - wbar I2))``
    and ``V = (-abar q1, wbar p2, -abar q1, -wbar q2)``:
    ``e1bar = (wbar p2, abar q1, wbar q2, -abar q1) - k_+ V`` and
    ``e2bar = (wbar q2, -abar q1, -wbar p2, -abar q1) - k_- V``.
    """
    q1, q2, p2 = z[..., 0], z[..., 1], z[..., 3]
    I1, I2 = actions(z)
    ab, wb = params.alpha_bar(I1, I2), params.omega_bar(I1, I2)
    V = np.stack([-ab * q1, wb * p2, -ab * q1, -wb * q2], axis=-1)
    k = 0.5 * q1 * (wb - ab) / (ab * I1 - wb * I2)
    e1 = np.stack([wb * p2, ab * q1, wb * q2, -ab * q1], axis=-1) - (k * (q2 + p2))[..., None] * V
    e2 = np.stack([wb * q2, -ab * q1, -wb * p2, -ab * q1], axis=-1) - (k * (q2 - p2))[..., None] * V
    return e1, e2


def apply_J(params: NormalFormParams, z, v, basis: Callable = xi_basis):
    """``J_E v`` for ``v`` in the contact plane, with ``J e1bar = e2bar``."""
    b1, b2 = basis(params, z)
    # coordinates of v in (b1, b2) by 2x2 normal equations
    g11 = np.sum(b1 * b1, axis=-1)
    g12 = np.sum(b1 * b2, axis=-1)
    g22 = np.sum(b2 * b2, axis=-1)
    r1 = np.sum(b1 * v, axis=-1)
    r2 = np.sum(b2 * v, axis=-1)
    det = g11 * g22 - g12 * g12
    c1 = (g22 * r1 - g12 * r2) / det
    c2 = (g11 * r2 - g12 * r1) / det
    return c1[..., None] * b2 - c2[..., None] * b1


def _spectral_t_derivative(u, order=1):
    # u sampled on a uniform periodic t grid along axis 1
    n = u.shape[1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0 and order % 2 == 1:
        k[n // 2] = 0.0
    mult = (2j * np.pi * k) ** order
    return np.real(np.fft.ifft(np.fft.fft(u, axis=1) * mult[None, :, None], axis=1))


@dataclass(frozen=True)
class CRResult:
    residual: float
    laplacian_residual: float
    ds: float
    n_t: int
    s_window: tuple


def verify_cr_equation(profile: PlaneProfile, ds: float = 1e-3, n_t: int = 256,
                       s_window=(-0.5, 2.0), params=None, E=None) -> CRResult:
    """Residuals of both equations of the Cauchy-Riemann system on ``u``.

    ``u`` is sampled on a uniform ``s`` grid of spacing ``ds`` inside
    ``s_window``; ``u_s`` and ``u_ss`` are second-order central differences,
    ``u_t`` and ``u_tt`` spectral.  ``J_E`` comes from the closed-form
    boundary basis :func:`xi_basis_boundary`.  Reports ``max |pi u_s + J pi u_t|`` and
    ``max |q1 Lap p1 - p1 Lap q1 + q2 Lap p2 - p2 Lap q2| / 2``.
    """
    params = profile.params if params is None else params
    E = profile.E if E is None else E
    lo, hi = s_window
    if not (profile.s[0] < lo - ds and hi + ds < profile.s[-1]):
        raise ValueError("s_window must lie inside the solved range")
    f_lo = profile.at(lo)[1]
    if f_lo < 1e-3 * profile.r_E:
        raise ValueError("s_window reaches too close to the degenerate end (f ~ 0)")
    n_s = int(round((hi - lo) / ds)) + 1
    s = lo + ds * np.arange(-1, n_s + 1)
    u = assemble_plane(profile, n_t, s)["u"]
    us = (u[2:] - u[:-2]) / (2.0 * ds)
    uss = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / ds ** 2
    ui = u[1:-1]
    ut = _spectral_t_derivative(ui, 1)
    utt = _spectral_t_derivative(ui, 2)
    pus = contact_projection(params, ui, us)
    put = contact_projection(params, ui, ut)
    res = pus + apply_J(params, ui, put, xi_basis_boundary)
    lap = uss + utt
    q1, q2, p1, p2 = (ui[..., k] for k in range(4))
    L = 0.5 * (q1 * lap[..., 2] - p1 * lap[..., 0] + q2 * lap[..., 3] - p2 * lap[..., 1])
    return CRResult(float(np.max(np.linalg.norm(res, axis=-1))), float(np.max(np.abs(L))),
                    ds, n_t, (lo, hi))


# ---------------------------------------------------------------------------
# hemispheres and energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HemisphereResult:
    min_rate: float
    signs_correct: bool
    n_upper: int
    n_lower: int


def hemisphere_samples(params: NormalFormParams, E: float, n: int, rng,
                       min_h: float = 1e-6) -> np.ndarray:
    """Points of ``{q1 + p1 = 0} n K^{-1}(E)`` with ``|q1| >= min_h``, both hemispheres."""
    hs = h_star(params, E)
    h = rng.uniform(min_h, hs, n) * rng.choice([-1.0, 1.0], n)
    f = np.sqrt(np.maximum(f_squared(params, E, h, hs), 0.0))
    t = rng.uniform(0.0, 1.0, n)
    return np.column_stack([-h, f * np.cos(2 * np.pi * t), h, -f * np.sin(2 * np.pi * t)])


def crossing_rate(params: NormalFormParams, z):
    """``d(q1 + p1)/dt = abar (p1 - q1)`` along the Hamiltonian flow."""
    I1, I2 = actions(z)
    return params.alpha_bar(I1, I2) * (z[..., 2] - z[..., 0])


def hemisphere_transversality(params: NormalFormParams, E: float, n_samples: int = 1000,
                              rng=None, samples=None) -> HemisphereResult:
    """Sign of the crossing rate on ``U1 = {q1 < 0}`` (inward, > 0) and ``U2`` (< 0)."""
    rng = np.random.default_rng(0) if rng is None else rng
    z = hemisphere_samples(params, E, n_samples, rng) if samples is None else np.asarray(samples)
    upper = z[:, 0] < 0
    lower = z[:, 0] > 0
    rate = crossing_rate(params, z)
    ok = bool(np.all(rate[upper] > 0) and np.all(rate[lower] < 0))
    used = upper | lower
    return HemisphereResult(float(np.min(np.abs(rate[used]))), ok,
                            int(upper.sum()), int(lower.sum()))


def plane_energy(profile: PlaneProfile, tol: float = 1e-9) -> float:
    """``lim pi f(s)^2`` at the positive end; needs a converged profile."""
    val = float(np.pi * profile.f[-1] ** 2)
    if abs(val - profile.T2E) > tol * max(1.0, profile.T2E):
        raise ProfileError(f"profile not converged at s_max: pi f^2 = {val}, "
                           f"pi r_E^2 = {profile.T2E}")
    return val


def asymptotic_slope(profile: PlaneProfile, fraction: float = 0.1) -> float:
    """Least-squares slope of ``a(s)`` over the last ``fraction`` of the ``s`` range."""
    s0 = profile.s[-1] - fraction * (profile.s[-1] - profile.s[0])
    s = np.linspace(s0, profile.s[-1], 200)
    a = profile.at(s)[2]
    return float(np.polyfit(s, a, 1)[0])
