"""Integration of the Hamiltonian flow, its linearization, and section crossings."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .models import J4, HamiltonianModel, as_array


class IntegrationError(RuntimeError):
    pass


class SymplecticResidualError(IntegrationError):
    pass


class RootPolishError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``method`` is ``"adaptive_high_order"`` (an embedded 8(5,3) Runge-Kutta
    pair) or ``"fixed_rk4"`` with step ``max_step``.
    """

    method: str = "adaptive_high_order"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_step: float = np.inf
    symplectic_residual_tol: float = 1e-8
    rk4_step: float = 1e-3

    def __post_init__(self):
        if self.method not in ("adaptive_high_order", "fixed_rk4"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_step > 0
                and self.symplectic_residual_tol > 0 and self.rk4_step > 0):
            raise ValueError("tolerances and steps must be positive")


DEFAULT_CONFIG = IntegratorConfig()


class _HermiteDense:
    """Piecewise cubic Hermite interpolant through RK4 nodes."""

    def __init__(self, t, y, dy):
        self.t, self.y, self.dy = np.asarray(t), np.asarray(y), np.asarray(dy)
        self._desc = len(self.t) > 1 and self.t[-1] < self.t[0]

    def __call__(self, tq):
        tq = np.asarray(tq, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        ts = -self.t if self._desc else self.t
        keys = -tq if self._desc else tq
        i = np.clip(np.searchsorted(ts, keys) - 1, 0, len(ts) - 2)
        t0, t1 = self.t[i], self.t[i + 1]
        h = t1 - t0
        s = (tq - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        out = (h00 * self.y[:, i] + h10 * h * self.dy[:, i]
               + h01 * self.y[:, i + 1] + h11 * h * self.dy[:, i + 1])
        return out[:, 0] if scalar else out


@dataclass
class Trajectory:
    """Solution of the flow on the solver's step grid, with dense output.

    ``states`` has shape ``(n, 4)``; ``variational`` (if present) has shape
    ``(n, 4, 4)`` and holds the fundamental matrices ``D psi_t``.
    """

    model: HamiltonianModel
    times: np.ndarray
    states: np.ndarray
    energy: float
    max_energy_drift: float
    dense: object = field(repr=False, default=None)
    variational: np.ndarray | None = None
    drift_flagged: bool = False
    config: IntegratorConfig = DEFAULT_CONFIG

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t1(self):
        return float(self.times[-1])

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        if self.dense is None:
            if np.any(t != self.t0):
                raise ValueError("zero-length trajectory only has its initial state")
            y = np.concatenate([self.states[0], [] if self.variational is None
                                else self.variational[0].ravel()])
            return y if t.ndim == 0 else np.repeat(y[:, None], t.size, axis=1)
        return self.dense(t)

    def state_at(self, t) -> np.ndarray:
        """State(s) at time(s) ``t``: shape ``(4,)`` or ``(len(t), 4)``."""
        y = self._eval(t)
        return y[:4] if np.ndim(t) == 0 else y[:4].T

    def variational_at(self, t) -> np.ndarray:
        if self.variational is None:
            raise ValueError("trajectory has no variational data")
        y = self._eval(t)
        if np.ndim(t) == 0:
            return y[4:].reshape(4, 4)
        return y[4:].T.reshape(-1, 4, 4)

    def sample(self, n: int) -> tuple:
        """``n`` equally spaced times and the states there."""
        ts = np.linspace(self.t0, self.t1, n)
        return ts, self.state_at(ts)


def _rhs_factory(model: HamiltonianModel, variational: bool):
    grad, hess = model.gradient, model.hessian
    if not variational:
        def rhs(t, y):
            return J4 @ grad(y)
        return rhs

    def rhs(t, y):
        z = y[:4]
        phi = y[4:].reshape(4, 4)
        out = np.empty(20)
        out[:4] = J4 @ grad(z)
        out[4:] = (J4 @ hess(z) @ phi).ravel()
        return out
    return rhs


def _rk4(rhs, t_span, y0, step):
    t0, t1 = t_span
    n = max(1, int(np.ceil(abs(t1 - t0) / step - 1e-12)))
    ts = np.linspace(t0, t1, n + 1)
    ys = np.empty((len(y0), n + 1))
    dys = np.empty_like(ys)
    y = np.array(y0, dtype=float)
    for i in range(n):
        h = ts[i + 1] - ts[i]
        k1 = rhs(ts[i], y)
        k2 = rhs(ts[i] + h / 2, y + h / 2 * k1)
        k3 = rhs(ts[i] + h / 2, y + h / 2 * k2)
        k4 = rhs(ts[i] + h, y + h * k3)
        ys[:, i], dys[:, i] = y, k1
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    ys[:, n], dys[:, n] = y, rhs(ts[n], y)
    return ts, ys, _HermiteDense(ts, ys, dys)


def symplectic_residual(phi: np.ndarray) -> float:
    """``max |phi^T J phi - J|`` over all entries (and all matrices if stacked)."""
    phi = np.asarray(phi)
    r = np.einsum("...ji,jk,...kl->...il", phi, J4, phi) - J4
    return float(np.abs(r).max())


def _run(model, z0, t_span, cfg, variational):
    z0 = as_array(z0, model.chart).astype(float)
    if z0.shape != (4,) or not np.all(np.isfinite(z0)):
        raise ValueError(f"initial state must be 4 finite numbers, got {z0}")
    t0, t1 = (float(t_span[0]), float(t_span[1]))
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise ValueError("time span must be finite")
    y0 = np.concatenate([z0, np.eye(4).ravel()]) if variational else z0
    energy = float(model.value(z0))
    if t0 == t1:
        var = np.eye(4)[None] if variational else None
        return Trajectory(model, np.array([t0]), z0[None].copy(), energy, 0.0,
                          None, var, False, cfg)
    rhs = _rhs_factory(model, variational)
    if cfg.method == "fixed_rk4":
        ts, ys, dense = _rk4(rhs, (t0, t1), y0, min(cfg.rk4_step, cfg.max_step))
    else:
        sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=cfg.rel_tol,
                        atol=cfg.abs_tol, max_step=cfg.max_step, dense_output=True)
        if sol.status != 0:
            where = sol.y[:4, -1] if sol.y.size else z0
            raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else t0}, "
                                   f"state {where}: {sol.message}")
        ts, ys, dense = sol.t, sol.y, sol.sol
    if not np.all(np.isfinite(ys)):
        raise IntegrationError("non-finite state encountered")
    states = ys[:4].T.copy()
    drift = float(np.abs(model.value(states) - energy).max())
    flagged = drift > 10 * cfg.rel_tol * max(abs(t1 - t0), 1.0) * max(1.0, abs(energy))
    var = None
    if variational:
        var = ys[4:].T.reshape(-1, 4, 4).copy()
        res = symplectic_residual(var)
        if res > cfg.symplectic_residual_tol:
            raise SymplecticResidualError(
                f"symplectic residual {res:.3e} exceeds {cfg.symplectic_residual_tol:.1e}")
    return Trajectory(model, ts.copy(), states, energy, drift, dense, var, flagged, cfg)


def integrate(model: HamiltonianModel, z0, t_span, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integrate ``w' = X_H(w)`` over ``t_span`` (which may run backwards)."""
    return _run(model, z0, t_span, cfg, variational=False)


def integrate_variational(model: HamiltonianModel, z0, t_span,
                          cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integrate the flow jointly with ``Phi' = J Hess H(w) Phi``, ``Phi(0) = I``."""
    return _run(model, z0, t_span, cfg, variational=True)


def flow_map(model, z0, t, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``psi_t(z0)``."""
    return integrate(model, z0, (0.0, t), cfg).states[-1]


# ---------------------------------------------------------------------------
# section crossings
# ---------------------------------------------------------------------------

def _g_of_t(traj, g):
    return lambda t: float(g(traj.state_at(t)))


def _polish(gt, a, b, ga, gb, tol, span):
    # bisection down to a small bracket, then Newton kept inside the bracket
    while abs(b - a) > 1e-6 * span:
        m = 0.5 * (a + b)
        gm = gt(m)
        if gm == 0:
            return m
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            b, gb = m, gm
    t, gv = (a, ga) if abs(ga) < abs(gb) else (b, gb)
    h = 1e-3 * abs(b - a)
    for _ in range(60):
        if abs(gv) < tol:
            return t
        d = (gt(t + h) - gt(t - h)) / (2 * h)
        tn = t - gv / d if d != 0 else 0.5 * (a + b)
        if not min(a, b) <= tn <= max(a, b):
            tn = 0.5 * (a + b)
        gn = gt(tn)
        if np.sign(gn) == np.sign(ga):
            a, ga = tn, gn
        else:
            b, gb = tn, gn
        t, gv = tn, gn
        h = max(min(h, 0.5 * abs(b - a)), 1e-15 * max(1.0, abs(t)))
    if abs(gv) < tol:
        return t
    raise RootPolishError(f"crossing polish stalled at t={t} with g={gv:.3e}")


def event_crossing(traj: Trajectory, g, direction: str = "both", tol: float = 1e-11,
                   subdivisions: int = 8) -> list:
    """Crossings of ``g(state) = 0`` along ``traj``.

    ``g`` maps a 4-array to a scalar.  ``direction`` is ``"+"`` (g increasing),
    ``"-"`` or ``"both"``.  Returns ``[(t, state), ...]`` in trajectory order.
    """
    if direction not in ("+", "-", "both"):
        raise ValueError("direction must be '+', '-' or 'both'")
    if traj.dense is None or len(traj.times) < 2:
        return []
    gt = _g_of_t(traj, g)
    nodes = [traj.times[0]]
    for a, b in zip(traj.times[:-1], traj.times[1:]):
        nodes.extend(np.linspace(a, b, subdivisions + 1)[1:])
    ts = np.array(nodes)
    states = traj.state_at(ts)
    gs = np.array([float(g(s)) for s in states])
    span = abs(traj.t1 - traj.t0)
    out = []

    def wanted(slope):
        return direction == "both" or (direction == "+" and slope > 0) or \
            (direction == "-" and slope < 0)

    for i in range(len(ts)):
        if gs[i] == 0.0:
            j0, j1 = max(i - 1, 0), min(i + 1, len(ts) - 1)
            slope = (gs[j1] - gs[j0]) / (ts[j1] - ts[j0])
            if traj.t1 < traj.t0:
                slope = -slope
            if wanted(slope):
                out.append((float(ts[i]), states[i]))
            continue
        if i + 1 < len(ts) and gs[i + 1] != 0.0 and gs[i] * gs[i + 1] < 0:
            slope = (gs[i + 1] - gs[i]) / (ts[i + 1] - ts[i])
            if traj.t1 < traj.t0:
                slope = -slope
            if not wanted(slope):
                continue
            t = _polish(gt, ts[i], ts[i + 1], gs[i], gs[i + 1], tol, span)
            out.append((float(t), traj.state_at(t)))
    return out


def first_crossing(model, z0, g, direction, t_max, cfg: IntegratorConfig = DEFAULT_CONFIG,
                   t_min: float = 0.0, chunk: float | None = None, variational: bool = False):
    """Integrate from ``z0`` until the first crossing of ``g = 0`` after ``t_min``.

    Returns ``(t, state, trajectory)`` or ``None`` when no crossing happens
    before ``t_max``.  The trajectory is truncated at the crossing.
    """
    sign = 1.0 if t_max >= 0 else -1.0
    chunk = chunk or abs(t_max)
    t0, z = 0.0, as_array(z0, model.chart)
    phi = np.eye(4)
    while sign * t0 < abs(t_max):
        t1 = t0 + sign * min(chunk, abs(t_max) - sign * t0)
        runner = integrate_variational if variational else integrate
        tr = runner(model, z, (t0, t1), cfg)
        hits = [h for h in event_crossing(tr, g, direction) if sign * h[0] > sign * t_min + 1e-12]
        if hits:
            t, s = hits[0]
            if variational:
                return t, s, tr.variational_at(t) @ phi, tr
            return t, s, tr
        z = tr.states[-1]
        if variational:
            phi = tr.variational[-1] @ phi
        t0 = t1
    return None


def write_trajectory_csv(traj: Trajectory, path, n_samples: int | None = None,
                         include_variational: bool = False) -> None:
    """Write ``t, c0..c3, energy_error`` (and 16 variational entries) per row."""
    if n_samples:
        ts = np.linspace(traj.t0, traj.t1, n_samples)
        states = traj.state_at(ts) if len(traj.times) > 1 else np.repeat(traj.states, n_samples, 0)
        var = traj.variational_at(ts) if include_variational and traj.variational is not None else None
    else:
        ts, states, var = traj.times, traj.states, traj.variational
    header = ["t", "c0", "c1", "c2", "c3", "energy_error"]
    if include_variational:
        if var is None:
            raise ValueError("trajectory has no variational data")
        header += [f"phi{i}{j}" for i in range(4) for j in range(4)]
    err = traj.model.value(np.asarray(states)) - traj.energy
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, t in enumerate(ts):
            row = [repr(float(t))] + [repr(float(v)) for v in states[k]] + [repr(float(err[k]))]
            if include_variational:
                row += [repr(float(v)) for v in var[k].ravel()]
            w.writerow(row)


def with_tolerance(cfg: IntegratorConfig, factor: float) -> IntegratorConfig:
    """Copy of ``cfg`` with both tolerances multiplied by ``factor``."""
    return replace(cfg, abs_tol=cfg.abs_tol * factor, rel_tol=cfg.rel_tol * factor)
