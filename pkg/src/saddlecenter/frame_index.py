"""Quaternionic moving frame on energy levels, the transverse linearized flow,
and Conley-Zehnder indices from rotation intervals.

The frame at a regular point ``w`` is ``X_i = j_i(grad H / |grad H|)``.  With
``X_0`` normal to the level and ``X_3`` along ``X_H``, the pair ``(X_1, X_2)``
spans a symplectic complement of the flow direction inside the tangent space,
so the linearized flow projected onto it obeys a 2x2 linear ODE.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .flow import Trajectory, integrate, DEFAULT_CONFIG, IntegratorConfig
from .models import HamiltonianModel, NormalFormParams, actions, as_array

QUATERNIONS = (
    np.eye(4),
    np.array([[0, 0, 0, 1], [0, 0, -1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=float),
    np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float),
    np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]], dtype=float),
)

# planar rotation generator; the transverse equation is alpha' = -J2 M alpha
J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class CriticalPointError(ValueError):
    pass


class DirectionLossError(RuntimeError):
    pass


def quaternion_map(i: int, v) -> np.ndarray:
    """Apply ``j_i`` to ``v = (a1, a2, b1, b2)``.

    ``j1 v = (b2, -b1, a2, -a1)``, ``j2 v = (a2, -a1, -b2, b1)``,
    ``j3 v = (b1, b2, -a1, -a2)``.
    """
    return QUATERNIONS[i] @ np.asarray(v, dtype=float)


@dataclass(frozen=True)
class TransverseFrame:
    base: np.ndarray
    X0: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    X3: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Columns ``X0, X1, X2, X3``."""
        return np.column_stack([self.X0, self.X1, self.X2, self.X3])


def _unit_normal(model, w, tol=1e-10):
    g = model.gradient(w)
    n = np.linalg.norm(g)
    if n <= tol:
        raise CriticalPointError(f"|grad H| = {n:.3e} at {w}: frame undefined")
    return g / n


def frame_at(model: HamiltonianModel, w) -> TransverseFrame:
    w = as_array(w, model.chart)
    n = _unit_normal(model, w)
    return TransverseFrame(w, n, QUATERNIONS[1] @ n, QUATERNIONS[2] @ n, QUATERNIONS[3] @ n)


def kappa(model: HamiltonianModel, w) -> np.ndarray:
    """The 3x3 matrix ``<Hess H X_i, X_j>``, i, j = 1..3."""
    w = as_array(w, model.chart)
    n = _unit_normal(model, w)
    X = np.column_stack([QUATERNIONS[i] @ n for i in (1, 2, 3)])
    return X.T @ model.hessian(w) @ X


def m_matrix(model: HamiltonianModel, w) -> np.ndarray:
    """``kappa[:2, :2] + kappa_33 I``: the symmetric matrix driving the transverse flow."""
    k = kappa(model, w)
    M = k[:2, :2] + k[2, 2] * np.eye(2)
    return 0.5 * (M + M.T)


@dataclass
class RotationRecord:
    """Frame components ``(alpha1, alpha2)`` of a transverse solution and a
    continuous argument ``eta`` (radians)."""

    times: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    eta: np.ndarray
    dense: object = field(default=None, repr=False)
    alpha0: np.ndarray | None = None

    def alpha_at(self, t) -> np.ndarray:
        """Interpolated ``(alpha1, alpha2)`` at time(s) ``t``."""
        phi = np.asarray(self.dense(t))[:4]
        if np.ndim(t) == 0:
            return phi.reshape(2, 2) @ self.alpha0
        return np.einsum("nij,j->ni", phi.T.reshape(-1, 2, 2), self.alpha0)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.alpha1, self.alpha2, self.eta])
        np.savetxt(path, data, delimiter=",", header="t,alpha1,alpha2,eta", comments="")


def delta_eta(record: RotationRecord) -> float:
    return float(record.eta[-1] - record.eta[0])


def _rotation_rhs(model, traj):
    # state: 2x2 fundamental matrix (4) followed by one argument per direction
    def rhs(t, y, a0):
        M = m_matrix(model, traj.state_at(t))
        phi = y[:4].reshape(2, 2)
        out = np.empty_like(y)
        out[:4] = (-J2 @ M @ phi).ravel()
        a = phi @ a0                       # (2, n_dir)
        out[4:] = np.einsum("in,ij,jn->n", a, M, a) / np.einsum("in,in->n", a, a)
        return out
    return rhs


def _solve_rotation(model, traj: Trajectory, a0: np.ndarray, rtol=1e-12, atol=1e-12,
                    t_eval=None):
    """Integrate the transverse matrix flow and arguments of ``phi(t) a0``."""
    eta0 = np.arctan2(a0[1], a0[0])
    y0 = np.concatenate([np.eye(2).ravel(), eta0])
    rhs = _rotation_rhs(model, traj)
    # bound the step so every argument moves by less than pi/4 per step
    probe = traj.state_at(np.linspace(traj.t0, traj.t1, 64))
    mmax = max(np.abs(np.linalg.eigvalsh(m_matrix(model, s))).max() for s in probe)
    max_step = (np.pi / 4) / max(mmax, 1e-12)
    sol = solve_ivp(rhs, (traj.t0, traj.t1), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, t_eval=t_eval, args=(a0,), max_step=max_step)
    if sol.status != 0:
        raise DirectionLossError(f"transverse flow integration failed: {sol.message}")
    return sol


def transverse_linearized(model: HamiltonianModel, traj: Trajectory, v0) -> RotationRecord:
    """Frame components of the linearized solution through ``v0`` along ``traj``."""
    v0 = np.asarray(v0, dtype=float)
    fr = frame_at(model, traj.states[0])
    a0 = np.array([[v0 @ fr.X1], [v0 @ fr.X2]])
    if np.hypot(a0[0, 0], a0[1, 0]) <= 1e-14 * max(1.0, np.linalg.norm(v0)):
        raise DirectionLossError("v0 has no component in span{X1, X2}")
    if traj.dense is None:
        return RotationRecord(traj.times.copy(), a0[0].copy(), a0[1].copy(),
                              np.arctan2(a0[1], a0[0]))
    sol = _solve_rotation(model, traj, a0)
    ts = sol.t
    y = sol.y
    phi = y[:4].T.reshape(-1, 2, 2)
    a = phi @ a0[:, 0]
    rec = RotationRecord(ts, a[:, 0], a[:, 1], y[4], sol.sol, a0[:, 0].copy())
    if np.any(np.hypot(rec.alpha1, rec.alpha2) == 0):
        raise DirectionLossError("transverse component vanished")
    return rec


def projected_variational(model: HamiltonianModel, traj: Trajectory, v0, times) -> np.ndarray:
    """``(<D psi_t v0, X_1>, <D psi_t v0, X_2>)`` at ``times``; needs variational data."""
    out = []
    for t in np.atleast_1d(times):
        u = traj.variational_at(t) @ np.asarray(v0, dtype=float)
        fr = frame_at(model, traj.state_at(t))
        out.append((u @ fr.X1, u @ fr.X2))
    return np.array(out)


def transverse_fundamental(model: HamiltonianModel, traj: Trajectory) -> np.ndarray:
    """The 2x2 matrix ``phi(t1)`` of the transverse flow over the whole trajectory."""
    sol = _solve_rotation(model, traj, np.zeros((2, 0)))
    return sol.y[:4, -1].reshape(2, 2)


@dataclass(frozen=True)
class CZResult:
    interval: tuple
    index: int
    directions_sampled: int
    degenerate_flag: bool
    samples: tuple = ()


def cz_from_interval(lo: float, hi: float, eps: float = -1e-6, int_tol: float = 1e-4):
    """Index from the rotation interval ``[lo, hi]`` (in turns).

    Returns ``(index, degenerate)``.  After shifting by ``eps``: an integer
    ``k`` in the interior gives ``2k``; otherwise the interval sits in
    ``(k, k + 1)`` and the index is ``2k + 1``.
    """
    lo_e, hi_e = lo + eps, hi + eps
    k = int(np.ceil(lo_e))
    if k == lo_e:
        k += 1
    index = 2 * k if k < hi_e else 2 * int(np.floor(lo_e)) + 1
    degenerate = min(abs(lo - round(lo)), abs(hi - round(hi))) < int_tol
    return index, bool(degenerate)


def _orbit_trajectory(model, orbit, cfg):
    return integrate(model, orbit.state, (0.0, orbit.period), cfg)


def rotation_samples(model: HamiltonianModel, traj: Trajectory, n_directions: int = 16) -> tuple:
    """``delta eta / 2 pi`` for ``n_directions`` evenly spaced transverse lines,
    together with the transverse period matrix."""
    theta = np.pi * np.arange(n_directions) / n_directions
    a0 = np.vstack([np.cos(theta), np.sin(theta)])
    sol = _solve_rotation(model, traj, a0)
    turns = (sol.y[4:, -1] - sol.y[4:, 0]) / (2 * np.pi)
    return turns, sol.y[:4, -1].reshape(2, 2)


def cz_index(model: HamiltonianModel, orbit, n_directions: int = 16,
             cfg: IntegratorConfig = DEFAULT_CONFIG) -> CZResult:
    """Conley-Zehnder index of a periodic orbit in the global frame trivialization."""
    if n_directions < 8:
        raise ValueError("use at least 8 directions")
    traj = _orbit_trajectory(model, orbit, cfg)
    turns, _ = rotation_samples(model, traj, n_directions)
    lo, hi = float(turns.min()), float(turns.max())
    index, degenerate = cz_from_interval(lo, hi)
    return CZResult((lo, hi), index, n_directions, degenerate, tuple(turns))


def stability_of(trace: float, tol: float = 1e-9) -> str:
    if abs(trace) > 2 + tol:
        return "hyperbolic"
    if abs(trace) < 2 - tol:
        return "elliptic"
    return "parabolic"


def monodromy_transverse(model: HamiltonianModel, orbit,
                         cfg: IntegratorConfig = DEFAULT_CONFIG) -> tuple:
    """Transverse period matrix in the frame and its stability type."""
    traj = _orbit_trajectory(model, orbit, cfg)
    P = transverse_fundamental(model, traj)
    return P, stability_of(np.trace(P))


# ---------------------------------------------------------------------------
# rotation across a small ball around the saddle-center
# ---------------------------------------------------------------------------

def ball_transit(params: NormalFormParams, z0, delta: float) -> tuple:
    """Times ``t- <= 0 <= t+`` at which the normal-form trajectory through
    ``z0`` (inside the ball of radius ``delta``) meets the sphere ``|z| = delta``.

    Along the flow ``|z(t)|^2 = q1^2 e^{-2 ab t} + p1^2 e^{2 ab t} + r^2``, a
    quadratic in ``u = e^{2 ab t}``; both roots are real when ``q1 p1 != 0``.
    """
    z0 = np.asarray(z0, dtype=float)
    if np.linalg.norm(z0) >= delta:
        raise ValueError("z0 must lie inside the ball")
    if z0[0] * z0[2] == 0:
        raise ValueError("the trajectory stays in the ball on a stable or unstable manifold")
    I1, I2 = actions(z0)
    ab = params.alpha_bar(I1, I2)
    A, B, C = z0[2] ** 2, z0[1] ** 2 + z0[3] ** 2 - delta ** 2, z0[0] ** 2
    disc = np.sqrt(B * B - 4 * A * C)
    # the smaller root via the product of roots, to avoid cancellation
    u_plus = (-B + disc) / (2 * A)
    u_minus = C / (A * u_plus)
    return float(np.log(u_minus) / (2 * ab)), float(np.log(u_plus) / (2 * ab))


def ball_rotation_margin(params: NormalFormParams, z0, theta: float, delta: float,
                         cfg: IntegratorConfig = DEFAULT_CONFIG) -> tuple:
    """``Delta eta - ((omega/2)(t+ - t-) - pi)`` over the transit of the ball.

    The transverse solution starts at the entry point ``z(t-)`` in the
    direction ``cos(theta) X1 + sin(theta) X2``.  Returns the margin and
    ``(t-, t+)``.
    """
    from .models import exact_normal_form_flow, normal_form_model
    tm, tp = ball_transit(params, z0, delta)
    model = normal_form_model(params)
    entry = exact_normal_form_flow(params, z0, tm)
    traj = integrate(model, entry, (0.0, tp - tm), cfg)
    fr = frame_at(model, entry)
    rec = transverse_linearized(model, traj, np.cos(theta) * fr.X1 + np.sin(theta) * fr.X2)
    return delta_eta(rec) - (0.5 * params.omega * (tp - tm) - np.pi), (tm, tp)
