"""Hamiltonian models on R^4: the integrable saddle-center normal form and two
concrete mechanical examples.

Coordinates are always ordered as ``(c0, c1, c2, c3)``: ``(x1, x2, y1, y2)`` in
the global chart and ``(q1, q2, p1, p2)`` in the normal-form chart.  The
symplectic form is ``dy1^dx1 + dy2^dx2`` so that ``X_H = J grad H`` with
``J = [[0, I], [-I, 0]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq

GLOBAL = "global"
NORMAL_FORM = "normal_form"
CHARTS = (GLOBAL, NORMAL_FORM)

# standard symplectic matrix, X_H = J @ grad H
J4 = np.array(
    [[0.0, 0.0, 1.0, 0.0],
     [0.0, 0.0, 0.0, 1.0],
     [-1.0, 0.0, 0.0, 0.0],
     [0.0, -1.0, 0.0, 0.0]]
)


class ChartError(ValueError):
    """Raised when a point is used in the wrong coordinate chart."""


class NotEquilibriumError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """A root solve failed to converge (usually: left the region of validity)."""


@dataclass(frozen=True)
class PhasePoint:
    """A point of R^4 tagged with its coordinate chart."""

    coords: tuple
    chart: str = GLOBAL

    def __post_init__(self):
        c = tuple(float(v) for v in np.asarray(self.coords, dtype=float).ravel())
        if len(c) != 4:
            raise ValueError(f"a phase point has 4 coordinates, got {len(c)}")
        if not all(np.isfinite(c)):
            raise ValueError(f"non-finite coordinates {c}")
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")
        object.__setattr__(self, "coords", c)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


def as_array(p, chart: str) -> np.ndarray:
    """Coordinates of ``p`` as an array, checking the chart of tagged points.

    Plain arrays are accepted and assumed to be in ``chart``.
    """
    if isinstance(p, PhasePoint):
        if p.chart != chart:
            raise ChartError(f"point is in chart {p.chart!r}, expected {chart!r}")
        return p.array
    a = np.asarray(p, dtype=float)
    if a.shape[-1] != 4:
        raise ValueError(f"expected trailing dimension 4, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# normal form K(I1, I2) = -alpha I1 + omega I2 + R(I1, I2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalFormParams:
    """Parameters of the integrable normal form.

    ``remainder`` maps exponent pairs ``(i, j)`` to the coefficient of
    ``I1**i * I2**j``.  Only monomials of total degree >= 2 are allowed.
    """

    alpha: float = 1.0
    omega: float = 1.0
    remainder: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not (self.alpha > 0 and self.omega > 0):
            raise ValueError("alpha and omega must be positive")
        rem = {}
        for key, c in dict(self.remainder).items():
            i, j = (int(key[0]), int(key[1]))
            if i < 0 or j < 0 or i + j < 2:
                raise ValueError(f"remainder monomial I1^{i} I2^{j} has degree < 2")
            if c != 0:
                rem[(i, j)] = rem.get((i, j), 0.0) + float(c)
        object.__setattr__(self, "remainder", dict(sorted(rem.items())))

    # R and its partial derivatives, d^a/dI1^a d^b/dI2^b
    def R(self, I1, I2, d1: int = 0, d2: int = 0):
        out = np.zeros(np.broadcast(np.asarray(I1), np.asarray(I2)).shape)
        for (i, j), c in self.remainder.items():
            if i < d1 or j < d2:
                continue
            coef = c
            for k in range(d1):
                coef *= i - k
            for k in range(d2):
                coef *= j - k
            out = out + coef * np.power(I1, i - d1) * np.power(I2, j - d2)
        return out if out.ndim else float(out)

    def K(self, I1, I2):
        return -self.alpha * I1 + self.omega * I2 + self.R(I1, I2)

    def K_I1(self, I1, I2):
        return -self.alpha + self.R(I1, I2, 1, 0)

    def K_I2(self, I1, I2):
        return self.omega + self.R(I1, I2, 0, 1)

    def alpha_bar(self, I1, I2):
        """Hyperbolic rate -dK/dI1, constant along trajectories."""
        return -self.K_I1(I1, I2)

    def omega_bar(self, I1, I2):
        """Rotation rate dK/dI2, constant along trajectories."""
        return self.K_I2(I1, I2)

    @property
    def is_quadratic(self) -> bool:
        return not self.remainder


def actions(z) -> tuple:
    """The actions ``(I1, I2) = (q1 p1, (q2^2 + p2^2)/2)``."""
    a = as_array(z, NORMAL_FORM)
    q1, q2, p1, p2 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    I1 = q1 * p1
    I2 = 0.5 * (q2 * q2 + p2 * p2)
    if np.ndim(I1) == 0:
        return float(I1), float(I2)
    return I1, I2


def i2_of_i1(params: NormalFormParams, I1: float, E: float,
             maxiter: int = 50, tol: float = 1e-13) -> float:
    """Solve ``K(I1, I2) = E`` for ``I2`` near 0 by Newton's method."""
    I2 = (params.alpha * I1 + E) / params.omega
    if params.is_quadratic:
        return I2
    for _ in range(maxiter):
        res = params.K(I1, I2) - E
        if abs(res) < tol:
            return float(I2)
        slope = params.K_I2(I1, I2)
        if slope == 0 or not np.isfinite(slope):
            break
        I2 = I2 - res / slope
    res = params.K(I1, I2) - E
    if abs(res) < tol:
        return float(I2)
    raise ConvergenceError(f"i2_of_i1 did not converge at I1={I1}, E={E} (residual {res:.3e})")


def i1_minus(params: NormalFormParams, E: float) -> float:
    """The negative ``I1`` at which the level ``K = E`` meets ``I2 = 0``."""
    if not E > 0:
        raise ValueError("i1_minus needs E > 0")
    lin = -E / params.alpha
    if params.is_quadratic:
        return lin
    g = lambda I1: params.K(I1, 0.0) - E
    lo = 2.0 * lin
    for _ in range(60):
        if g(lo) * g(0.0) < 0:
            break
        lo *= 1.5
    else:
        raise ConvergenceError(f"could not bracket I1^-(E) for E={E}")
    return float(brentq(g, lo, 0.0, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200))


def involution_T(z):
    """The symmetry ``(q1, q2, p1, p2) -> (-q1, q2, -p1, p2)`` of every normal form."""
    if isinstance(z, PhasePoint):
        if z.chart != NORMAL_FORM:
            raise ChartError("involution_T acts in the normal-form chart")
        a = z.array
        return PhasePoint(a * _T_DIAG, NORMAL_FORM)
    return np.asarray(z, dtype=float) * _T_DIAG


_T_DIAG = np.array([-1.0, 1.0, -1.0, 1.0])


def exact_normal_form_flow(params: NormalFormParams, z0, t):
    """Closed-form flow of the normal form.

    ``t`` may be a scalar or an array; for an array the result has shape
    ``(len(t), 4)``.
    """
    a = as_array(z0, NORMAL_FORM)
    I1, I2 = actions(a)
    ab = params.alpha_bar(I1, I2)
    ob = params.omega_bar(I1, I2)
    t = np.asarray(t, dtype=float)
    q1 = a[0] * np.exp(-ab * t)
    p1 = a[2] * np.exp(ab * t)
    rot = (a[1] + 1j * a[3]) * np.exp(-1j * ob * t)
    out = np.stack([q1, rot.real, p1, rot.imag], axis=-1)
    if isinstance(z0, PhasePoint) and out.ndim == 1:
        return PhasePoint(out, NORMAL_FORM)
    return out


# ---------------------------------------------------------------------------
# model bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianModel:
    """Evaluators of a Hamiltonian plus metadata on its saddle-center.

    ``potential`` and ``potential_grad`` are set for mechanical models
    ``H = |y|^2/2 + U(x)`` and are used for Hill regions and brake orbits.
    """

    name: str
    chart: str
    value: Callable
    gradient: Callable
    hessian: Callable
    equilibrium: np.ndarray
    critical_energy: float
    alpha: float
    omega: float
    symmetries: tuple = ()
    params: Mapping = field(default_factory=dict)
    normal_form: NormalFormParams | None = None
    potential: Callable | None = None
    potential_grad: Callable | None = None

    @property
    def reversible(self) -> bool:
        return self.potential is not None


def eval(model: HamiltonianModel, p):
    """Value, gradient and Hessian of ``model`` at ``p``."""
    a = as_array(p, model.chart)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite phase point")
    return model.value(a), model.gradient(a), model.hessian(a)


def hamiltonian_vector_field(model: HamiltonianModel, p) -> np.ndarray:
    a = as_array(p, model.chart)
    return model.gradient(a) @ J4.T


def linearization(model: HamiltonianModel, p) -> np.ndarray:
    """Matrix of the linearized vector field, ``J Hess H``."""
    return J4 @ model.hessian(as_array(p, model.chart))


@dataclass(frozen=True)
class SaddleCenter:
    alpha: float
    omega: float
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class OtherEquilibrium:
    eigenvalues: np.ndarray


def classify_equilibrium(model: HamiltonianModel, p, grad_tol: float = 1e-10,
                         split_tol: float = 1e-8):
    """Classify an equilibrium from the spectrum of its linearization."""
    a = as_array(p, model.chart)
    g = model.gradient(a)
    if np.linalg.norm(g) > grad_tol:
        raise NotEquilibriumError(f"|grad H| = {np.linalg.norm(g):.3e} at {a}")
    ev = np.linalg.eigvals(linearization(model, a))
    real = ev[np.abs(ev.imag) <= split_tol * max(1.0, np.abs(ev).max())]
    imag = ev[np.abs(ev.real) <= split_tol * max(1.0, np.abs(ev).max())]
    if len(real) == 2 and len(imag) == 2:
        r = np.sort(real.real)
        w = np.sort(imag.imag)
        if r[1] > split_tol and abs(r[0] + r[1]) <= split_tol * r[1] \
                and w[1] > split_tol and abs(w[0] + w[1]) <= split_tol * w[1]:
            return SaddleCenter(float(r[1]), float(w[1]), ev)
    return OtherEquilibrium(ev)


# ---------------------------------------------------------------------------
# concrete models
# ---------------------------------------------------------------------------

def _grad_I(z):
    q1, q2, p1, p2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    zero = np.zeros_like(q1)
    gI1 = np.stack([p1, zero, q1, zero], axis=-1)
    gI2 = np.stack([zero, q2, zero, p2], axis=-1)
    return gI1, gI2


_HESS_I1 = np.zeros((4, 4))
_HESS_I1[0, 2] = _HESS_I1[2, 0] = 1.0
_HESS_I2 = np.diag([0.0, 1.0, 0.0, 1.0])


def normal_form_model(params: NormalFormParams | None = None) -> HamiltonianModel:
    """The normal form ``K = -alpha I1 + omega I2 + R(I1, I2)`` as a model."""
    params = params or NormalFormParams()

    def value(z):
        I1, I2 = actions(z)
        return params.K(I1, I2)

    def gradient(z):
        I1, I2 = actions(z)
        gI1, gI2 = _grad_I(z)
        k1 = np.asarray(params.K_I1(I1, I2))[..., None]
        k2 = np.asarray(params.K_I2(I1, I2))[..., None]
        return k1 * gI1 + k2 * gI2

    def hessian(z):
        I1, I2 = actions(z)
        gI1, gI2 = _grad_I(z)
        k11 = params.R(I1, I2, 2, 0)
        k12 = params.R(I1, I2, 1, 1)
        k22 = params.R(I1, I2, 0, 2)
        return (params.K_I1(I1, I2) * _HESS_I1 + params.K_I2(I1, I2) * _HESS_I2
                + k11 * np.outer(gI1, gI1) + k22 * np.outer(gI2, gI2)
                + k12 * (np.outer(gI1, gI2) + np.outer(gI2, gI1)))

    return HamiltonianModel(
        name="normal_form", chart=NORMAL_FORM,
        value=value, gradient=gradient, hessian=hessian,
        equilibrium=np.zeros(4), critical_energy=0.0,
        alpha=params.alpha, omega=params.omega,
        symmetries=(np.diag(_T_DIAG),),
        params={"alpha": params.alpha, "omega": params.omega,
                "remainder": dict(params.remainder)},
        normal_form=params,
    )


def _mechanical(name, U, dU, d2U, equilibrium, critical_energy, symmetries, params):
    def value(w):
        w = np.asarray(w, dtype=float)
        return 0.5 * (w[..., 2] ** 2 + w[..., 3] ** 2) + U(w[..., 0], w[..., 1])

    def gradient(w):
        w = np.asarray(w, dtype=float)
        u1, u2 = dU(w[..., 0], w[..., 1])
        return np.stack([u1, u2, w[..., 2], w[..., 3]], axis=-1)

    def hessian(w):
        w = np.asarray(w, dtype=float)
        u11, u12, u22 = d2U(w[0], w[1])
        return np.array([[u11, u12, 0.0, 0.0],
                         [u12, u22, 0.0, 0.0],
                         [0.0, 0.0, 1.0, 0.0],
                         [0.0, 0.0, 0.0, 1.0]])

    def potential(x1, x2):
        return U(x1, x2)

    def potential_grad(x1, x2):
        return np.stack(dU(x1, x2), axis=-1)

    model = HamiltonianModel(
        name=name, chart=GLOBAL, value=value, gradient=gradient, hessian=hessian,
        equilibrium=np.asarray(equilibrium, dtype=float),
        critical_energy=critical_energy, alpha=np.nan, omega=np.nan,
        symmetries=tuple(symmetries), params=params,
        potential=potential, potential_grad=potential_grad,
    )
    cls = classify_equilibrium(model, model.equilibrium)
    if not isinstance(cls, SaddleCenter):
        raise ValueError(f"{name} with {params} has no saddle-center at {equilibrium}: "
                         f"eigenvalues {cls.eigenvalues}")
    object.__setattr__(model, "alpha", cls.alpha)
    object.__setattr__(model, "omega", cls.omega)
    return model


def ham1(k: float = -1.0) -> HamiltonianModel:
    """``H = |y|^2/2 + (x1^2 + k x2^2)/2 + (x1^2 + x2^2)^2/2`` with ``k < 0``."""
    if not k < 0:
        raise ValueError("ham1 needs k < 0 for a saddle-center at the origin")

    def U(x1, x2):
        r2 = x1 * x1 + x2 * x2
        return 0.5 * (x1 * x1 + k * x2 * x2) + 0.5 * r2 * r2

    def dU(x1, x2):
        r2 = x1 * x1 + x2 * x2
        return x1 * (1.0 + 2.0 * r2), x2 * (k + 2.0 * r2)

    def d2U(x1, x2):
        r2 = x1 * x1 + x2 * x2
        return 1.0 + 2.0 * r2 + 4.0 * x1 * x1, 4.0 * x1 * x2, k + 2.0 * r2 + 4.0 * x2 * x2

    sym = (np.diag([-1.0, 1.0, -1.0, 1.0]), np.diag([1.0, -1.0, 1.0, -1.0]))
    return _mechanical("ham1", U, dU, d2U, np.zeros(4), 0.0, sym, {"k": float(k)})


def ham2(b: float = 0.5) -> HamiltonianModel:
    """``H = |y|^2/2 + (x1^2 + x2^2)/2 + b x1^2 x2 - x2^3/3`` with ``0 < b < 1``.

    The saddle-center is ``(0, 1, 0, 0)`` at energy ``1/6``.
    """
    if not 0 < b < 1:
        raise ValueError("ham2 needs 0 < b < 1")

    def U(x1, x2):
        return 0.5 * (x1 * x1 + x2 * x2) + b * x1 * x1 * x2 - x2 ** 3 / 3.0

    def dU(x1, x2):
        return x1 * (1.0 + 2.0 * b * x2), x2 + b * x1 * x1 - x2 * x2

    def d2U(x1, x2):
        return 1.0 + 2.0 * b * x2, 2.0 * b * x1, 1.0 - 2.0 * x2

    sym = (np.diag([-1.0, 1.0, -1.0, 1.0]),)
    return _mechanical("ham2", U, dU, d2U, [0.0, 1.0, 0.0, 0.0], 1.0 / 6.0, sym, {"b": float(b)})


MODEL_FACTORIES = {
    "ham1": (ham1, {"k": -1.0}),
    "ham2": (ham2, {"b": 0.5}),
    "normal_form": (None, {"alpha": 1.0, "omega": 1.0}),
}


def parse_remainder(text: str) -> dict:
    """Parse ``"2,0:0.5;0,2:-1"`` into ``{(2, 0): 0.5, (0, 2): -1.0}``."""
    out = {}
    text = (text or "").strip()
    if not text:
        return out
    for item in text.split(";"):
        mono, coef = item.split(":")
        i, j = (int(s) for s in mono.split(","))
        out[(i, j)] = float(coef)
    return out


def make_model(name: str, **params) -> HamiltonianModel:
    """Build a model by name; unknown names raise ``KeyError``."""
    if name not in MODEL_FACTORIES:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODEL_FACTORIES)}")
    if name == "normal_form":
        rem = params.pop("remainder", {})
        if isinstance(rem, str):
            rem = parse_remainder(rem)
        unknown = set(params) - {"alpha", "omega"}
        if unknown:
            raise TypeError(f"unknown normal_form parameters {sorted(unknown)}")
        return normal_form_model(NormalFormParams(remainder=rem, **params))
    factory, defaults = MODEL_FACTORIES[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise TypeError(f"unknown {name} parameters {sorted(unknown)}")
    return factory(**{**defaults, **params})
