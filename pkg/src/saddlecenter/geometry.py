"""Hill regions, the transverse spheres ``{q1 + p1 = delta} ∩ {K = E}``,
convexity of levels, and (q1, p1) projections."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage import measure

from .frame_index import QUATERNIONS
from .models import HamiltonianModel, NormalFormParams, i2_of_i1, normal_form_model


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Hill regions
# ---------------------------------------------------------------------------

@dataclass
class HillRegion:
    energy: float
    window: tuple
    resolution: int
    boundary: list
    component_count: int
    singular: bool
    labels: np.ndarray = field(repr=False, default=None)
    grid: tuple = field(repr=False, default=None)

    def component_of(self, x) -> int:
        """Label of the component containing configuration point ``x`` (0 if outside)."""
        xs, ys = self.grid
        i = int(np.argmin(np.abs(ys - x[1])))
        j = int(np.argmin(np.abs(xs - x[0])))
        return int(self.labels[i, j])

    @property
    def counts_label(self):
        return "singular" if self.singular else self.component_count


DEFAULT_WINDOWS = {"ham1": ((-1.2, 1.2), (-1.2, 1.2)), "ham2": ((-1.5, 1.5), (-1.0, 1.6))}


def hill_region(model: HamiltonianModel, E: float, window=None, resolution: int = 512,
                singular_tol: float = 1e-12) -> HillRegion:
    """Contours of ``{U = E}`` and components of ``{U <= E}`` on a grid.

    ``singular`` is set when a critical point of ``U`` inside the window lies
    on the level, where the component count depends on the grid.
    """
    if not model.reversible:
        raise GeometryError("Hill regions need a model of the form |y|^2/2 + U(x)")
    window = window or DEFAULT_WINDOWS.get(model.name, ((-1.0, 1.0), (-1.0, 1.0)))
    (x0, x1), (y0, y1) = window
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys)
    U = model.potential(X, Y)
    labels, count = ndimage.label(U <= E)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    boundary = []
    for c in measure.find_contours(U, E):
        pts = np.column_stack([x0 + c[:, 1] * hx, y0 + c[:, 0] * hy])
        boundary.append(pts)
    xc = model.equilibrium[:2]
    inside = x0 <= xc[0] <= x1 and y0 <= xc[1] <= y1
    singular = bool(inside and abs(model.potential(*xc) - E) < singular_tol)
    return HillRegion(E, window, resolution, boundary, int(count), singular, labels, (xs, ys))


def boundary_axis_crossings(region: HillRegion, axis: int = 0) -> np.ndarray:
    """Boundary points where the other coordinate vanishes (linear interpolation)."""
    out = []
    other = 1 - axis
    for poly in region.boundary:
        v = poly[:, other]
        for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
            s = v[i] / (v[i] - v[i + 1])
            out.append(poly[i, axis] + s * (poly[i + 1, axis] - poly[i, axis]))
    return np.sort(np.array(out))


# ---------------------------------------------------------------------------
# N_E^delta spheres
# ---------------------------------------------------------------------------

@dataclass
class SphereSamples:
    energy: float
    delta: float
    unit: np.ndarray            # (n, 3) points of the unit sphere (q1bar, q2bar, p2bar)
    raw: np.ndarray             # parameterized points before projection
    points: np.ndarray          # projected onto {q1 + p1 = delta} ∩ {K = E}
    k: float
    raw_residual: float         # max |K - E| before projection
    rescaled_residual: float    # raw residual divided by k^2
    residual: float             # max |K - E| after projection
    plane_residual: float       # max |q1 + p1 - delta| after projection


def unit_sphere_samples(n: int, rng=None) -> np.ndarray:
    """``n`` points on the unit 2-sphere: a Fibonacci lattice, or uniform random with ``rng``."""
    if rng is not None:
        v = rng.normal(size=(n, 3))
        return v / np.linalg.norm(v, axis=1)[:, None]
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    th = np.pi * (1 + 5 ** 0.5) * i
    return np.column_stack([r * np.cos(th), r * np.sin(th), z])


def sphere_scale(params: NormalFormParams, E: float, delta: float) -> float:
    return float(np.sqrt(E + params.alpha * delta * delta / 4.0))


def sphere_parameterization(params: NormalFormParams, E, delta, unit):
    """Map unit-sphere points ``(q1bar, q2bar, p2bar)`` into ``{q1 + p1 = delta}``.

    ``q1 = k q1bar / sqrt(alpha) + delta/2``, ``p1 = delta - q1``,
    ``(q2, p2) = k sqrt(2/omega) (q2bar, p2bar)``, with ``k^2 = E + alpha delta^2/4``.
    For ``R = 0`` the image lies exactly on ``K = E``.
    """
    u = np.atleast_2d(unit)
    k = sphere_scale(params, E, delta)
    q1 = k * u[:, 0] / np.sqrt(params.alpha) + delta / 2
    c = k * np.sqrt(2.0 / params.omega)
    return np.column_stack([q1, c * u[:, 1], delta - q1, c * u[:, 2]])


_PLANE_NORMAL = np.array([1.0, 0.0, 1.0, 0.0]) / np.sqrt(2.0)


def project_to_slab_level(model: HamiltonianModel, z, E, delta, tol=1e-14, maxiter=40):
    """Newton projection onto ``{q1 + p1 = delta} ∩ {K = E}`` inside the hyperplane."""
    z = np.array(z, dtype=float)
    z += (delta - (z[0] + z[2])) / 2 * np.array([1.0, 0.0, 1.0, 0.0])
    for _ in range(maxiter):
        r = model.value(z) - E
        if abs(r) < tol:
            return z
        g = model.gradient(z)
        g = g - (g @ _PLANE_NORMAL) * _PLANE_NORMAL
        gg = g @ g
        if gg == 0:
            break
        z = z - r * g / gg
    if abs(model.value(z) - E) < 1e-12:
        return z
    raise GeometryError(f"projection onto the sphere failed at {z}")


def sphere_NdeltaE(params: NormalFormParams, E: float, delta: float, n_samples: int = 500,
                   rng=None) -> SphereSamples:
    """Samples of ``{q1 + p1 = delta} ∩ {K = E}`` from its unit-sphere parameterization."""
    if E < 0 or delta < 0 or (E == 0 and delta == 0):
        raise GeometryError("need E >= 0, delta >= 0, not both zero")
    model = normal_form_model(params)
    unit = unit_sphere_samples(n_samples, rng)
    raw = sphere_parameterization(params, E, delta, unit)
    k = sphere_scale(params, E, delta)
    raw_res = float(np.abs(model.value(raw) - E).max())
    pts = np.array([project_to_slab_level(model, z, E, delta) for z in raw])
    res = float(np.abs(model.value(pts) - E).max())
    plane = float(np.abs(pts[:, 0] + pts[:, 2] - delta).max())
    return SphereSamples(E, delta, unit, raw, pts, k, raw_res, raw_res / k ** 2, res, plane)


# ---------------------------------------------------------------------------
# convexity
# ---------------------------------------------------------------------------

@dataclass
class ConvexityResult:
    min_eigenvalue: float
    argmin: np.ndarray
    n_tested: int
    n_skipped: int


def restricted_hessian(model: HamiltonianModel, w) -> np.ndarray:
    """``Hess H`` restricted to the tangent space of the level, in the frame ``X1, X2, X3``."""
    g = model.gradient(w)
    n = g / np.linalg.norm(g)
    X = np.column_stack([QUATERNIONS[i] @ n for i in (1, 2, 3)])
    return X.T @ model.hessian(w) @ X


def convexity_scan(model: HamiltonianModel, samples, exclusion_radius: float,
                   center=None) -> ConvexityResult:
    """Least eigenvalue of the restricted Hessian over level samples.

    Samples within ``exclusion_radius`` of ``center`` (default: the
    equilibrium) are skipped and counted.
    """
    center = model.equilibrium if center is None else np.asarray(center)
    best, arg, tested, skipped = np.inf, None, 0, 0
    for w in np.asarray(samples, dtype=float):
        if np.linalg.norm(w - center) <= exclusion_radius:
            skipped += 1
            continue
        lam = np.linalg.eigvalsh(restricted_hessian(model, w))[0]
        tested += 1
        if lam < best:
            best, arg = float(lam), w.copy()
    if tested == 0:
        raise GeometryError("every sample fell inside the exclusion ball")
    return ConvexityResult(best, arg, tested, skipped)


def box_level_sampler(model: HamiltonianModel, E: float, box, n: int, rng,
                      selector=None, tol: float = 1e-12, max_tries: int = 50) -> np.ndarray:
    """Rejection sampling in ``box`` followed by Newton projection along ``grad H``.

    ``box`` is a sequence of four ``(lo, hi)`` pairs; ``selector(w) -> bool``
    keeps only points of the wanted component.
    """
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    out = []
    for _ in range(max_tries):
        batch = lo + (hi - lo) * rng.random((max(4 * (n - len(out)), 64), 4))
        for w in batch:
            for _ in range(30):
                r = model.value(w) - E
                if abs(r) < tol:
                    break
                g = model.gradient(w)
                gg = g @ g
                if gg < 1e-20:
                    break
                w = w - r * g / gg
            if abs(model.value(w) - E) >= tol or not np.all((w >= lo) & (w <= hi)):
                continue
            if selector is not None and not selector(w):
                continue
            out.append(w)
            if len(out) == n:
                return np.array(out)
    raise GeometryError(f"sampler produced only {len(out)} of {n} points")


def critical_level_sampler(model: HamiltonianModel, n: int, rng) -> np.ndarray:
    """Samples of the convex singular piece of the critical level of Ham1 or Ham2."""
    E = model.critical_energy
    if model.name == "ham1":
        box = [(-0.5, 0.5), (0.0, 1.1), (-0.55, 0.55), (-0.55, 0.55)]
        sel = lambda w: w[1] > 0
    elif model.name == "ham2":
        box = [(-0.8, 0.8), (-0.6, 1.0), (-0.65, 0.65), (-0.65, 0.65)]
        sel = lambda w: w[1] <= 1.0 and abs(w[0]) < 1.0
    else:
        raise GeometryError(f"no critical-level sampler for {model.name}")
    return box_level_sampler(model, E, box, n, rng, sel)


# ---------------------------------------------------------------------------
# (q1, p1) projections
# ---------------------------------------------------------------------------

@dataclass
class QPProjection:
    q1: np.ndarray
    p1: np.ndarray
    hyperbola_levels: tuple


def qp_projection(data, levels=()) -> QPProjection:
    """(q1, p1) series of normal-form points or trajectories.

    ``data`` is a point, an ``(n, 4)`` array, or a list of such arrays; the
    hyperbolas ``q1 p1 = I1`` for ``I1`` in ``levels`` are carried along
    for plotting.
    """
    if isinstance(data, (list, tuple)) and data and np.ndim(data[0]) == 2:
        arr = np.concatenate([np.asarray(d) for d in data])
    else:
        arr = np.atleast_2d(np.asarray(data, dtype=float))
    return QPProjection(arr[:, 0].copy(), arr[:, 2].copy(), tuple(float(v) for v in levels))


def normal_form_level_samples(params: NormalFormParams, E: float, n: int, rng,
                              box: float = 0.3) -> np.ndarray:
    """Points of ``K = E`` with ``(q1, p1)`` uniform in a square and a random phase."""
    out = []
    while len(out) < n:
        q1, p1 = rng.uniform(-box, box, 2)
        try:
            I2 = i2_of_i1(params, q1 * p1, E)
        except RuntimeError:
            continue
        if I2 < 0:
            continue
        th = rng.uniform(0, 2 * np.pi)
        r = np.sqrt(2 * I2)
        out.append((q1, r * np.sin(th), p1, r * np.cos(th)))
    return np.array(out)


def i1_range_of(points) -> tuple:
    I1 = points[:, 0] * points[:, 2]
    return float(I1.min()), float(I1.max())

