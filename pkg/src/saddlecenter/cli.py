"""Command-line front end.

    saddlecenter [--config FILE] [--out-dir DIR] [--seed N] GROUP ACTION [options]

Groups: ``model info``, ``orbit {p2,p3,homoclinic}``,
``certify {liouville,convexity,plane,index}`` and
``plot {hill,qp_projection,sphere,plane3d,foliation_slice}``.

Exit codes: 0 success, 1 numerical failure (a residual or margin target
missed, or a finder gave up), 2 usage error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import re
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import flow, frame_index, geometry, liouville, orbits, pseudoplanes
from scipy.optimize import brentq

from .models import (GLOBAL, MODEL_FACTORIES, ConvergenceError, NormalFormParams,
                     SaddleCenter, classify_equilibrium, i1_minus, make_model,
                     parse_remainder)

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

ACTIONS = {
    "model": ("info",),
    "orbit": ("p2", "p3", "homoclinic"),
    "certify": ("liouville", "convexity", "plane", "index"),
    "plot": ("hill", "qp_projection", "sphere", "plane3d", "foliation_slice"),
}

_NUMBER_LIST = re.compile(r"^-?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?(,-?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)*$")


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Everything a subcommand needs; echoed into every JSON report."""

    group: str
    action: str
    model: str = "ham1"
    model_params: dict = field(default_factory=dict)
    energies: tuple = (0.01,)
    integrator: flow.IntegratorConfig = field(default_factory=flow.IntegratorConfig)
    options: dict = field(default_factory=dict)
    out_dir: str = "out"
    seed: int = 0

    def echo(self) -> dict:
        d = asdict(self)
        d["integrator"] = {k: (v if np.isfinite(v) else str(v)) if isinstance(v, float) else v
                           for k, v in d["integrator"].items()}
        d["model_params"] = {k: (str(v) if isinstance(v, dict) else v)
                             for k, v in self.model_params.items()}
        return d


# option name -> (type, default); None default means absent unless given
_OPTIONS = {
    "model": (str, None),
    "k": (float, None),
    "b": (float, None),
    "alpha": (float, None),
    "omega": (float, None),
    "remainder": (str, None),
    "energy": (str, None),
    "energies": (str, None),
    "method": (str, None),
    "rtol": (float, None),
    "atol": (float, None),
    "delta0": (float, None),
    "cs": (str, None),
    "samples": (int, None),
    "exclusion": (float, None),
    "h0": (float, None),
    "ds": (float, None),
    "directions": (int, None),
    "resolution": (int, None),
    "delta": (float, None),
}

# keys each action accepts besides the common ones
_ACTION_KEYS = {
    ("model", "info"): {"model", "k", "b", "alpha", "omega", "remainder"},
    ("orbit", "p2"): {"model", "k", "b", "alpha", "omega", "remainder", "energy", "energies",
                      "method", "rtol", "atol", "directions"},
    ("orbit", "p3"): {"model", "k", "energy", "energies", "method", "rtol", "atol", "directions"},
    ("orbit", "homoclinic"): {"model", "k", "energy", "energies", "method", "rtol", "atol"},
    ("certify", "liouville"): {"alpha", "omega", "remainder", "delta0", "energy", "energies",
                               "cs", "samples"},
    ("certify", "convexity"): {"model", "k", "b", "exclusion", "samples"},
    ("certify", "plane"): {"alpha", "omega", "remainder", "energy", "energies", "h0", "ds"},
    ("certify", "index"): {"model", "k", "b", "alpha", "omega", "remainder", "energy",
                           "energies", "directions", "rtol", "atol"},
    ("plot", "hill"): {"model", "k", "b", "energy", "energies", "resolution"},
    ("plot", "qp_projection"): {"alpha", "omega", "remainder", "energy", "energies", "samples"},
    ("plot", "sphere"): {"alpha", "omega", "remainder", "energy", "energies", "delta", "samples"},
    ("plot", "plane3d"): {"alpha", "omega", "remainder", "energy", "energies"},
    ("plot", "foliation_slice"): {"alpha", "omega", "remainder", "energy", "energies"},
}

_COMMON_KEYS = {"out_dir", "seed"}


def normalize_argv(argv: list) -> list:
    """Join ``--flag VALUE`` into ``--flag=VALUE`` when VALUE is a number list
    starting with a minus sign (argparse would take it for an option)."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and argv[i + 1].startswith("-") and _NUMBER_LIST.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="saddlecenter", description="Saddle-center energy-level toolkit.")
    p.add_argument("--config", help="INI file with one section per group or group.action")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("group", choices=sorted(ACTIONS))
    p.add_argument("action")
    for name, (typ, _) in _OPTIONS.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None)
    return p


def _read_config_file(path, group, action) -> dict:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    values = {}
    for section in ("run", group, f"{group}.{action}"):
        if cp.has_section(section):
            values.update(dict(cp.items(section)))
    known = set(_OPTIONS) | _COMMON_KEYS
    for section in cp.sections():
        for key in cp[section]:
            if key not in known:
                raise UsageError(f"unknown config key {key!r} in section [{section}]")
    return values


def _floats(text) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip() != "")
    except ValueError as exc:
        raise UsageError(f"not a number list: {text!r}") from exc


def resolve_config(argv: list) -> RunConfig:
    args = build_parser().parse_args(normalize_argv(list(argv)))
    if args.action not in ACTIONS[args.group]:
        raise UsageError(f"unknown action {args.action!r} for {args.group}; "
                         f"choose from {', '.join(ACTIONS[args.group])}")
    values = _read_config_file(args.config, args.group, args.action) if args.config else {}
    for key in list(_OPTIONS) + ["out_dir", "seed"]:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    allowed = _ACTION_KEYS[(args.group, args.action)] | _COMMON_KEYS
    extra = sorted(k for k in values if k not in allowed)
    if extra:
        raise UsageError(f"{args.group} {args.action} does not take: {', '.join(extra)}")
    for key, v in list(values.items()):
        typ = _OPTIONS.get(key, (int if key == "seed" else str, None))[0]
        try:
            values[key] = typ(v)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {v!r}") from exc

    model = values.pop("model", None)
    if model is None:
        model = "normal_form" if ({"alpha", "omega", "remainder"} & set(values)
                                  or args.group in ("certify", "plot")
                                  and args.action in ("liouville", "plane", "qp_projection",
                                                      "sphere", "plane3d", "foliation_slice")) \
            else "ham1"
    if model not in MODEL_FACTORIES:
        raise UsageError(f"unknown model {model!r}; choose from {', '.join(sorted(MODEL_FACTORIES))}")
    mp = {}
    for key in ("k", "b", "alpha", "omega"):
        if key in values:
            mp[key] = values.pop(key)
    if "remainder" in values:
        try:
            mp["remainder"] = parse_remainder(values.pop("remainder"))
        except (ValueError, IndexError) as exc:
            raise UsageError(f"bad remainder: {exc}") from exc
    energies = values.pop("energies", None)
    energy = values.pop("energy", None)
    if energies is not None and energy is not None:
        raise UsageError("give --energy or --energies, not both")
    text = energies if energies is not None else energy
    evals = _floats(text) if text is not None else _default_energies(args.group, args.action)
    if not evals:
        raise UsageError("empty energy list")
    icfg_kw = {}
    if "method" in values:
        icfg_kw["method"] = values.pop("method")
    if "rtol" in values:
        icfg_kw["rel_tol"] = values.pop("rtol")
    if "atol" in values:
        icfg_kw["abs_tol"] = values.pop("atol")
    try:
        icfg = flow.IntegratorConfig(**icfg_kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = values.pop("out_dir", "out")
    seed = int(values.pop("seed", 0))
    return RunConfig(args.group, args.action, model, mp, evals, icfg, values, str(out_dir), seed)


def _default_energies(group, action):
    if group == "plot" and action in ("hill", "qp_projection"):
        return (-0.01, 0.0, 0.01)
    if group == "certify" and action == "liouville":
        return (1e-5, 1e-4)
    return (0.01,)


def _model(cfg: RunConfig):
    try:
        return make_model(cfg.model, **cfg.model_params)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad parameters for model {cfg.model}: {exc}") from exc


def _params(cfg: RunConfig) -> NormalFormParams:
    if cfg.model != "normal_form":
        raise UsageError(f"{cfg.group} {cfg.action} works in the normal form (use --alpha/--omega)")
    m = _model(cfg)
    return m.normal_form


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def build_id() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "0+unknown"
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{version}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return version


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def write_report(cfg: RunConfig, body: dict, ok: bool, wall: float) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {"build": build_id(), "command": f"{cfg.group} {cfg.action}", "ok": bool(ok),
              "config": cfg.echo(), "result": body, "wall_time_s": round(wall, 3)}
    path = out / f"{cfg.group}_{cfg.action}.json"
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return path


def _tag(E) -> str:
    return f"{E:+.3e}".replace("+", "p").replace("-", "m").replace(".", "_")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_model_info(cfg: RunConfig) -> tuple:
    model = _model(cfg)
    eq = classify_equilibrium(model, model.equilibrium)
    body = {"model": model.name, "params": model.params, "equilibrium": model.equilibrium,
            "critical_energy": model.critical_energy}
    if isinstance(eq, SaddleCenter):
        body.update(kind="saddle_center", alpha=eq.alpha, omega=eq.omega,
                    eigenvalues=[[float(v.real), float(v.imag)] for v in eq.eigenvalues])
    else:
        body.update(kind="other", eigenvalues=[[float(v.real), float(v.imag)]
                                               for v in eq.eigenvalues])
    print(f"{model.name}: {body['kind']} at {np.round(model.equilibrium, 12).tolist()}, "
          f"critical energy {model.critical_energy:.12g}")
    if body["kind"] == "saddle_center":
        print(f"  alpha = {body['alpha']:.12g}, omega = {body['omega']:.12g}")
    return body, True


def _orbit_curve(model, orb, cfg, n=4001):
    traj = flow.integrate(model, orb.state, (0.0, orb.period), cfg)
    c = traj.state_at(np.linspace(0.0, orb.period, n))
    c[-1] = c[0]
    return traj, c


def cmd_orbit(cfg: RunConfig) -> tuple:
    model = _model(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    icfg = cfg.integrator
    results, ok = [], True
    for E in cfg.energies:
        if cfg.action == "p2":
            orb = orbits.lyapunov_p2(model, E, icfg)
            traj = flow.integrate(model, orb.state, (0.0, orb.period), icfg)
            csv = out / f"orbit_p2_{_tag(E)}.csv"
            flow.write_trajectory_csv(traj, csv, n_samples=2001)
            entry = orb.to_dict()
            entry["csv"] = str(csv)
            ok &= orb.residual < 1e-9 and orb.cz is not None and orb.stability is not None
            print(f"P2 E={E:g}: period {orb.period:.10g}, action {orb.action:.10g}, "
                  f"CZ {orb.cz.index if orb.cz else None}, {orb.stability}, residual {orb.residual:.2e}")
        elif cfg.action == "p3":
            if model.name != "ham1":
                raise UsageError("orbit p3 is available for ham1")
            if model.params.get("k", -1.0) != -1.0:
                raise UsageError("orbit p3 is set up for k = -1")
            orb = orbits.ham1_p3(E, icfg)
            p2 = orbits.lyapunov_p2(model, E, icfg, with_index=False)
            traj, curve = _orbit_curve(model, orb, icfg)
            link = orbits.linking_number(curve, GLOBAL, model, E)
            csv = out / f"orbit_p3_{_tag(E)}.csv"
            flow.write_trajectory_csv(traj, csv, n_samples=2001)
            entry = orb.to_dict()
            entry.update(linking_vs_p2=link, action_p2=p2.action, csv=str(csv),
                         min_x2=float(curve[:, 1].min()))
            ok &= orb.residual < 1e-9 and orb.action > p2.action
            print(f"P3 E={E:g}: period {orb.period:.10g}, action {orb.action:.10g} "
                  f"(P2 {p2.action:.10g}), CZ {orb.cz.index if orb.cz else None}, linking {link}")
        else:
            hcfg = orbits.HomoclinicConfig(integrator=icfg)
            res = orbits.find_homoclinic(model, E, hcfg)
            t, s = res.states(2000)
            csv = out / f"orbit_homoclinic_{_tag(E)}.csv"
            energy = model.value(s)
            np.savetxt(csv, np.column_stack([t, s, energy - E]), delimiter=",",
                       header="t,c0,c1,c2,c3,energy_error", comments="")
            entry = {"energy": E, "symmetric_point": res.symmetric_point,
                     "crossing_time": res.crossing_time, "fiber_phase": res.fiber_phase,
                     "symmetry_residual": res.symmetry_residual,
                     "match_residual": res.match_residual, "csv": str(csv)}
            ok &= res.symmetry_residual < 1e-8 and res.match_residual < 1e-4
            print(f"homoclinic E={E:g}: half time {res.crossing_time:.8g}, symmetry residual "
                  f"{res.symmetry_residual:.2e}, match residual {res.match_residual:.2e}")
        results.append(entry)
    return {"orbits": results}, ok


def cmd_certify(cfg: RunConfig) -> tuple:
    o = cfg.options
    if cfg.action == "liouville":
        params = _params(cfg)
        cs = _floats(o["cs"]) if "cs" in o else (0.0, 0.5)
        rep = liouville.certify_liouville(params, o.get("delta0", 0.05), cfg.energies, cs,
                                          o.get("samples", 10_000), cfg.seed)
        margins = [lv["lemmas"][k] for e in rep["stage_one"] for lv in e["levels"]
                   for k in ("remainder_margin", "radial_margin", "cutoff_margin")]
        ok = rep["ok"] and all(m > 0 for m in margins)
        for e in rep["stage_one"]:
            for lv in e["levels"]:
                print(f"stage one c={e['c']:g} E={lv['E']:g}: min dK.Y = {lv['min_dKY']:.3e}, "
                      f"residual {e['liouville_residual']:.1e}")
        s2 = rep["stage_two"]
        print(f"stage two E={s2['E_bar']:.3e} eps={s2['epsilon']:.3e}: min dK.Y = "
              f"{s2['min_dKY']:.3e}, residual {s2['liouville_residual']:.1e}")
        return rep, ok
    if cfg.action == "convexity":
        model = _model(cfg)
        if model.name not in ("ham1", "ham2"):
            raise UsageError("certify convexity is available for ham1 and ham2")
        rng = np.random.default_rng(cfg.seed)
        samples = geometry.critical_level_sampler(model, o.get("samples", 10_000), rng)
        res = geometry.convexity_scan(model, samples, o.get("exclusion", 0.05))
        print(f"{model.name}: min restricted Hessian eigenvalue {res.min_eigenvalue:.6g} "
              f"over {res.n_tested} samples ({res.n_skipped} excluded)")
        return asdict(res), res.min_eigenvalue > 0
    if cfg.action == "plane":
        params = _params(cfg)
        out = []
        ok = True
        for E in cfg.energies:
            hs = pseudoplanes.h_star(params, E)
            prof = pseudoplanes.solve_profile(params, E, o.get("h0", 0.5 * hs))
            plane = pseudoplanes.assemble_plane(prof)
            ds = o.get("ds", 5e-4)
            cr_fine = pseudoplanes.verify_cr_equation(prof, ds)
            cr_coarse = pseudoplanes.verify_cr_equation(prof, 2 * ds)
            order = float(np.log2(cr_coarse.residual / cr_fine.residual))
            hemi = pseudoplanes.hemisphere_transversality(params, E, 1000,
                                                          np.random.default_rng(cfg.seed))
            energy = pseudoplanes.plane_energy(prof)
            level = pseudoplanes.verify_on_level(plane, params, E)
            entry = {"energy": E, "h_star": hs, "r_E": prof.r_E, "T2E": prof.T2E,
                     "h_s_min": prof.h[0], "f_s_max": prof.f[-1], "plane_energy": energy,
                     "level_residual": level, "cr_residual": cr_fine.residual, "ds": ds,
                     "cr_residual_2ds": cr_coarse.residual, "cr_order": order,
                     "laplacian_residual": cr_fine.laplacian_residual,
                     "hemisphere_signs": hemi.signs_correct, "hemisphere_min_rate": hemi.min_rate}
            tol_level = 1e-12 if params.is_quadratic else 1e-10
            ok &= (level < tol_level and cr_fine.residual < 1e-6 and 1.8 < order < 2.2
                   and hemi.signs_correct and abs(energy - prof.T2E) < 1e-8)
            csv = Path(cfg.out_dir) / f"plane_profile_{_tag(E)}.csv"
            csv.parent.mkdir(parents=True, exist_ok=True)
            prof.to_csv(csv)
            entry["csv"] = str(csv)
            out.append(entry)
            print(f"plane E={E:g}: h* {hs:.8g}, r_E {prof.r_E:.8g}, energy {energy:.10g}, "
                  f"level {level:.1e}, CR {cr_fine.residual:.2e} (order {order:.2f})")
        return {"planes": out}, ok
    # index
    model = _model(cfg)
    n_dir = o.get("directions", 16)
    out, ok = [], True
    for E in cfg.energies:
        orb = orbits.lyapunov_p2(model, E, cfg.integrator, with_index=False)
        cz = frame_index.cz_index(model, orb, n_dir, cfg.integrator)
        P, stab = frame_index.monodromy_transverse(model, orb, cfg.integrator)
        ev = np.linalg.eigvals(P)
        entry = {"energy": E, "orbit": "p2", "cz": cz.index, "interval": cz.interval,
                 "degenerate_flag": cz.degenerate_flag, "stability": stab,
                 "monodromy_eigenvalues": [[float(v.real), float(v.imag)] for v in ev]}
        ok &= cz.index == 2 and not cz.degenerate_flag
        print(f"P2 E={E:g}: CZ {cz.index}, interval [{cz.interval[0]:.6f}, {cz.interval[1]:.6f}], {stab}")
        out.append(entry)
    return {"indices": out}, ok


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "saddlecenter"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})


def _projection_edge(params: NormalFormParams, E: float) -> float:
    """``I1`` where the level meets ``I2 = 0``; the (q1, p1) shadow of ``K = E``
    is bounded by the hyperbola ``q1 p1 = I1``."""
    if E > 0:
        return i1_minus(params, E)
    if E == 0:
        return 0.0
    lin = -E / params.alpha
    if params.is_quadratic:
        return lin
    g = lambda I1: params.K(I1, 0.0) - E
    return float(brentq(g, 0.0, 4.0 * lin, xtol=1e-16))


def cmd_plot(cfg: RunConfig) -> tuple:
    plt = _pyplot()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.action}.svg"
    o = cfg.options
    body = {"svg": str(path)}
    if cfg.action == "hill":
        model = _model(cfg)
        res = o.get("resolution", 512)
        fig, axes = plt.subplots(1, len(cfg.energies), figsize=(4 * len(cfg.energies), 4),
                                 squeeze=False)
        counts = []
        for ax, E in zip(axes[0], cfg.energies):
            reg = geometry.hill_region(model, E, resolution=res)
            xs, ys = reg.grid
            ax.contourf(xs, ys, (reg.labels > 0).astype(float), levels=[0.5, 1.5],
                        colors=["0.85"])
            for poly in reg.boundary:
                ax.plot(poly[:, 0], poly[:, 1], "k-", lw=0.8)
            ax.plot(*model.equilibrium[:2], "k.", ms=4)
            ax.set_title(f"E = {E:g}: {reg.counts_label}")
            ax.set_aspect("equal")
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")
            counts.append(reg.counts_label)
        body["components"] = counts
    elif cfg.action == "qp_projection":
        params = _params(cfg)
        rng = np.random.default_rng(cfg.seed)
        fig, ax = plt.subplots(figsize=(5, 5))
        lim = 0.3
        q = np.linspace(-lim, lim, 801)
        for E, style in zip(cfg.energies, ("-", "--", ":", "-.")):
            pts = geometry.normal_form_level_samples(params, E, o.get("samples", 400), rng, lim)
            proj = geometry.qp_projection(pts)
            ax.plot(proj.q1, proj.p1, ".", ms=1.5, label=f"E = {E:g}")
            I1b = _projection_edge(params, E)
            if I1b != 0:
                qq = q[np.abs(q) > abs(I1b) / lim]
                ax.plot(qq, I1b / qq, "k" + style, lw=0.6)
            else:
                ax.axhline(0.0, color="k", lw=0.6)
                ax.axvline(0.0, color="k", lw=0.6)
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_xlabel("q1")
        ax.set_ylabel("p1")
        ax.set_aspect("equal")
        ax.legend(loc="upper right", fontsize=7)
    elif cfg.action == "sphere":
        params = _params(cfg)
        E = cfg.energies[0]
        sph = geometry.sphere_NdeltaE(params, E, o.get("delta", 0.05), o.get("samples", 500))
        fig = plt.figure(figsize=(5, 5))
        ax = fig.add_subplot(projection="3d")
        p = sph.points
        ax.scatter(p[:, 0], p[:, 1], p[:, 3], s=2, c=p[:, 0] - p[:, 2], cmap="coolwarm")
        ax.set_xlabel("q1")
        ax.set_ylabel("q2")
        ax.set_zlabel("p2")
        body.update(residual=sph.residual, plane_residual=sph.plane_residual)
    elif cfg.action == "plane3d":
        params = _params(cfg)
        E = cfg.energies[0]
        hs = pseudoplanes.h_star(params, E)
        fig = plt.figure(figsize=(5, 5))
        ax = fig.add_subplot(projection="3d")
        for branch, color in zip(pseudoplanes.BRANCHES, ("tab:blue", "tab:red")):
            prof = pseudoplanes.solve_profile(params, E, 0.5 * hs, direction=branch)
            s = np.linspace(-1.0, 2.0, 40)
            u = pseudoplanes.assemble_plane(prof, 48, s)["u"]
            ax.plot_wireframe(u[..., 0], u[..., 1], u[..., 3], color=color, lw=0.3)
        t = np.linspace(0, 1, 200)
        rE = pseudoplanes.r_E(params, E)
        ax.plot(0 * t, rE * np.cos(2 * np.pi * t), -rE * np.sin(2 * np.pi * t), "k-", lw=1.2)
        ax.set_xlabel("q1")
        ax.set_ylabel("q2")
        ax.set_zlabel("p2")
    else:  # foliation_slice
        params = _params(cfg)
        E = cfg.energies[0]
        fig, ax = plt.subplots(figsize=(5, 5))
        hs = pseudoplanes.h_star(params, E)
        lim = 3 * hs
        q = np.linspace(-lim, lim, 801)
        # hyperbolas q1 p1 = I1 traced by the flow in the (q1, p1) slice
        for I1 in np.linspace(-0.9, 0.9, 7) * hs ** 2:
            if I1 == 0:
                continue
            qq = q[np.abs(q) > abs(I1) / lim]
            ax.plot(qq, I1 / qq, color="0.7", lw=0.5)
        ax.axhline(0.0, color="k", lw=0.8)
        ax.axvline(0.0, color="k", lw=0.8)
        # the rigid planes project onto the antidiagonal segment |q1| <= h*
        ax.plot([-hs, hs], [hs, -hs], "b-", lw=2, label="planes U1, U2")
        ax.plot([0], [0], "ko", ms=4, label="P2")
        for d in (0.5 * hs, hs):
            ax.plot(q, d - q, "g:", lw=0.7)
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.set_xlabel("q1")
        ax.set_ylabel("p1")
        ax.legend(loc="upper right", fontsize=7)
    _save(fig, path)
    plt.close(fig)
    print(f"wrote {path}")
    return body, True


_COMMANDS = {"model": cmd_model_info, "orbit": cmd_orbit, "certify": cmd_certify, "plot": cmd_plot}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        body, ok = _COMMANDS[cfg.group](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (orbits.OrbitError, flow.IntegrationError, flow.RootPolishError,
            pseudoplanes.ProfileError, liouville.SamplingError, geometry.GeometryError,
            frame_index.CriticalPointError, frame_index.DirectionLossError,
            orbits.LinkingError, ConvergenceError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        write_report(cfg, {"error": f"{type(exc).__name__}: {exc}"}, False,
                     time.perf_counter() - t0)
        return EXIT_NUMERICAL
    path = write_report(cfg, body, ok, time.perf_counter() - t0)
    print(f"report: {path}")
    return EXIT_OK if ok else EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
