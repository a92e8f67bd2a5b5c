"""Command-line front end: ``opticqm <subcommand> [flags] --out report.json``.

Parameters come from built-in defaults, then ``--config`` (a JSON document
``{"seed": ..., "params": {...}}``), then explicit flags.  The merged
parameters are schema-checked before anything runs.  Exit codes: 0 success,
1 numerical failure (JSON error report on stdout), 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import schemas

OUT_ENV = "OPTICQM_OUT"


class ConfigError(ValueError):
    pass


def _frac(text) -> Fraction:
    try:
        f = Fraction(str(text).replace(" ", ""))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational number: {text!r}") from exc
    return f


def _frac_str(text) -> str:
    return str(_frac(text))


def _floats(text):
    return [float(v) for v in str(text).split(",")]


DEFAULTS = {
    "photon": {"n": 32, "steps": 20, "cfl": 0.25, "order": 4, "k_index": 1, "helicity": 1, "length": 1.0},
    "scalar": {"n": 32, "steps": 20, "cfl": 0.25, "m": 1.0, "k_index": 1, "hbar": 1.0, "c": 1.0},
    "rays": {"medium": "constant", "n": 1.0, "n0sq": 1.0, "slope": [0.0, 0.0, 0.5], "launch": "point",
             "source": [0.0, 0.0, 0.0], "x0": [0.0, 0.0, 1.0], "direction": [1.0, 0.0, 1.0],
             "tau": [1.0, 10.0], "dtau": 0.01},
    "huygens": {"a": "1", "m": "2", "n": 32, "tests": 5},
    "modes": {"domain": "square", "bc": "dirichlet", "h": "1/64", "count": 6, "a": 1.0, "b": 1.0,
              "R": 1.0, "r": 0.5},
    "chladni": {"domain": "square", "bc": "dirichlet", "h": "1/64", "a": 1.0, "b": 1.0, "R": 1.0,
                "r": 0.5, "modes": [1], "coefficients": [1.0], "basis": "auto"},
    "ck": {"n": 33, "k": 2.0, "m": 1, "kz": 0.0, "half_width": 1.0},
    "knots": {"slope": "3/2", "n": 65, "R": 1.0, "start": [1.4, 0.0, 0.0], "max_length": 40.0,
              "link": False, "segments": 512},
    "tise": {"potential": "box", "h": "1/256", "omega": 1.0, "half_width": 8.0, "m": 1.0, "hbar": 1.0,
             "tol": 1e-6, "max_iter": 100000},
}

# flag name -> (param key, converter); converters turn text into JSON values
FLAGS = {
    "photon": {"n": int, "steps": int, "cfl": float, "order": int, "k_index": int, "helicity": int,
               "length": float},
    "scalar": {"n": int, "steps": int, "cfl": float, "m": float, "k_index": int, "hbar": float, "c": float},
    "rays": {"medium": str, "n": float, "n0sq": float, "slope": _floats, "launch": str, "source": _floats,
             "x0": _floats, "direction": _floats, "tau": _floats, "dtau": float},
    "huygens": {"a": _frac_str, "m": _frac_str, "n": int, "tests": int},
    "modes": {"domain": str, "bc": str, "h": _frac_str, "count": int, "a": float, "b": float,
              "R": float, "r": float},
    "chladni": {"domain": str, "bc": str, "h": _frac_str, "a": float, "b": float, "R": float, "r": float,
                "modes": lambda s: [int(v) for v in s.split(",")], "coefficients": _floats, "basis": str},
    "ck": {"n": int, "k": float, "m": int, "kz": float, "half_width": float},
    "knots": {"slope": _frac_str, "n": int, "R": float, "start": _floats, "max_length": float,
              "link": None, "segments": int},
    "tise": {"potential": str, "h": _frac_str, "file": str, "omega": float, "half_width": float,
             "m": float, "hbar": float, "tol": float, "max_iter": int},
}

RATIONAL = {"modes": ("h",), "chladni": ("h",), "tise": ("h",), "knots": ("slope",),
            "huygens": ("a", "m")}

CHOICES = {"domain": schemas.PARAMS["modes"]["properties"]["domain"]["enum"],
           "bc": ["dirichlet", "neumann", "periodic"], "medium": ["constant", "linear"],
           "launch": ["point", "plane"], "basis": ["auto", "solver", "separable"], "potential": ["box", "harmonic", "sampled"]}

HELP = {
    "photon": "evolve a circularly polarised plane wave (photon wavefunction)",
    "scalar": "Klein-Gordon plane wave: conservation laws and stationary identities",
    "rays": "trace a ray bundle; Jacobian and transport amplitude by two routes",
    "huygens": "gauge chains d'Alembert -> telegrapher -> Klein-Gordon, symbolic and numeric",
    "modes": "membrane eigenvalues with multiplicity clusters",
    "chladni": "nodal (Chladni) lines of a mode or a combination, as CSV and SVG",
    "ck": "Chandrasekhar-Kendall cylinder field: residuals and nodal centerline",
    "knots": "trace a torus field line, extract windings; optional Hopf link check",
    "tise": "variational ground state of a 1-D potential",
}


def _show(v) -> str:
    return ",".join(map(str, v)) if isinstance(v, list) else str(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="opticqm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in DEFAULTS:
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name])
        sp.add_argument("--config", help="JSON config file {\"seed\": int, \"params\": {...}}")
        sp.add_argument("--out", help=f"report path (relative paths resolve under ${OUT_ENV})")
        sp.add_argument("--seed", type=int, help="seed for randomised test functions")
        sp.add_argument("--threads", type=int, default=1, help="accepted for compatibility; results do not depend on it")
        for flag, conv in FLAGS[name].items():
            opt = "--" + flag.replace("_", "-")
            dflt = DEFAULTS[name].get(flag)
            hint = "required for sampled potentials" if dflt is None else f"default: {_show(dflt)}"
            if conv is None:
                sp.add_argument(opt, dest=flag, action="store_true", default=None, help=hint)
            elif flag in CHOICES and conv is str:
                choices = CHOICES[flag]
                if name == "chladni" and flag == "domain":
                    choices = [c for c in choices if c != "interval"]
                sp.add_argument(opt, dest=flag, choices=choices, default=None, help=hint)
            else:
                sp.add_argument(opt, dest=flag, type=str, default=None, help=hint)
    return ap


def resolve(args) -> tuple:
    """Merged, validated ``(params, seed)``."""
    name = args.command
    params = dict(DEFAULTS[name])
    seed = 0
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            jsonschema.validate(cfg, schemas.CONFIG)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config: {exc.message}") from exc
        seed = cfg.get("seed", seed)
        params.update(cfg.get("params", {}))
    if args.seed is not None:
        seed = args.seed
    for flag, conv in FLAGS[name].items():
        val = getattr(args, flag, None)
        if val is None:
            continue
        try:
            params[flag] = val if conv is None or not isinstance(val, str) else conv(val)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"--{flag.replace('_', '-')}: {exc}") from exc
    for key in RATIONAL.get(name, ()):
        if isinstance(params.get(key), str):
            params[key] = _frac_str(params[key])
    try:
        jsonschema.validate(params, schemas.PARAMS[name])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"params: {exc.message}") from exc
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be positive")
    return params, int(seed)


def _out_path(args) -> Path:
    p = Path(args.out) if args.out else Path(f"{args.command}.json")
    if not p.is_absolute() and os.environ.get(OUT_ENV):
        p = Path(os.environ[OUT_ENV]) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _clean(v):
    """Plain JSON types; numpy scalars and arrays converted, floats kept exact."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else None
    if isinstance(v, Fraction):
        return str(v)
    return v


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


# ------------------------------------------------------------ subcommands

def run_photon(p, seed, out):
    from .grid import Grid
    from .maxwell_rs import (circular_plane_wave, continuity_residual, evolve_series,
                             total_energy)
    from .grid import divergence
    n, L = p["n"], p["length"]
    g = Grid.box([0, 0, 0], [L] * 3, [n] * 3, "periodic")
    f0 = circular_plane_wave(g, p["k_index"], helicity=p["helicity"])
    dt = p["cfl"] * g.h
    states = evolve_series(f0, dt, p["steps"], order=p["order"])
    fT = states[-1]
    exact = circular_plane_wave(g, p["k_index"], helicity=p["helicity"], t=p["steps"] * dt)
    e0 = total_energy(f0)
    drift = abs(total_energy(fT) - e0) / e0
    div = max(float(np.abs(divergence(s.F, p["order"]).values).max()) for s in states)
    overlap = np.sum(np.conj(exact.F.values) * fT.F.values)
    phase = abs(float(np.angle(overlap)))
    cont = continuity_residual(states[-3:], dt, e0)
    return {"energy": e0, "energy_drift": drift, "div_max": div, "phase_error": phase,
            "continuity_residual": cont, "dt": dt}, []


def run_scalar(p, seed, out):
    from .grid import Grid, ScalarField
    from .scalar_field import (continuity_residual_scalar, dalembert_residual, evolve_kg,
                               kg_current, plane_wave_state, stationary_state, stress_energy,
                               total_charge)
    n = p["n"]
    g = Grid.box([0, 0, 0], [1, 1, 1], [n] * 3, "periodic")
    k = 2 * np.pi * p["k_index"]
    c, m, hbar = p["c"], p["m"], p["hbar"]
    omega = c * np.sqrt(k * k + m * m)
    s0 = plane_wave_state(g, [k, 0, 0], omega, c=c, m=m, hbar=hbar)
    dt = p["cfl"] * g.h / c
    states = evolve_kg(s0, dt, p["steps"])
    q0 = total_charge(kg_current(states[0])[0])
    q1 = total_charge(kg_current(states[-1])[0])
    x, y, z = g.mesh()
    psi = ScalarField(g, np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y) + 0.5)
    st = stationary_state(psi, omega, c=c, m=max(m, 1.0), hbar=hbar)
    _, t0i = stress_energy(st)
    j0, _ = kg_current(st, normalized=True)
    target = hbar * omega / (st.m * c) * np.asarray(psi.values) ** 2
    return {"continuity_residual": continuity_residual_scalar(states, dt),
            "dalembert_residual": dalembert_residual(states, dt),
            "charge_drift": abs(q1 - q0) / abs(q0),
            "stationary_t0i_max": float(np.abs(t0i.values).max()),
            "stationary_j0_error": float(np.abs(j0.values - target).max()), "dt": dt}, []


def run_rays(p, seed, out):
    from .eikonal_rays import (MediumIndex, plane_launch, point_source_launch, ray_jacobian,
                               transport_amplitude)
    if p["medium"] == "constant":
        med = MediumIndex.constant(p["n"])
    else:
        med = MediumIndex.linear(p["n0sq"], p["slope"])
    if p["launch"] == "point":
        src = np.asarray(p["source"], float)
        d = np.asarray(p["direction"], float)
        d = d / np.linalg.norm(d)
        launch = point_source_launch(src, med)
        # start on the ray where tau = tau0 for a unit-index point source
        x0 = src + d * p["tau"][0] * float(med.n(src)[0])
        span = tuple(p["tau"])
    else:
        launch = plane_launch(p["direction"], med)
        x0 = np.asarray(p["x0"], float)
        span = (0.0, p["tau"][1] - p["tau"][0])
    path = ray_jacobian(x0, launch, med, span, p["dtau"])
    path, by_div, by_jac = transport_amplitude(path)
    agree = float(np.nanmax(np.abs(by_div / by_jac - 1.0)))
    csv_path = out.with_suffix(".csv")
    tab = np.column_stack([path.tau, path.x, path.phase, path.J, by_div, by_jac])
    _write_csv(csv_path, ["tau", "x", "y", "z", "phase", "J", "amp_divergence", "amp_jacobian"], tab)
    picks = np.unique(np.linspace(0, len(path.tau) - 1, 10).astype(int))
    return {"tau": path.tau[picks], "J": path.J[picks], "amplitude_divergence": by_div[picks],
            "amplitude_jacobian": by_jac[picks], "route_agreement": agree,
            "speed_defect_max": float(np.abs(path.speed_defect(med)).max())}, [csv_path.name]


def run_huygens(p, seed, out):
    import sympy as sp
    from .grid import Grid
    from .huygens_equiv import (GaugeFactor, build_telegrapher, conjugate_operator, dalembert,
                                equivalence_residual, random_trig_functions, telegrapher_to_kg)
    a = sp.Rational(p["a"])
    m = sp.Rational(p["m"])
    _, chain, gap = build_telegrapher(a)
    kg = telegrapher_to_kg(m)
    L = dalembert()
    gfac = GaugeFactor.temporal(a)
    Lt = conjugate_operator(L, gfac)
    res = []
    for n in (p["n"], 2 * p["n"]):
        g = Grid.box([0, 0, 0], [2 * np.pi] * 3, [n, 3, 3], "periodic")
        rng = np.random.default_rng(seed)
        tests = random_trig_functions(p["tests"], g, rng, kmax=2)
        dt = g.h / 2
        times = np.arange(5) * dt
        res.append(equivalence_residual(L, Lt, gfac, tests, g, times))
    order = float(np.log2(res[0] / res[1])) if res[1] > 0 else None
    return {"chain": chain.tables(), "gap": {k: str(v) for k, v in gap.items()},
            "kg_chain": kg.tables(), "residuals": res, "order": order}, []


def _problem(p):
    from .chladni_modes import MembraneProblem
    bc = p["bc"]
    if p["domain"] == "torus":
        bc = "periodic"
    return MembraneProblem(p["domain"], bc, float(Fraction(p["h"])), p["a"], p["b"], p["R"], p["r"])


def run_modes(p, seed, out):
    from .chladni_modes import assemble, solve_modes
    op = assemble(_problem(p))
    modes = solve_modes(op, p["count"])
    return {"eigenvalues": [md.eigenvalue for md in modes],
            "cluster_ids": [md.cluster_id for md in modes],
            "multiplicities": [md.multiplicity for md in modes],
            "residuals": [md.residual for md in modes], "unknowns": op.n}, []


def _split_wrapped(pts, closed, periods):
    """Break a periodic polyline where it jumps across the wrap."""
    seq = np.vstack([pts, pts[:1]]) if closed else pts
    jump = np.zeros(len(seq) - 1, dtype=bool)
    for a, L in enumerate(periods):
        if L is not None:
            jump |= np.abs(np.diff(seq[:, a])) > 0.5 * L
    if not jump.any():
        return [(pts, closed)]
    pieces, start = [], 0
    for i in np.flatnonzero(jump):
        pieces.append((seq[start:i + 1], False))
        start = i + 1
    pieces.append((seq[start:], False))
    return [q for q in pieces if len(q[0]) > 1]


def run_chladni(p, seed, out):
    from .chladni_modes import (assemble, nodal_set, nodal_stats, separable_align, solve_modes,
                                superpose)
    from .svg import domain_outline, emit_svg
    if len(p["modes"]) != len(p["coefficients"]):
        raise ConfigError("modes and coefficients need equal length")
    op = assemble(_problem(p))
    modes = solve_modes(op, max(p["modes"]) + 1)
    basis = p["basis"]
    if basis == "auto":
        rect = op.problem.domain in ("square", "rectangle") and op.problem.bc == "dirichlet"
        basis = "separable" if rect else "solver"
    if basis == "separable":
        modes = separable_align(modes, op)
    chosen = [modes[i] for i in p["modes"]]
    w = superpose(chosen, p["coefficients"], op)
    s = nodal_set(w, op.mask, source=f"modes {p['modes']}")
    comps, closed, length = nodal_stats(s)
    csv_path = out.with_suffix(".csv")
    rows = []
    for k, (pts, c) in enumerate(zip(s.polylines, s.closed)):
        for j, (x, y) in enumerate(pts):
            rows.append([k, j, float(x), float(y), int(c)])
    _write_csv(csv_path, ["polyline", "vertex", "x", "y", "closed"], rows)
    draw, flags = [], []
    for pts, c in zip(s.polylines, s.closed):
        for q, cq in _split_wrapped(pts, c, s.periods):
            draw.append(q)
            flags.append(cq)
    svg_path = out.with_suffix(".svg")
    emit_svg(svg_path, draw, flags, domain_outline(p["domain"], p["a"], p["b"], p["R"], p["r"]))
    return {"eigenvalue": chosen[0].eigenvalue, "components": comps, "closed": closed, "length": length,
            "cluster_ids": [md.cluster_id for md in chosen]}, [csv_path.name, svg_path.name]


def run_ck(p, seed, out):
    from .ck_knots import (ck_build_cylinder, divergence_residual, force_free_residual,
                           nodal_intersection, radial_helmholtz_residual, radial_scalar,
                           vector_helmholtz_residual)
    from .grid import Grid
    w = p["half_width"]
    g = Grid.box([-w] * 3, [w] * 3, [p["n"]] * 3)
    f = ck_build_cylinder(g, p["k"], p["m"], p["kz"])
    pair = radial_scalar(f)
    rep = nodal_intersection(pair)
    rows, dev = [], 0.0
    for k, c in enumerate(rep.curves):
        dev = max(dev, float(np.hypot(c.points[:, 0], c.points[:, 1]).max()))
        for j, q in enumerate(c.points):
            rows.append([k, j, *map(float, q), int(c.closed)])
    csv_path = out.with_suffix(".csv")
    _write_csv(csv_path, ["curve", "point", "x", "y", "z", "closed"], rows)
    return {"force_free": force_free_residual(f), "divergence": divergence_residual(f),
            "vector_helmholtz": vector_helmholtz_residual(f),
            "radial_helmholtz": list(radial_helmholtz_residual(pair)),
            "centerlines": len(rep.curves), "max_radial_deviation": dev,
            "skipped": len(rep.skipped), "h": g.h}, [csv_path.name]


def run_knots(p, seed, out):
    from .ck_knots import (hopf_pair, linking_number, rational_slope, torus_field,
                           torus_winding, trace_field_line)
    from .grid import Grid
    slope = Fraction(p["slope"])
    n = p["n"]
    R = p["R"]
    g = Grid.box([-1.6 * R, -1.6 * R, -0.8 * R], [1.6 * R, 1.6 * R, 0.8 * R], [n, n, (n + 1) // 2])
    v = torus_field(g, float(slope), R)
    c = trace_field_line(v, p["start"], p["max_length"])
    res = {"closed": c.closed, "p": None, "q": None, "slope": None, "arc_length": c.arc_length,
           "points": len(c)}
    if c.closed:
        res["p"], res["q"] = torus_winding(c, R)
        res["slope"] = str(rational_slope(c, R))
    csv_path = out.with_suffix(".csv")
    _write_csv(csv_path, ["x", "y", "z"], c.points.tolist())
    files = [csv_path.name]
    if p["link"]:
        c1, c2 = hopf_pair(p["segments"])
        lk = linking_number(c1, c2)
        res["link"] = {"raw": lk.raw, "linking_number": lk.linking_number, "gap": lk.gap,
                       "reliable": lk.reliable}
    return res, files


def run_tise(p, seed, out):
    from .fieldio import read_field, write_field
    from .schrodinger_var import (Potential, discrete_ground_energy, functional_J,
                                  hj_integral_identity, minimize, sine_guess, tise_residual)
    h = float(Fraction(p["h"]))
    if p["potential"] == "box":
        pot = Potential.box(m=p["m"], hbar=p["hbar"])
        g = pot.grid(h)
    elif p["potential"] == "harmonic":
        pot = Potential.harmonic(p["omega"], p["half_width"], m=p["m"], hbar=p["hbar"])
        g = pot.grid(h)
    else:
        if "file" not in p:
            raise ConfigError("sampled potential needs --file")
        vf = read_field(p["file"])
        pot = Potential.sampled(vf.real, m=p["m"], hbar=p["hbar"])
        g = vf.grid
    s = minimize(pot, sine_guess(g), tol=p["tol"], max_iter=p["max_iter"])
    log_path = out.with_name(out.stem + "_log.csv")
    _write_csv(log_path, ["iteration", "E", "residual"],
               [[i, e, r] for i, (e, r) in enumerate(zip(s.log, s.residuals))])
    psi_csv, psi_json = write_field(out.with_name(out.stem + "_psi"), s.psi)
    return {"E": s.E, "iterations": s.iterations, "tise_residual": tise_residual(s, pot),
            "J": functional_J(s.psi, pot, s.E), "hj_identity": hj_integral_identity(s, pot),
            "discrete_ground": discrete_ground_energy(pot, g),
            "monotone": bool(np.all(np.diff(s.log) <= 0))}, [log_path.name, psi_csv.name, psi_json.name]


RUNNERS = {"photon": run_photon, "scalar": run_scalar, "rays": run_rays, "huygens": run_huygens,
           "modes": run_modes, "chladni": run_chladni, "ck": run_ck, "knots": run_knots,
           "tise": run_tise}


def _error(command, exc, code):
    rep = {"status": "error", "command": command, "kind": type(exc).__name__, "message": str(exc),
           "residual": _clean(getattr(exc, "residual", None))}
    best = getattr(exc, "best", None)
    if best is not None and getattr(best, "residuals", None):
        rep["residual"] = float(best.residuals[-1])
    jsonschema.validate(rep, schemas.ERROR)
    print(json.dumps(rep, sort_keys=True))
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params, seed = resolve(args)
    except ConfigError as exc:
        print(f"opticqm {args.command}: {exc}", file=sys.stderr)
        return 2
    out = _out_path(args)
    try:
        results, files = RUNNERS[args.command](params, seed, out)
    except ConfigError as exc:
        print(f"opticqm {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        return _error(args.command, exc, 1)
    report = {"status": "ok", "command": args.command, "version": schemas.SCHEMA_VERSION, "seed": seed,
              "params": _clean(params), "results": _clean(results), "files": files}
    jsonschema.validate(report, schemas.report_schema(args.command))
    out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
