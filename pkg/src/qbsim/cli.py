"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 integrator failure,
4 size budget exceeded.
"""
import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import energetics, lindblad, meanfield
from .config import ConfigError, load_config
from .errors import IntegrationError, SizeError, ValidationError
from .qops import build_collective_ops, build_site_operators
from .waveguide import build

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATOR, EXIT_SIZE = 0, 2, 3, 4
SPECTRUM_MAX_N = 40

EVOLVE_COLUMNS = ["t", "energy", "ergotropy", "trace_defect", "min_eig"]
EVOLVE_M_COLUMNS = ["t", "energy", "ergotropy", "mx", "my", "mz", "trace_defect", "min_eig"]
STEADY_COLUMNS = ["energy", "ergotropy", "degeneracy", "cp_flag"]
SPECTRUM_COLUMNS = ["re_lambda", "im_lambda"]
PHASE_COLUMNS = ["omega", "g", "phase", "omega_cri", "e_ss"]


def default_jobs():
    env = os.environ.get("QBSIM_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"QBSIM_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_parallel(fn, tasks, jobs):
    """Ordered map; results come back in task order regardless of completion order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _time_grid(cfg):
    return np.linspace(0.0, cfg.t_max, cfg.samples)


def _has_magnetization(cfg):
    return cfg.model in ("collective", "meanfield")


# evolve ---------------------------------------------------------------------


def _evolve_point(cfg):
    t_grid = _time_grid(cfg)
    if cfg.model == "meanfield":
        traj = meanfield.mf_evolve(
            meanfield.MeanFieldState.ground(), cfg.omega, cfg.g, cfg.n, t_grid, cfg.Gamma
        )
        norms = np.linalg.norm(traj.m, axis=1)
        return [
            [t, e, w, *m, 0.0, 0.5 - r]
            for t, e, w, m, r in zip(traj.t, traj.energy, traj.ergotropy, traj.m, norms)
        ]

    spec = cfg.model_spec()
    G = build(cfg.model, spec)
    if cfg.model == "collective":
        N = spec.N
        J = build_collective_ops(N)
        H_B = energetics.collective_hamiltonian(N, spec.omega0)
        rho0, scale = J.ground_state(), N
    else:
        H_B = energetics.site_hamiltonian(spec.N, spec.omega0)
        rho0, scale = build_site_operators(spec.N).ground_state(), spec.N

    def record(t, rho):
        rep = energetics.ergotropy(0.5 * (rho + rho.conj().T), H_B)
        tr, min_eig, _ = lindblad.state_diagnostics(rho)
        row = [t, rep.energy / scale, rep.ergotropy / scale]
        if cfg.model == "collective":
            row += [float(np.trace(O @ rho).real) / N for O in (J.Jx, J.Jy, J.Jz)]
        return row + [tr, min_eig]

    traj = lindblad.evolve(
        G,
        rho0,
        t_grid,
        rtol=cfg.tolerances["rtol"],
        atol=cfg.tolerances["atol"],
        record=record,
        keep_states=False,
    )
    return traj.records


def cmd_evolve(cfg, jobs=1):
    sweep_cols = [a.name for a in cfg.sweep]
    cols = sweep_cols + (EVOLVE_M_COLUMNS if _has_magnetization(cfg) else EVOLVE_COLUMNS)
    points = cfg.grid()
    results = run_parallel(_evolve_point, [cfg.with_point(p) for p in points], jobs)
    rows = []
    for p, block in zip(points, results):
        rows += [[p[c] for c in sweep_cols] + r for r in block]
    return cols, rows


# steady ---------------------------------------------------------------------


def _steady_point(cfg):
    spec = cfg.model_spec()
    G = build(cfg.model, spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rho, degeneracy = lindblad.steady_state(G, rel_tol=cfg.tolerances["null_tol"])
    if cfg.model == "collective":
        H_B, scale = energetics.collective_hamiltonian(spec.N, spec.omega0), spec.N
    else:
        H_B, scale = energetics.site_hamiltonian(spec.N, spec.omega0), spec.N
    rep = energetics.ergotropy(rho, H_B)
    return [rep.energy / scale, rep.ergotropy / scale, degeneracy, G.rates.cp_flag]


def cmd_steady(cfg, jobs=1):
    if cfg.model not in ("single", "collective"):
        raise ConfigError(f"field 'model': steady needs 'single' or 'collective', got {cfg.model!r}")
    sweep_cols = [a.name for a in cfg.sweep]
    points = cfg.grid()
    results = run_parallel(_steady_point, [cfg.with_point(p) for p in points], jobs)
    rows = [[p[c] for c in sweep_cols] + r for p, r in zip(points, results)]
    return sweep_cols + STEADY_COLUMNS, rows


# spectrum -------------------------------------------------------------------


def cmd_spectrum(cfg, jobs=1):
    if cfg.model != "collective":
        raise ConfigError(f"field 'model': spectrum needs 'collective', got {cfg.model!r}")
    if cfg.n_atoms > SPECTRUM_MAX_N:
        raise SizeError(f"spectrum is limited to n_atoms <= {SPECTRUM_MAX_N}, got {cfg.n_atoms}")
    if cfg.sweep:
        raise ConfigError("field 'sweep': spectrum does not take sweep axes")
    G = build("collective", cfg.model_spec())
    ev = lindblad.spectrum(G)
    return SPECTRUM_COLUMNS, [[float(z.real), float(z.imag)] for z in ev]


# phase diagram --------------------------------------------------------------

DEFAULT_PHASE_AXES = {"omega": (0.0, 3.0, 31), "g": (-3.0, 2.0, 21)}


def _phase_axis(cfg, name):
    for axis in cfg.sweep:
        if axis.name == name:
            return axis.values()
    lo, hi, steps = DEFAULT_PHASE_AXES[name]
    return [float(v) for v in np.linspace(lo, hi, steps)]


def cmd_phase_diagram(cfg, jobs=1):
    if cfg.model != "meanfield":
        raise ConfigError(f"field 'model': phase-diagram needs 'meanfield', got {cfg.model!r}")
    extra = {a.name for a in cfg.sweep} - {"omega", "g"}
    if extra:
        raise ConfigError(f"field 'sweep': phase-diagram only sweeps omega and g, got {sorted(extra)}")
    omegas, gs = _phase_axis(cfg, "omega"), _phase_axis(cfg, "g")
    rows = []
    for om in omegas:
        for g in gs:
            pp = meanfield.classify_phase(om, g, cfg.n, cfg.Gamma)
            label = pp.phase + ("_degenerate" if pp.degenerate else "")
            rows.append([om, g, label, pp.Omega_cri, pp.E_ss])
    for g in gs:
        rows.append([meanfield.critical_drive(g, cfg.n, cfg.Gamma), g, "boundary", meanfield.critical_drive(g, cfg.n, cfg.Gamma), None])
    return PHASE_COLUMNS, rows


COMMANDS = {
    "evolve": cmd_evolve,
    "steady": cmd_steady,
    "spectrum": cmd_spectrum,
    "meanfield": cmd_evolve,
    "phase-diagram": cmd_phase_diagram,
}


# output ---------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".10g")


def _json_value(v):
    s = _fmt(v)
    if v is None or isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(s)


def render(command, cfg, columns, rows):
    resolved = cfg.resolved()
    if cfg.format == "json":
        doc = {
            "command": command,
            "config": resolved,
            "columns": columns,
            "rows": [[_json_value(v) for v in r] for r in rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    lines = [f"# qbsim {command}", "# config: " + json.dumps(resolved, sort_keys=True), ",".join(columns)]
    lines += [",".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _add_common(p):
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--out", metavar="PATH", default="-")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--jobs", type=int, metavar="K")
    p.add_argument("--model", choices=("full", "single", "collective", "meanfield"))
    p.add_argument("--setup", choices=("I", "II"))
    p.add_argument("--n-atoms", dest="n_atoms", type=int)
    p.add_argument("--gamma-r", dest="gamma_r", type=float)
    p.add_argument("--gamma-l", dest="gamma_l", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--phi1", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--samples", type=int)


OVERRIDE_KEYS = ("format", "model", "setup", "n_atoms", "gamma_r", "gamma_l", "g", "omega", "phi1", "t_max", "samples")


def make_parser():
    parser = argparse.ArgumentParser(prog="qbsim", description="Feedback-controlled quantum battery simulations")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common(sub.add_parser(name))
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = {k: getattr(args, k) for k in OVERRIDE_KEYS}
    if args.command == "meanfield":
        overrides["model"] = "meanfield"
    try:
        cfg = load_config(args.config, overrides)
        jobs = args.jobs if args.jobs is not None else default_jobs()
        columns, rows = COMMANDS[args.command](cfg, jobs=max(1, jobs))
    except (ConfigError, ValidationError) as exc:
        print(f"qbsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"qbsim: integrator failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    except SizeError as exc:
        print(f"qbsim: size budget exceeded: {exc}", file=sys.stderr)
        return EXIT_SIZE
    text = render(args.command, cfg, columns, rows)
    if args.out == "-":
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the flush at exit
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
