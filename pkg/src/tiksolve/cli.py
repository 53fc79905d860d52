"""Command-line front end.

Verbs:

* ``solve``   -- run a configured reconstruction, write artifacts.
* ``compare`` -- run the Newton solver and FISTA on the identical problem.
* ``phantom`` -- emit a phantom image as PGM + CSV.
* ``radon``   -- emit a ray-traced projector (Matrix Market) + clean sinogram.

Configs are TOML (a JSON mirror with the same sections is accepted). Exit
codes: 0 when the solver converged, 1 on configuration errors, 2 when the
run stagnated or stopped without reaching its tolerance. The environment
variable SSCD_THREADS caps matvec parallelism in the compiled backend.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from tiksolve import fileio, tomo
from tiksolve.envelope import CompositeProblem, QuadraticFidelity
from tiksolve.errors import SolverError, StagnationError
from tiksolve.fista import FistaConfig, solve_fista
from tiksolve.newton import SolverConfig, solve, solve_pgm
from tiksolve.operators import Composition, read_matrix_market, write_matrix_market
from tiksolve.penalties import LpPenalty
from tiksolve.tv import AlmConfig, solve_tv, tv_value
from tiksolve.wavelets import HaarSynthesisOperator

__all__ = ["main"]


class ConfigError(ValueError):
    pass


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib as toml_mod  # py >= 3.11
    except ImportError:
        import tomli as toml_mod
    try:
        return toml_mod.loads(text)
    except toml_mod.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _section(cfg, name):
    if name not in cfg or not isinstance(cfg[name], dict):
        raise ConfigError(f"missing config section '{name}'")
    return cfg[name]


def _require(section, sec_name, key, kind=None):
    if key not in section:
        raise ConfigError(f"missing key '{sec_name}.{key}'")
    value = section[key]
    if kind is not None:
        try:
            value = kind(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for '{sec_name}.{key}': {value!r}") from exc
    return value


def _build_measurement(problem, seed_override):
    """Returns (A, y, n1, n2, x_true or None)."""
    n1 = _require(problem, "problem", "n1", int)
    n2 = _require(problem, "problem", "n2", int)
    seed = int(problem.get("seed", 0) if seed_override is None else seed_override)
    if "sinogram" in problem or "matrix" in problem:
        sino_path = _require(problem, "problem", "sinogram")
        mat_path = _require(problem, "problem", "matrix")
        A = read_matrix_market(mat_path)
        sino = fileio.read_sinogram_csv(sino_path)
        if A.shape != (sino.values.size, n1 * n2):
            raise ConfigError(
                f"matrix shape {A.shape} does not match sinogram size {sino.values.size} "
                f"and grid {n1}x{n2}"
            )
        return A, sino.values.copy(), n1, n2, None
    name = _require(problem, "problem", "phantom")
    num_angles = _require(problem, "problem", "angles", int)
    num_offsets = _require(problem, "problem", "offsets", int)
    if num_angles < 2 or num_offsets < 2:
        raise ConfigError("'problem.angles' and 'problem.offsets' must be >= 2")
    img = _make_phantom(name, n1, n2)
    A = tomo.build_radon(n1, n2, num_angles, num_offsets)
    y = A.apply(img.values)
    noise = float(problem.get("noise", 0.0))
    if noise > 0.0:
        y = tomo.add_noise(y, noise, seed)
    return A, y, n1, n2, img


def _make_phantom(name, n1, n2):
    if name == "blocks":
        return tomo.blocks_phantom(n1, n2)
    if name == "shepp":
        return tomo.shepp_phantom(n1, n2)
    raise ConfigError(f"unknown phantom '{name}' (expected 'blocks' or 'shepp')")


def _load_weights(penalty, n):
    spec = penalty.get("weights", "constant")
    if spec == "constant":
        return np.full(n, float(penalty.get("weight_value", 1.0)))
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"weights file not found: {path}")
    w = np.loadtxt(path, dtype=np.float64).ravel()
    if w.size != n:
        raise ConfigError(f"weights file has {w.size} entries, problem needs {n}")
    return w


def _lp_problem(penalty, A, y, n1, n2):
    """Assemble the coefficient-space composite problem and the synthesis map."""
    p = _require(penalty, "penalty", "p", float)
    alpha = _require(penalty, "penalty", "alpha", float)
    basis = penalty.get("basis", "identity")
    n = n1 * n2
    if basis == "wavelet":
        levels = int(penalty.get("levels", 1))
        synth = HaarSynthesisOperator(n1, n2, levels)
        forward = Composition(A, synth)
    elif basis == "identity":
        synth = None
        forward = A
    else:
        raise ConfigError(f"unknown basis '{basis}' (expected 'identity' or 'wavelet')")
    weights = _load_weights(penalty, n)
    prob = CompositeProblem(QuadraticFidelity(forward, y), LpPenalty(p, weights, alpha))
    return prob, synth


def _solver_config(solver, kind):
    known = {
        "bas_gssn": SolverConfig,
        "pgm": SolverConfig,
        "fista": FistaConfig,
    }
    cls = known[kind]
    fields = {f for f in cls.__dataclass_fields__}
    kwargs = {k: v for k, v in solver.items() if k in fields}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver settings: {exc}") from exc


def _alm_config(penalty):
    keys = {
        "sigma0": "sigma0",
        "tau_alm": "tau",
        "xi_alm": "xi",
        "eps_feas": "eps_feas",
        "max_outer": "max_outer",
    }
    kwargs = {dst: penalty[src] for src, dst in keys.items() if src in penalty}
    try:
        return AlmConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad ALM settings: {exc}") from exc


def _out_dir(cfg, override):
    if override is not None:
        out = Path(override)
    else:
        output = cfg.get("output", {})
        if "directory" not in output:
            raise ConfigError("missing key 'output.directory' (or pass --out)")
        out = Path(output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_summary(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_solve(args):
    cfg = load_config(args.config)
    problem = _section(cfg, "problem")
    penalty = _section(cfg, "penalty")
    solver = _section(cfg, "solver")
    kind = _require(solver, "solver", "kind")
    out = _out_dir(cfg, args.out)
    A, y, n1, n2, _ = _build_measurement(problem, args.seed)
    pkind = _require(penalty, "penalty", "kind")

    if pkind == "tv":
        alpha = _require(penalty, "penalty", "alpha", float)
        if kind != "bas_gssn":
            raise ConfigError("penalty kind 'tv' requires solver kind 'bas_gssn'")
        report = solve_tv(A, y, alpha, n1, n2, _alm_config(penalty), _solver_config(solver, kind))
        image = report.image
        report.write_outer_csv(out / "iterations.csv")
        summary = {
            "solver": "bas_gssn+alm",
            "objective": report.objective,
            "feasibility": report.feasibility,
            "outer_iterations": report.outer_iterations,
            "inner_iterations": sum(r.iterations for r in report.inner_reports),
            "tv": tv_value(image),
            "reason": report.reason,
            "wall_time_s": sum(r.wall_time for r in report.inner_reports),
        }
        converged = report.converged
    elif pkind == "lp":
        prob, synth = _lp_problem(penalty, A, y, n1, n2)
        x0 = np.zeros(prob.f.A.shape[1])
        runner = {"bas_gssn": solve, "pgm": solve_pgm, "fista": solve_fista}[_check_kind(kind)]
        report = runner(prob, x0, _solver_config(solver, kind))
        coeffs = report.z
        pixels = synth.apply(coeffs) if synth is not None else coeffs
        image = tomo.ImageGrid(n1=n1, n2=n2, values=pixels)
        report.write_csv(out / "iterations.csv")
        summary = {
            "solver": kind,
            "objective": prob.value(coeffs),
            "residual": report.residual,
            "residual_rel": report.residual_rel,
            "iterations": report.iterations,
            "reason": report.reason,
            "wall_time_s": report.wall_time,
        }
        converged = report.converged
    else:
        raise ConfigError(f"unknown penalty kind '{pkind}' (expected 'lp' or 'tv')")

    fileio.write_pgm(image, out / "reconstruction.pgm")
    fileio.write_image_csv(image, out / "reconstruction.csv")
    _write_summary(out / "summary.json", summary)
    return 0 if converged else 2


def _check_kind(kind):
    if kind not in ("bas_gssn", "pgm", "fista"):
        raise ConfigError(f"unknown solver kind '{kind}'")
    return kind


def cmd_compare(args):
    cfg = load_config(args.config)
    problem = _section(cfg, "problem")
    penalty = _section(cfg, "penalty")
    solver = cfg.get("solver", {})
    out = _out_dir(cfg, args.out)
    if _require(penalty, "penalty", "kind") != "lp" or float(_require(penalty, "penalty", "p")) != 1.0:
        raise ConfigError("compare requires penalty kind 'lp' with p = 1")
    A, y, n1, n2, _ = _build_measurement(problem, args.seed)
    prob, _synth = _lp_problem(penalty, A, y, n1, n2)
    x0 = np.zeros(prob.f.A.shape[1])

    newton_cfg = _solver_config(solver.get("bas_gssn", solver), "bas_gssn")
    newton_cfg.keep_iterates = True
    fista_cfg = _solver_config(solver.get("fista", {}), "fista")
    fista_cfg.keep_iterates = True
    rep_newton = solve(prob, x0, newton_cfg)
    rep_fista = solve_fista(prob, x0, fista_cfg)

    best = None
    for rep in (rep_newton, rep_fista):
        for row, it in zip(rep.history, rep.iterates):
            if best is None or row.phi < best[0]:
                best = (row.phi, it)
    x_ref = best[1]
    ref_norm = max(float(np.linalg.norm(x_ref)), np.finfo(float).tiny)

    with open(out / "compare.csv", "w") as fh:
        fh.write("solver,iter,time_s,rel_residual,rel_error_vs_best\n")
        for name, rep in (("bas_gssn", rep_newton), ("fista", rep_fista)):
            r0 = max(rep.history[0].resid, np.finfo(float).tiny)
            for row, it in zip(rep.history, rep.iterates):
                rel_err = float(np.linalg.norm(it - x_ref)) / ref_norm
                fh.write(
                    f"{name},{row.iter},{row.time_s:.6f},"
                    f"{float(row.resid / r0)!r},{rel_err!r}\n"
                )
    _write_plot_script(out / "plot_compare.gp")
    summary = {
        "bas_gssn": {
            "rel_residual": rep_newton.history[-1].resid / max(rep_newton.history[0].resid, np.finfo(float).tiny),
            "iterations": rep_newton.iterations,
            "wall_time_s": rep_newton.wall_time,
            "reason": rep_newton.reason,
        },
        "fista": {
            "rel_residual": rep_fista.history[-1].resid / max(rep_fista.history[0].resid, np.finfo(float).tiny),
            "iterations": rep_fista.iterations,
            "wall_time_s": rep_fista.wall_time,
            "reason": rep_fista.reason,
        },
    }
    _write_summary(out / "summary.json", summary)
    return 0 if rep_newton.converged else 2


def _write_plot_script(path):
    with open(path, "w") as fh:
        fh.write(
            "set datafile separator ','\n"
            "set logscale y\n"
            "set xlabel 'time [s]'\n"
            "set ylabel 'relative residual'\n"
            "set key top right\n"
            "plot '< grep ^bas_gssn compare.csv' using 3:4 with linespoints title 'newton', \\\n"
            "     '< grep ^fista compare.csv' using 3:4 with lines title 'fista'\n"
        )


def cmd_phantom(args):
    img = _make_phantom(args.name, args.n1, args.n2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_pgm(img, out / "phantom.pgm")
    fileio.write_image_csv(img, out / "phantom.csv")
    return 0


def cmd_radon(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.angles < 2 or args.offsets < 2:
        raise ConfigError("radon needs at least 2 angles and 2 offsets")
    A = tomo.build_radon(args.n1, args.n2, args.angles, args.offsets)
    write_matrix_market(A, out / "radon.mtx")
    img = _make_phantom(args.phantom, args.n1, args.n2)
    sino = tomo.Sinogram(
        angles=tomo.radon_angles(args.angles),
        offsets=tomo.radon_offsets(args.offsets),
        values=A.apply(img.values),
    )
    fileio.write_sinogram_csv(sino, out / "sinogram.csv")
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="tiksolve",
        description="Sparsity- and TV-regularized least squares on a tomography bench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a configured reconstruction")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", default=None, help="output directory (overrides config)")
    p_solve.add_argument("--seed", type=int, default=None, help="noise seed (overrides config)")
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="Newton solver vs FISTA on one problem")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", default=None)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_ph = sub.add_parser("phantom", help="emit a phantom image")
    p_ph.add_argument("n1", type=int)
    p_ph.add_argument("n2", type=int)
    p_ph.add_argument("name", choices=["blocks", "shepp"])
    p_ph.add_argument("--out", required=True)
    p_ph.set_defaults(func=cmd_phantom)

    p_rad = sub.add_parser("radon", help="emit a projector matrix and clean sinogram")
    p_rad.add_argument("n1", type=int)
    p_rad.add_argument("n2", type=int)
    p_rad.add_argument("angles", type=int)
    p_rad.add_argument("offsets", type=int)
    p_rad.add_argument("--phantom", default="blocks", choices=["blocks", "shepp"])
    p_rad.add_argument("--out", required=True)
    p_rad.set_defaults(func=cmd_radon)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StagnationError as exc:
        print(f"solver stagnated: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
