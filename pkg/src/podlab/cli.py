"""Command-line experiment runner.

Exit status: 0 on success, 2 for a malformed configuration, 3 for a numerical
failure, 1 for anything else. Failures print a one-line JSON record on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ErrorReport,
    convergence_study_r,
    default_reference,
    dt_study,
    error_norms,
    prepare,
    solve_fom,
    stiffness_scaling_study,
)
from .config import ExperimentConfig, load_config
from .errors import ConfigError, PodlabError, SolverError
from .fem1d import build_mesh
from .formats import read_snapshots, write_csv, write_manifest, write_snapshots
from .pde_solvers import BACKWARD_EULER, CRANK_NICOLSON, BurgersProblem, HeatProblem, NewtonSettings, Trajectory
from .pod import eigen_tail
from .rom import lift, simulate_rom
from .snapshots import parse_kind

log = logging.getLogger("podlab")

R_STUDY_HEADER = ["r", "lambda_tail", "e_c0l2", "e_c0h1", "e_l2h1"]
DT_STUDY_HEADER = ["dt", "r", "e_l2l2", "e_l2h1"]
STIFFNESS_HEADER = ["r", "s_norm2"]
FIT_HEADER = ["series", "abscissa", "slope", "intercept", "r2"]


class Run:
    """Bookkeeping for one subcommand invocation: timings, outputs, warnings."""

    def __init__(self, name: str, cfg: ExperimentConfig, out: Path, plots: bool):
        self.name, self.cfg, self.out, self.plots = name, cfg, out, plots
        self.timings, self.outputs, self.warnings = {}, [], []
        self.stage_name = None
        self.d = None

    @contextmanager
    def stage(self, name):
        self.stage_name = name
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - t0, 6)

    def path(self, filename) -> Path:
        p = self.out / filename
        self.outputs.append(p.name)
        return p

    def manifest(self):
        return {
            "subcommand": self.name,
            "version": __version__,
            "config": self.cfg.echo(),
            "timings_s": self.timings,
            "retained_rank_d": self.d,
            "warnings": self.warnings,
            "outputs": self.outputs,
            "rom_initialisation": "L2 projection of the full-order initial field",
        }


def make_problem(cfg: ExperimentConfig):
    if cfg.problem == "burgers":
        return BurgersProblem(nu=cfg.nu, t_final=cfg.t_final)
    return HeatProblem(nu=cfg.nu, c=cfg.c, t_final=cfg.t_final)


def newton_settings(cfg):
    return NewtonSettings(cfg.newton_tol, cfg.newton_max_iter)


def _kind(cfg):
    return parse_kind(cfg.dq)


def _trajectory(run: Run, args, problem, mesh):
    if getattr(args, "trajectory", None):
        with run.stage("read-trajectory"):
            sf = read_snapshots(args.trajectory)
        bad = {}
        if sf.n_cells != mesh.n_cells:
            bad["n_cells"] = f"trajectory file has {sf.n_cells}, config has {mesh.n_cells}"
        if sf.problem != run.cfg.problem:
            bad["problem"] = f"trajectory file is for {sf.problem!r}, config has {run.cfg.problem!r}"
        if sf.kind != "trajectory":
            bad["trajectory"] = f"file holds a {sf.kind!r} ensemble, not a trajectory"
        if bad:
            raise ConfigError(bad)
        scheme = BACKWARD_EULER if isinstance(problem, BurgersProblem) else CRANK_NICOLSON
        return Trajectory(sf.fields, sf.dt, mesh, scheme, problem=sf.problem)
    with run.stage("solve-fom"):
        return solve_fom(problem, mesh, run.cfg.resolved_dt(), newton_settings(run.cfg))


def _setup(run: Run, args, kind=None):
    cfg = run.cfg
    problem = make_problem(cfg)
    mesh = build_mesh(cfg.n_cells)
    traj = _trajectory(run, args, problem, mesh)
    with run.stage("pod"):
        setup = prepare(problem, kind or _kind(cfg), mesh, stride=cfg.snapshot_stride,
                        eig_tol=cfg.eig_tol, traj=traj)
    run.d = setup.basis.d
    return problem, setup


def _fit_rows(prefix, fits):
    return [[f"{prefix}{name}", f.abscissa, f.slope, f.intercept, f.r2] for name, f in fits.items()]


def cmd_solve_fom(run: Run, args):
    cfg = run.cfg
    problem = make_problem(cfg)
    mesh = build_mesh(cfg.n_cells)
    with run.stage("solve-fom"):
        traj = solve_fom(problem, mesh, cfg.resolved_dt(), newton_settings(cfg))
    with run.stage("write"):
        write_snapshots(run.path(f"{cfg.problem}_fom.snap"), traj.fields, cfg.problem, cfg.n_cells,
                        traj.dt, "trajectory", 1)
        if traj.newton_iterations:
            write_csv(run.path(f"{cfg.problem}_fom_newton.csv"), ["step", "iterations"],
                      enumerate(traj.newton_iterations, 1))
        if run.plots:
            from .plotting import plot_solution

            plot_solution(traj, run.path(f"{cfg.problem}_fom.png"))


def cmd_build_pod(run: Run, args):
    cfg = run.cfg
    _, setup = _setup(run, args)
    basis = setup.basis
    tag = f"{cfg.problem}_{basis.kind}"
    with run.stage("write"):
        tails = basis.tails()
        rows = [[r, basis.lambdas[r - 1] if r else float("nan"), np.sqrt(max(tails[r], 0.0))]
                for r in range(0, basis.d + 1)]
        write_csv(run.path(f"{tag}_spectrum.csv"), ["r", "lambda", "lambda_tail"], rows)
        write_snapshots(run.path(f"{tag}_basis.snap"), basis.phis, cfg.problem, cfg.n_cells,
                        setup.ensemble.dt, "basis", cfg.snapshot_stride)
        if run.plots:
            from .plotting import plot_basis, plot_spectrum

            plot_basis(basis, run.path(f"{tag}_basis.png"))
            plot_spectrum(basis, run.path(f"{tag}_spectrum.png"))


def cmd_run_rom(run: Run, args):
    cfg = run.cfg
    problem, setup = _setup(run, args)
    basis = setup.basis
    tag = f"{cfg.problem}_{basis.kind}"
    _, ref = default_reference(problem, setup, cfg.reference)
    rows = []
    for r in cfg.resolved_r_list():
        if r > basis.d:
            run.warnings.append(f"r={r} skipped: retained rank is d={basis.d}")
            continue
        with run.stage(f"rom-r{r}"):
            rt = simulate_rom(problem, basis, r, setup.traj.dt, setup.traj.fields[0], newton_settings(cfg))
            e = error_norms(lift(rt, basis), ref, basis.mass, basis.stiffness)
        rows.append([r, eigen_tail(basis, r), *e.as_tuple()])
        header = ["t"] + [f"a{j}" for j in range(1, r + 1)]
        write_csv(run.path(f"{tag}_rom_r{r}.csv"), header,
                  (np.concatenate(([t], a)) for t, a in zip(rt.times, rt.coeffs)))
    write_csv(run.path(f"{tag}_rom_errors.csv"), R_STUDY_HEADER, rows)


def cmd_study_r(run: Run, args):
    cfg = run.cfg
    problem, setup = _setup(run, args)
    with run.stage("study-r"):
        report = convergence_study_r(problem, setup.basis.kind, cfg.resolved_r_list(), setup=setup,
                                     reference=cfg.reference, jobs=args.jobs,
                                     newton_settings=newton_settings(cfg))
    run.warnings.extend(report.warnings)
    tag = f"{cfg.problem}_{report.kind}"
    with run.stage("write"):
        write_csv(run.path(f"{tag}_study_r.csv"), R_STUDY_HEADER,
                  ([row.r, row.lambda_tail, row.e_c0l2, row.e_c0h1, row.e_l2h1] for row in report.rows))
        write_csv(run.path(f"{tag}_study_r_fits.csv"), FIT_HEADER,
                  _fit_rows("", report.fits) + _fit_rows("", report.fits_r))
        write_csv(run.path(f"{tag}_study_r_diagnostics.csv"), ["r", "s_norm2", "pointwise_ratio", "ritz_ratio"],
                  ([row.r, row.s_norm2, row.pointwise_ratio, row.ritz_ratio] for row in report.rows))
        if run.plots and len(report.rows) >= 1:
            from .plotting import plot_r_study

            plot_r_study(report, run.path(f"{tag}_study_r.png"))
    return report


def cmd_study_dt(run: Run, args):
    cfg = run.cfg
    if cfg.problem != "heat":
        raise ConfigError({"problem": "study-dt is defined for the heat problem only"})
    problem = make_problem(cfg)
    with run.stage("study-dt"):
        study = dt_study(problem, cfg.dt_list, build_mesh(cfg.n_cells), cfg.eig_tol, cfg.reference)
    with run.stage("write"):
        for kind, rows in study.cases.items():
            write_csv(run.path(f"heat_dt_study_{kind}.csv"), DT_STUDY_HEADER,
                      ([r.dt, r.r, r.e_l2l2, r.e_l2h1] for r in rows))
        write_csv(run.path("heat_dt_study_fits.csv"), FIT_HEADER, _fit_rows("e_l2l2_", study.fits))
        if run.plots:
            from .plotting import plot_dt_study

            plot_dt_study(study, run.path("heat_dt_study.png"))
    return study


def cmd_study_stiffness(run: Run, args):
    cfg = run.cfg
    problem = make_problem(cfg)
    mesh = build_mesh(cfg.n_cells)
    traj = _trajectory(run, args, problem, mesh)
    kinds = [_kind(cfg)] if not args.both else ["nodq", "dq"]
    studies = {}
    for kind in kinds:
        with run.stage(f"pod-{kind}"):
            setup = prepare(problem, kind, mesh, stride=cfg.snapshot_stride, eig_tol=cfg.eig_tol, traj=traj)
        run.d = setup.basis.d
        with run.stage(f"stiffness-{kind}"):
            st = stiffness_scaling_study(setup.basis, cfg.r_list)
        studies[kind] = st
        tag = f"{cfg.problem}_{kind}"
        write_csv(run.path(f"{tag}_stiffness.csv"), STIFFNESS_HEADER, zip(st.r, st.s_norm2))
        if st.fit is not None:
            write_csv(run.path(f"{tag}_stiffness_fit.csv"), FIT_HEADER + ["fourier_slope"],
                      [["s_norm2", "r", st.fit.slope, st.fit.intercept, st.fit.r2, st.fourier_slope]])
    if run.plots:
        from .plotting import plot_stiffness

        plot_stiffness(studies, run.path(f"{cfg.problem}_stiffness.png"))
    return studies


COMMANDS = {
    "solve-fom": cmd_solve_fom,
    "build-pod": cmd_build_pod,
    "run-rom": cmd_run_rom,
    "study-r": cmd_study_r,
    "study-dt": cmd_study_dt,
    "study-stiffness": cmd_study_stiffness,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key=value configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                        help="override one configuration key (repeatable)")
    common.add_argument("--output", metavar="DIR", help="output directory (else output_dir, else $PODLAB_OUTPUT)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker threads for study rows")
    common.add_argument("--no-plots", action="store_true", help="write CSV data only, no figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="podlab", description="POD reduced-order model laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("build-pod", "run-rom", "study-r", "study-stiffness"):
            p.add_argument("--trajectory", metavar="PATH", help="reuse a podlab-snap trajectory file")
        if name == "study-stiffness":
            p.add_argument("--both", action="store_true", help="run for both the no-DQ and DQ bases")
    return parser


def _fail(code, record):
    print(json.dumps(record, sort_keys=True, default=str), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = None
    try:
        cfg = load_config(args.config, args.overrides)
        if args.output:
            cfg.output_dir = args.output
        if args.jobs < 1:
            raise ConfigError({"--jobs": "must be at least 1"})
        out = cfg.resolved_output()
        out.mkdir(parents=True, exist_ok=True)
        run = Run(args.command, cfg, out, plots=not args.no_plots)
        COMMANDS[args.command](run, args)
        manifest = run.manifest()
        manifest["status"] = "ok"
        manifest["outputs"].append(f"{args.command}_manifest.json")
        write_manifest(out / f"{args.command}_manifest.json", manifest)
        return 0
    except ConfigError as exc:
        return _fail(2, {"status": "error", "kind": "config", "fields": exc.fields})
    except (SolverError, np.linalg.LinAlgError) as exc:
        return _fail(3, {
            "status": "error",
            "kind": "numerical",
            "stage": run.stage_name if run else None,
            "step": getattr(exc, "step", None),
            "message": str(exc),
        })
    except (PodlabError, OSError, ValueError) as exc:
        return _fail(1, {"status": "error", "kind": type(exc).__name__,
                         "stage": run.stage_name if run else None, "message": str(exc)})


if __name__ == "__main__":
    sys.exit(main())
