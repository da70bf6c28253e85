"""Error norms, log-log regressions and the convergence studies."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fem1d import Mesh1D, SymTridiag, assemble_mass, assemble_stiffness, batch_norms, build_mesh, interpolate
from .pde_solvers import BurgersProblem, HeatProblem, NewtonSettings, Trajectory, solve_burgers, solve_heat
from .pod import (
    DEFAULT_EIG_TOL,
    PodBasis,
    eigen_tail,
    interp_error,
    pod_basis,
    pod_stiffness,
    reconstruct,
    ritz_project,
)
from .rom import lift, simulate_rom
from .snapshots import DQ, NO_DQ, build_ensemble, parse_kind

log = logging.getLogger(__name__)

N_QUAD = 5
REF_EXACT = "exact"
REF_EXACT_INTERPOLATED = "exact-interpolated"
REF_FOM = "fom"


@dataclass
class AnalyticReference:
    """Exact solution u(x, t) and its derivative u_x(x, t), both vectorised in x."""

    u: Callable
    u_x: Callable


@dataclass
class ErrorNorms:
    e_c0l2: float
    e_c0h1: float
    e_l2h1: float
    e_l2l2: float
    e_c0h1_semi: float
    e_l2h1_semi: float

    def as_tuple(self):
        return self.e_c0l2, self.e_c0h1, self.e_l2h1


@dataclass
class RegressionFit:
    slope: float
    intercept: float
    r2: float
    abscissa: str = ""

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


@dataclass
class ErrorRow:
    r: int
    lambda_tail: float
    e_c0l2: float
    e_c0h1: float
    e_l2h1: float
    s_norm2: float = float("nan")
    pointwise_ratio: float = float("nan")
    ritz_ratio: float = float("nan")


@dataclass
class ErrorReport:
    rows: list
    problem: str
    kind: str
    reference: str
    d: int
    fits: dict = field(default_factory=dict)  # norm -> fit against lambda_tail
    fits_r: dict = field(default_factory=dict)  # norm -> fit against r
    warnings: list = field(default_factory=list)

    NORMS = ("e_c0l2", "e_c0h1", "e_l2h1")

    def column(self, name):
        return np.array([getattr(row, name) for row in self.rows], dtype=float)


def _squared_norm_series_quadrature(fields, times, mesh: Mesh1D, ref: AnalyticReference):
    """Per-time squared L2 and H1-seminorm distances between P1 fields and ``ref``."""
    U = np.pad(np.asarray(fields, dtype=float), ((0, 0), (1, 1)))
    h = mesh.h
    left = mesh.nodes[:-1]
    xi, w = np.polynomial.legendre.leggauss(N_QUAD)
    xi, w = 0.5 * (xi + 1.0), 0.5 * w
    dU = (U[:, 1:] - U[:, :-1]) / h
    l2sq = np.zeros(U.shape[0])
    h1sq = np.zeros(U.shape[0])
    for q in range(N_QUAD):
        xq = left + xi[q] * h
        uq = np.array([ref.u(xq, t) for t in times])
        uxq = np.array([ref.u_x(xq, t) for t in times])
        uh = (1.0 - xi[q]) * U[:, :-1] + xi[q] * U[:, 1:]
        l2sq += w[q] * h * np.sum((uh - uq) ** 2, axis=1)
        h1sq += w[q] * h * np.sum((dU - uxq) ** 2, axis=1)
    return l2sq, h1sq


def norms_from_series(l2sq, h1sq) -> ErrorNorms:
    full = l2sq + h1sq
    return ErrorNorms(
        e_c0l2=float(np.sqrt(l2sq.max())),
        e_c0h1=float(np.sqrt(full.max())),
        e_l2h1=float(np.sqrt(full.mean())),
        e_l2l2=float(np.sqrt(l2sq.mean())),
        e_c0h1_semi=float(np.sqrt(h1sq.max())),
        e_l2h1_semi=float(np.sqrt(h1sq.mean())),
    )


def error_norms(rom_lifted: Trajectory, reference, mass: SymTridiag | None = None,
                stiffness: SymTridiag | None = None) -> ErrorNorms:
    """Errors e_j = u_r(t_j) - u(t_j) in the C0(L2), C0(H1), L2(H1) (and L2(L2)) norms.

    ``reference`` is either a :class:`Trajectory` on the same time grid (discrete
    norms through the mass and stiffness matrices) or an
    :class:`AnalyticReference`, in which case the continuous norms are evaluated
    by Gauss quadrature on every cell.
    """
    mesh = rom_lifted.mesh
    if isinstance(reference, AnalyticReference):
        l2sq, h1sq = _squared_norm_series_quadrature(rom_lifted.fields, rom_lifted.times, mesh, reference)
        return norms_from_series(l2sq, h1sq)
    if reference.fields.shape != rom_lifted.fields.shape or abs(reference.dt - rom_lifted.dt) > 1e-15:
        raise ValueError(
            f"time grids differ: {reference.fields.shape}/dt={reference.dt} vs "
            f"{rom_lifted.fields.shape}/dt={rom_lifted.dt}"
        )
    mass = assemble_mass(mesh) if mass is None else mass
    stiffness = assemble_stiffness(mesh) if stiffness is None else stiffness
    l2sq, h1sq = batch_norms(rom_lifted.fields - reference.fields, mass, stiffness)
    return norms_from_series(l2sq, h1sq)


def interpolated_reference(ref: AnalyticReference, mesh: Mesh1D, dt: float, n_steps: int) -> Trajectory:
    fields = np.array([interpolate(mesh, lambda x: ref.u(x, j * dt)) for j in range(n_steps + 1)])
    return Trajectory(fields, dt, mesh, "exact")


def loglog_fit(xs, ys, abscissa: str = "") -> RegressionFit:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 3:
        raise ValueError("a log-log fit needs at least 3 (x, y) pairs")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit requires strictly positive data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    ss_res = np.sum(resid**2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RegressionFit(float(slope), float(intercept), float(r2), abscissa)


def leave_one_out_slopes(xs, ys):
    xs, ys = np.asarray(xs), np.asarray(ys)
    idx = np.arange(xs.size)
    return np.array([loglog_fit(xs[idx != i], ys[idx != i]).slope for i in idx])


# ---------------------------------------------------------------------------
# pipelines


@dataclass
class Setup:
    """A full-order trajectory with the POD basis built from it."""

    problem: object
    mesh: Mesh1D
    traj: Trajectory
    basis: PodBasis
    ensemble: object


def problem_name(problem) -> str:
    return "burgers" if isinstance(problem, BurgersProblem) else "heat"


def solve_fom(problem, mesh: Mesh1D, dt: float, newton_settings: NewtonSettings = NewtonSettings()):
    if isinstance(problem, BurgersProblem):
        return solve_burgers(problem, mesh, dt, newton_settings)
    return solve_heat(problem, mesh, dt)


def prepare(problem, kind, mesh: Mesh1D | None = None, dt: float | None = None, stride: int = 1,
            eig_tol: float = DEFAULT_EIG_TOL, newton_settings: NewtonSettings = NewtonSettings(),
            traj: Trajectory | None = None) -> Setup:
    mesh = build_mesh(1024) if mesh is None else mesh
    if traj is None:
        if dt is None:
            dt = 1e-4 if isinstance(problem, BurgersProblem) else 1e-3
        traj = solve_fom(problem, mesh, dt, newton_settings)
    ens = build_ensemble(traj, parse_kind(kind), stride)
    basis = pod_basis(ens, assemble_mass(mesh), eig_tol, stiffness=assemble_stiffness(mesh))
    return Setup(problem, mesh, traj, basis, ens)


def default_reference(problem, setup: Setup, reference: str | None = None):
    if reference is None:
        reference = REF_FOM if isinstance(problem, BurgersProblem) else REF_EXACT
    if reference == REF_FOM:
        return reference, setup.traj
    if isinstance(problem, BurgersProblem):
        raise ValueError("the Burgers problem has no exact solution; use the FOM reference")
    exact = AnalyticReference(problem.exact, problem.exact_dx)
    if reference == REF_EXACT:
        return reference, exact
    if reference == REF_EXACT_INTERPOLATED:
        return reference, interpolated_reference(exact, setup.mesh, setup.traj.dt, setup.traj.n_steps)
    raise ValueError(f"unknown error reference {reference!r}")


def pointwise_ratio(setup: Setup, r: int) -> float:
    """max_i ||eta(u(t_i))||^2 / sum_{j>r} lambda_j over the state snapshots."""
    tail = setup.basis.tails()[r]
    if tail <= 0:
        return float("nan")
    _, l2, _ = interp_error(setup.ensemble.states, setup.basis, r)
    return float(np.max(l2**2) / tail)


def ritz_ratio(setup: Setup, r: int) -> float:
    """max_i ||eta_Ritz(u(t_i))|| / ||eta_interp(u(t_i))|| in L2 over the states."""
    states = setup.ensemble.states
    basis = setup.basis
    _, l2_int, _ = interp_error(states, basis, r)
    eta_r = states - reconstruct(ritz_project(states, basis, r), basis)
    l2_ritz, _ = batch_norms(eta_r, basis.mass, basis.stiffness)
    ok = l2_int > 0
    return float(np.max(np.sqrt(l2_ritz[ok]) / l2_int[ok])) if np.any(ok) else float("nan")


def rom_row(setup: Setup, r: int, reference, newton_settings=NewtonSettings(), diagnostics=True) -> ErrorRow:
    rt = simulate_rom(setup.problem, setup.basis, r, setup.traj.dt, setup.traj.fields[0], newton_settings)
    e = error_norms(lift(rt, setup.basis), reference, setup.basis.mass, setup.basis.stiffness)
    row = ErrorRow(r, eigen_tail(setup.basis, r), e.e_c0l2, e.e_c0h1, e.e_l2h1,
                   s_norm2=pod_stiffness(setup.basis, r).norm2)
    if diagnostics:
        row.pointwise_ratio = pointwise_ratio(setup, r)
        row.ritz_ratio = ritz_ratio(setup, r)
    return row


def convergence_study_r(problem, dq, r_list, setup: Setup | None = None, reference: str | None = None,
                        jobs: int = 1, newton_settings: NewtonSettings = NewtonSettings(),
                        diagnostics: bool = True, **prepare_kw) -> ErrorReport:
    """Errors of the r-mode ROM for each r in ``r_list``, with log-log fits.

    Values of r above the retained rank are skipped with a warning.
    """
    kind = parse_kind(dq)
    if setup is None:
        setup = prepare(problem, kind, newton_settings=newton_settings, **prepare_kw)
    ref_tag, ref = default_reference(problem, setup, reference)
    warnings = []
    rs = []
    for r in sorted(set(int(r) for r in r_list)):
        if r < 1 or r > setup.basis.d:
            msg = f"r={r} skipped: retained rank is d={setup.basis.d}"
            log.warning(msg)
            warnings.append(msg)
        else:
            rs.append(r)

    def work(r):
        return rom_row(setup, r, ref, newton_settings, diagnostics)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(work, rs))
    else:
        rows = [work(r) for r in rs]

    report = ErrorReport(rows, problem_name(problem), kind, ref_tag, setup.basis.d, warnings=warnings)
    if len(rows) >= 3:
        lam = report.column("lambda_tail")
        rcol = report.column("r")
        for name in ErrorReport.NORMS:
            ys = report.column(name)
            report.fits[name] = loglog_fit(lam, ys, "lambda_tail")
            report.fits_r[name] = loglog_fit(rcol, ys, "r")
    return report


@dataclass
class DtRow:
    dt: float
    r: int
    e_l2l2: float
    e_l2h1: float


@dataclass
class DtStudy:
    cases: dict  # kind -> list of DtRow
    fits: dict  # kind -> RegressionFit of e_l2l2 against dt


def dt_study(problem: HeatProblem | None = None, dt_list=(2e-1, 1e-1, 5e-2, 2.5e-2, 1e-2),
             mesh: Mesh1D | None = None, eig_tol: float = DEFAULT_EIG_TOL, reference: str | None = None) -> DtStudy:
    """ROM errors against the exact heat solution as the time step varies.

    For every time step the snapshots are regenerated and r is set to the
    retained rank d of that run, so POD truncation does not mask the time error.
    """
    problem = HeatProblem() if problem is None else problem
    mesh = build_mesh(1024) if mesh is None else mesh
    cases = {NO_DQ: [], DQ: []}
    for dt in dt_list:
        traj = solve_heat(problem, mesh, dt)
        for kind in (NO_DQ, DQ):
            setup = prepare(problem, kind, mesh, eig_tol=eig_tol, traj=traj)
            _, ref = default_reference(problem, setup, reference)
            d = setup.basis.d
            rt = simulate_rom(problem, setup.basis, d, dt, traj.fields[0])
            e = error_norms(lift(rt, setup.basis), ref, setup.basis.mass, setup.basis.stiffness)
            cases[kind].append(DtRow(dt, d, e.e_l2l2, e.e_l2h1))
    fits = {}
    if len(dt_list) >= 3:
        for kind, rows in cases.items():
            fits[kind] = loglog_fit([r.dt for r in rows], [r.e_l2l2 for r in rows], "dt")
    return DtStudy(cases, fits)


@dataclass
class StiffnessStudy:
    r: np.ndarray
    s_norm2: np.ndarray
    fit: Optional[RegressionFit]
    fourier_slope: float = 2.0


def stiffness_scaling_study(basis: PodBasis, r_list=None) -> StiffnessStudy:
    """Spectral norm of the POD stiffness matrix against r, with a log-log fit."""
    rs = np.arange(1, basis.d + 1) if r_list is None else np.array(sorted(r for r in r_list if 1 <= r <= basis.d))
    vals = np.array([pod_stiffness(basis, int(r)).norm2 for r in rs])
    fit = loglog_fit(rs, vals, "r") if rs.size >= 3 else None
    return StiffnessStudy(rs, vals, fit)


def fourier_stiffness_diagonal(n_cells: int, n_modes: int) -> np.ndarray:
    """Diagonal of the stiffness Gram matrix of interpolated sin(j pi x), j = 1..n_modes."""
    mesh = build_mesh(n_cells)
    S = assemble_stiffness(mesh)
    modes = np.array([interpolate(mesh, lambda x, j=j: np.sin(j * np.pi * x)) for j in range(1, n_modes + 1)])
    return np.einsum("ij,ji->i", modes, S @ modes.T)


def inverse_estimate_check(basis: PodBasis, r: int, n_samples: int = 200, seed: int = 0):
    """Worst ratio ||grad v|| / (sqrt(||S_r||_2) ||v||) over random v in the r-mode space,
    together with the same ratio for the top eigenvector of S_r (which attains equality)."""
    rng = np.random.default_rng(seed)
    ps = pod_stiffness(basis, r)
    C = np.sqrt(ps.norm2)
    a = rng.standard_normal((n_samples, r))
    v = reconstruct(a, basis)
    l2sq, h1sq = batch_norms(v, basis.mass, basis.stiffness)
    worst = float(np.max(np.sqrt(h1sq) / (C * np.sqrt(l2sq))))
    w, Q = np.linalg.eigh(ps.matrix)
    vt = reconstruct(Q[:, -1], basis)
    l2t, h1t = batch_norms(vt, basis.mass, basis.stiffness)
    return worst, float(np.sqrt(h1t[0]) / (C * np.sqrt(l2t[0])))


def ritz_lemma_bound(setup: Setup, r: int):
    """Ensemble average of ||grad eta_Ritz||^2 and the bound ||S_d||_2 sum_{j>r} lambda_j."""
    basis = setup.basis
    Y = setup.ensemble.fields
    eta = Y - reconstruct(ritz_project(Y, basis, r), basis)
    _, h1sq = batch_norms(eta, basis.mass, basis.stiffness)
    lhs = float(np.mean(h1sq))
    rhs = pod_stiffness(basis, basis.d).norm2 * float(basis.tails()[r])
    return lhs, rhs
