"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` (about two minutes).
The verdict lines are repeated in the terminal summary.
"""
import numpy as np
import pytest

from podlab.analysis import (
    convergence_study_r,
    fourier_stiffness_diagonal,
    inverse_estimate_check,
    prepare,
    solve_fom,
    stiffness_scaling_study,
)
from podlab.cli import main
from podlab.fem1d import build_mesh
from podlab.formats import read_csv
from podlab.pde_solvers import BurgersProblem, HeatProblem, heat_forcing
from podlab.pod import (
    approximation_residual,
    gram_matrix,
    l2_project,
    pod_basis,
    reconstruct,
    ritz_project,
)
from podlab.rom import lift, simulate_rom

RESULTS = {}

TABLE1 = {2e-1: 3.71e-2, 1e-1: 1.27e-2, 5e-2: 2.99e-3, 2.5e-2: 6.53e-4, 1e-2: 1.03e-4}
# r: (Lambda_r, E_C0L2, E_C0H1, E_L2H1)
TABLE2 = {3: (5.72e-2, 9.46e-2, 2.30e0, 1.59e0), 5: (2.71e-2, 4.70e-2, 1.58e0, 1.14e0),
          7: (1.58e-2, 3.69e-2, 1.38e0, 8.22e-1), 10: (7.34e-3, 1.57e-2, 8.54e-1, 5.31e-1),
          13: (3.84e-3, 7.78e-3, 5.84e-1, 3.50e-1)}
TABLE3 = {19: (5.49e-2, 7.15e-3, 4.96e-1, 3.19e-1), 23: (2.95e-2, 2.03e-3, 1.98e-1, 1.19e-1),
          28: (1.41e-2, 6.52e-4, 7.97e-2, 4.91e-2), 33: (6.75e-3, 2.41e-4, 3.68e-2, 2.80e-2),
          37: (3.76e-3, 8.60e-5, 2.67e-2, 2.29e-2)}
TABLE5 = {3: (8.74e-2, 2.38e-1, 4.48e1, 2.34e0), 5: (3.95e-2, 1.60e-1, 4.44e1, 1.76e0),
          7: (1.97e-2, 1.17e-1, 4.37e1, 1.24e0), 9: (1.02e-2, 9.05e-2, 4.28e1, 8.94e-1),
          11: (5.47e-3, 7.01e-2, 4.14e1, 6.84e-1)}
TABLE6 = {18: (8.55e-2, 6.83e-3, 5.60e-1, 2.82e-1), 21: (4.56e-2, 2.99e-3, 2.49e-1, 1.37e-1),
          24: (2.39e-2, 1.31e-3, 1.23e-1, 6.72e-2), 28: (9.81e-3, 4.29e-4, 4.73e-2, 2.57e-2),
          31: (4.97e-3, 1.88e-4, 2.28e-2, 1.25e-2)}
NORMS = ("e_c0l2", "e_c0h1", "e_l2h1")


class Checks:
    """Collects named sub-checks for one criterion and emits its verdict line."""

    def __init__(self, number, title):
        self.number, self.title = number, title
        self.items = []

    def check(self, ok, label):
        self.items.append((bool(ok), label))
        return bool(ok)

    def close(self):
        failed = [label for ok, label in self.items if not ok]
        verdict = "PASS" if not failed else "FAIL"
        line = f"criterion {self.number} {verdict}: {self.title} ({len(self.items) - len(failed)}/{len(self.items)} checks)"
        RESULTS[self.number] = [line] + [f"    failed: {label}" for label in failed]
        print(line)
        for ok, label in self.items:
            print(f"    [{'ok' if ok else 'FAIL'}] {label}")
        assert not failed, "; ".join(failed)


def rel(a, b):
    return abs(a - b) / abs(b)


def compare_table(c, report, table, tol, with_tail=True):
    rows = {row.r: row for row in report.rows}
    for r, (lam, *errs) in table.items():
        row = rows.get(r)
        if not c.check(row is not None, f"{report.problem} {report.kind} r={r} computed"):
            continue
        if with_tail:
            c.check(rel(row.lambda_tail, lam) <= tol, f"r={r} Lambda {row.lambda_tail:.3e} vs {lam:.2e}")
        for name, ref in zip(NORMS, errs):
            val = getattr(row, name)
            c.check(rel(val, ref) <= tol, f"r={r} {name} {val:.3e} vs {ref:.2e} (tol {tol:.0%})")


def slope_checks(c, report, tag, bounds):
    for name, (lo, hi) in bounds.items():
        s = report.fits[name].slope
        c.check(lo <= s <= hi, f"{tag} {name} slope {s:.3f} in [{lo}, {hi}]")


HEAT_DQ_BOUNDS = {"e_c0l2": (1.4, np.inf), "e_c0h1": (0.95, np.inf), "e_l2h1": (0.85, 1.15)}
HEAT_NODQ_BOUNDS = {"e_c0l2": (-np.inf, 1.0), "e_c0h1": (-np.inf, 0.65), "e_l2h1": (-np.inf, 0.70)}
BURGERS_DQ_BOUNDS = {"e_c0l2": (1.0, np.inf), "e_c0h1": (1.0, np.inf), "e_l2h1": (1.0, np.inf)}
BURGERS_NODQ_BOUNDS = {"e_c0l2": (-np.inf, 0.6), "e_c0h1": (-np.inf, 0.15), "e_l2h1": (-np.inf, 0.6)}


# Criterion 7 runs first: it gates everything that depends on the forcing.
def test_criterion_7_forcing_oracle():
    c = Checks(7, "analytic heat forcing vs finite differences")
    rng = np.random.default_rng(100)
    x = rng.uniform(0, 1, 100)
    t = rng.uniform(0, 1, 100)
    ht, hx = 1e-5, 1e-4
    from podlab.pde_solvers import exact_heat

    ut = (exact_heat(x, t + ht) - exact_heat(x, t - ht)) / (2 * ht)
    uxx = (exact_heat(x + hx, t) - 2 * exact_heat(x, t) + exact_heat(x - hx, t)) / hx**2
    fd = ut - 1e-2 * uxx
    f = heat_forcing(x, t, 100.0, 1e-2)
    err = np.max(np.abs(f - fd)) / np.max(np.abs(f))
    c.check(err <= 1e-5, f"max relative deviation {err:.2e} <= 1e-5 on 100 random (x, t)")
    c.close()


def test_criterion_1_dt_study(tmp_path):
    c = Checks(1, "time-step study of the heat ROM")
    rc = main(["study-dt", "--output", str(tmp_path), "--no-plots"])
    c.check(rc == 0, "study-dt exit status 0")
    cols = {}
    for kind in ("nodq", "dq"):
        rows = read_csv(tmp_path / f"heat_dt_study_{kind}.csv")
        cols[kind] = {float(r["dt"]): float(r["e_l2l2"]) for r in rows}
        for dt, ref in TABLE1.items():
            val = cols[kind][dt]
            c.check(rel(val, ref) <= 0.25, f"{kind} dt={dt:g} E_L2L2 {val:.3e} vs {ref:.2e} (tol 25%)")
    for dt in TABLE1:
        c.check(rel(cols["nodq"][dt], cols["dq"][dt]) <= 1e-3, f"dt={dt:g} NoDQ and DQ agree")
    for row in read_csv(tmp_path / "heat_dt_study_fits.csv"):
        s = float(row["slope"])
        c.check(1.7 <= s <= 2.3, f"{row['series']} slope vs dt {s:.3f} in [1.7, 2.3]")
    c.close()


def test_criterion_2_heat_r_study(heat_nodq, heat_dq):
    c = Checks(2, "heat r-studies against the reference no-DQ and DQ tables")
    nodq = convergence_study_r(heat_nodq.problem, "nodq", list(TABLE2), setup=heat_nodq, jobs=4)
    dq = convergence_study_r(heat_dq.problem, "dq", list(TABLE3), setup=heat_dq, jobs=4)
    compare_table(c, nodq, TABLE2, 0.30)
    compare_table(c, dq, TABLE3, 0.30)
    slope_checks(c, dq, "DQ", HEAT_DQ_BOUNDS)
    slope_checks(c, nodq, "NoDQ", HEAT_NODQ_BOUNDS)
    c.close()


def test_criterion_3_burgers_r_study(burgers_traj, burgers_nodq, burgers_dq):
    c = Checks(3, "Burgers r-studies against the reference tables, plus the stride-10 smoke variant")
    p = BurgersProblem()
    nodq = convergence_study_r(p, "nodq", list(TABLE5), setup=burgers_nodq, jobs=4, diagnostics=False)
    dq = convergence_study_r(p, "dq", list(TABLE6), setup=burgers_dq, jobs=4, diagnostics=False)
    compare_table(c, nodq, TABLE5, 0.40)
    compare_table(c, dq, TABLE6, 0.40)
    slope_checks(c, dq, "stride 1 DQ", BURGERS_DQ_BOUNDS)
    slope_checks(c, nodq, "stride 1 NoDQ", BURGERS_NODQ_BOUNDS)

    # smoke variant: every 10th snapshot feeds the POD; ROM and error sampling unchanged
    mesh = burgers_traj.mesh
    for kind, table, bounds in (("dq", TABLE6, BURGERS_DQ_BOUNDS), ("nodq", TABLE5, BURGERS_NODQ_BOUNDS)):
        setup = prepare(p, kind, mesh, stride=10, traj=burgers_traj)
        rep = convergence_study_r(p, kind, list(table), setup=setup, jobs=4, diagnostics=False)
        if c.check(len(rep.rows) == 5, f"stride 10 {kind} all r retained (d={setup.basis.d})"):
            slope_checks(c, rep, f"stride 10 {kind.upper() if kind == 'dq' else 'NoDQ'}", bounds)
    c.close()


def test_criterion_4_pod_properties(heat_nodq, heat_dq, burgers_nodq, burgers_dq, small_heat):
    c = Checks(4, "POD orthonormality, approximation identity, primal/dual agreement, projection optimality")
    for name, s in (("heat NoDQ", heat_nodq), ("heat DQ", heat_dq),
                    ("Burgers NoDQ", burgers_nodq), ("Burgers DQ", burgers_dq)):
        b = s.basis
        dev = np.max(np.abs(gram_matrix(b) - np.eye(b.d)))
        c.check(dev <= 1e-10, f"{name} orthonormality {dev:.1e} (d={b.d})")
        worst = max(approximation_residual(s.ensemble, b, r) for r in range(b.d + 1))
        c.check(worst <= 1e-8, f"{name} approximation identity, worst over r=0..d: {worst:.1e}")

    ens, mass = small_heat.ensemble, small_heat.basis.mass
    primal = pod_basis(ens, mass, method="primal")
    dual = pod_basis(ens, mass, method="dual")
    c.check(primal.d == dual.d, f"16-cell primal/dual rank {primal.d} == {dual.d}")
    dev = np.max(np.abs(primal.lambdas - dual.lambdas) / primal.lambdas)
    c.check(dev <= 1e-9, f"16-cell primal/dual eigenvalues agree to {dev:.1e}")

    b = heat_nodq.basis
    r = 10
    rng = np.random.default_rng(4)
    l2 = lambda v: np.sqrt(b.mass.inner(v, v))  # noqa: E731
    semi = lambda v: np.sqrt(b.stiffness.inner(v, v))  # noqa: E731
    beaten = {"L2": 0, "Ritz": 0}
    for _ in range(50):
        field = rng.standard_normal(b.mesh.n_dofs)
        for tag, proj, norm in (("L2", l2_project, l2), ("Ritz", ritz_project, semi)):
            a = proj(field, b, r)
            best = norm(field - reconstruct(a, b))
            for _ in range(20):
                da = rng.standard_normal(r) * rng.choice([1e-6, 1e-3, 1.0])
                if norm(field - reconstruct(a + da, b)) < best - 1e-14:
                    beaten[tag] += 1
    for tag, n in beaten.items():
        c.check(n == 0, f"{tag} projection never beaten by 20 perturbations on 50 fields ({n} losses)")
    c.close()


def test_criterion_5_inverse_estimate_and_scaling(heat_nodq, heat_dq, burgers_dq):
    c = Checks(5, "POD inverse estimate, Fourier stiffness diagonal, heat ||S_r||_2 scaling")
    for name, s in (("heat NoDQ", heat_nodq), ("heat DQ", heat_dq), ("Burgers DQ", burgers_dq)):
        d = s.basis.d
        for r in sorted({1, 2, 5, 10, 20, d // 2, d}):
            worst, top = inverse_estimate_check(s.basis, r, n_samples=200, seed=r)
            c.check(worst <= 1 + 1e-12 and abs(top - 1) <= 1e-8,
                    f"{name} r={r}: max ratio {worst:.6f}, top eigenvector {top:.10f}")

    j = np.arange(1, 5)
    diag = fourier_stiffness_diagonal(4096, 4)
    dev = np.max(np.abs(diag / ((j * np.pi) ** 2 / 2) - 1))
    c.check(dev <= 1e-6, f"sin(j pi x), j=1..4, 4096 cells: diagonal vs (j pi)^2/2 within {dev:.1e}")

    for name, s in (("heat NoDQ", heat_nodq), ("heat DQ", heat_dq)):
        st = stiffness_scaling_study(s.basis)
        c.check(st.fit.slope > 0, f"{name} ||S_r||_2 slope vs r {st.fit.slope:.3f} (Fourier prediction {st.fourier_slope:g})")
    c.close()


def test_criterion_6_full_rank_equivalence(small_heat):
    c = Checks(6, "full-rank heat ROM reproduces the FOM on 16 cells")
    b, traj = small_heat.basis, small_heat.traj
    c.check(b.d == small_heat.mesh.n_dofs, f"snapshots span the FEM space (d={b.d})")
    rt = simulate_rom(small_heat.problem, b, b.d, traj.dt, traj.fields[0])
    diff = lift(rt, b).fields - traj.fields
    dev = max(np.sqrt(b.mass.inner(e, e)) for e in diff)
    c.check(dev <= 1e-8, f"max over time of L2 deviation {dev:.1e} <= 1e-8")
    c.close()


def test_burgers_coarse_fom_variant_informational(fine_mesh):
    """Not a criterion. A ten-times coarser FOM step, all snapshots kept, keeps every slope verdict.

    Contrast with the stride-10 sub-check of criterion 3, which subsamples the
    fine run and loses the initial transient.
    """
    p = BurgersProblem()
    traj = solve_fom(p, fine_mesh, 1e-3)
    for kind, table, bounds in (("dq", TABLE6, BURGERS_DQ_BOUNDS), ("nodq", TABLE5, BURGERS_NODQ_BOUNDS)):
        setup = prepare(p, kind, fine_mesh, traj=traj)
        rep = convergence_study_r(p, kind, list(table), setup=setup, jobs=4, diagnostics=False)
        for name, (lo, hi) in bounds.items():
            assert lo <= rep.fits[name].slope <= hi, (kind, name, rep.fits[name].slope)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
