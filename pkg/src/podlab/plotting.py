"""Report figures rendered to files with matplotlib (non-interactive backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "svg.hashsalt": "podlab",
}

NORM_LABELS = {
    "e_c0l2": r"$\mathcal{E}_{C^0(L^2)}$",
    "e_c0h1": r"$\mathcal{E}_{C^0(H^1)}$",
    "e_l2h1": r"$\mathcal{E}_{L^2(H^1)}$",
}
KIND_LABELS = {"nodq": "no-DQ", "dq": "DQ"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def figure(ncols=1, nrows=1, width=3.4, aspect=0.75):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(nrows, ncols, figsize=(width * ncols, width * aspect * nrows), squeeze=False)
    return fig, ax


def plot_r_study(report, path):
    """Each error norm against Lambda_r with its regression line."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(10.2, 2.8))
        lam = report.column("lambda_tail")
        for ax, name in zip(axes, report.NORMS):
            ys = report.column(name)
            ax.loglog(lam, ys, "o", label=KIND_LABELS.get(report.kind, report.kind))
            fit = report.fits.get(name)
            if fit is not None:
                xx = np.geomspace(lam.min(), lam.max(), 50)
                ax.loglog(xx, fit.predict(xx), "--", label=f"LR slope {fit.slope:.2f}")
            ax.set_xlabel(r"$\Lambda_r$")
            ax.set_title(NORM_LABELS[name])
            ax.legend()
        fig.suptitle(f"{report.problem}: error vs $\\Lambda_r$")
        return _save(fig, path)


def plot_dt_study(study, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        for (kind, rows), marker in zip(study.cases.items(), ("o", "x")):
            dts = np.array([r.dt for r in rows])
            ax.loglog(dts, [r.e_l2l2 for r in rows], marker, label=KIND_LABELS.get(kind, kind))
            fit = study.fits.get(kind)
            if fit is not None:
                ax.loglog(dts, fit.predict(dts), "--", label=f"LR {KIND_LABELS.get(kind, kind)} slope {fit.slope:.2f}")
        ax.set_xlabel(r"$\Delta t$")
        ax.set_ylabel(r"$\mathcal{E}_{L^2(L^2)}$")
        ax.legend()
        return _save(fig, path)


def plot_stiffness(studies: dict, path):
    """``studies`` maps a label (e.g. kind) to a StiffnessStudy."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        for label, st in studies.items():
            ax.loglog(st.r, st.s_norm2, "-", label=KIND_LABELS.get(label, label))
        rr = np.arange(1, max(int(st.r.max()) for st in studies.values()) + 1)
        ax.loglog(rr, 0.5 * (rr * np.pi) ** 2, ":", color="k", label=r"$\frac{1}{2}(r\pi)^2$")
        ax.set_xlabel("r")
        ax.set_ylabel(r"$\|S_r\|_2$")
        ax.legend()
        return _save(fig, path)


def plot_basis(basis, path, n_modes=4):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        x = basis.mesh.nodes
        for k in range(min(n_modes, basis.d)):
            ax.plot(x, np.pad(basis.phis[k], 1), label=rf"$\varphi_{k + 1}$")
        ax.set_xlabel("x")
        ax.set_title(f"POD basis ({KIND_LABELS.get(basis.kind, basis.kind)})")
        ax.legend()
        return _save(fig, path)


def plot_spectrum(basis, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        ax.semilogy(np.arange(1, basis.d + 1), basis.lambdas, ".")
        ax.set_xlabel("j")
        ax.set_ylabel(r"$\lambda_j$")
        return _save(fig, path)


def plot_solution(traj, path, n_curves=6):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        x = traj.mesh.nodes
        idx = np.unique(np.linspace(0, traj.n_steps, n_curves).round().astype(int))
        for j in idx:
            ax.plot(x, np.pad(traj.fields[j], 1), label=f"t={j * traj.dt:.2f}")
        ax.set_xlabel("x")
        ax.legend()
        return _save(fig, path)
