"""Proper orthogonal decomposition in the L2 (mass-weighted) inner product.

Two equivalent eigensolves are available. The snapshot ("primal") route
diagonalises the M x M correlation matrix K_ij = (s_j, s_i) / M. The spatial
("dual") route diagonalises U Y Y^T U^T / M of order n_dofs, where U^T U is the
Cholesky factorisation of the mass matrix. Both give the same nonzero
eigenvalues; the dual route is used automatically when M > n_dofs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import DegenerateEnsembleError, DimensionError, SolverError
from .fem1d import Mesh1D, SymTridiag, assemble_stiffness, batch_norms

DEFAULT_EIG_TOL = 1e-13


@dataclass
class PodBasis:
    lambdas: np.ndarray  # retained eigenvalues, descending
    phis: np.ndarray  # (d, n_dofs), L2-orthonormal rows
    mass: SymTridiag
    stiffness: SymTridiag
    mesh: Mesh1D
    kind: str = ""
    n_snapshots: int = 0
    method: str = ""
    spectrum: np.ndarray = None  # every eigenvalue of the eigenproblem, descending
    eig_tol: float = DEFAULT_EIG_TOL

    @property
    def d(self) -> int:
        return self.lambdas.shape[0]

    def tails(self) -> np.ndarray:
        """tails[r] = sum_{j > r} lambda_j for r = 0..d, summed smallest first."""
        rev = np.cumsum(self.lambdas[::-1])[::-1]
        return np.concatenate((rev, [0.0]))

    def check_r(self, r, lo=0):
        if int(r) != r or r < lo or r > self.d:
            raise ValueError(f"r={r} outside [{lo}, {self.d}]")
        return int(r)


@dataclass
class PodStiffness:
    matrix: np.ndarray
    norm2: float


def correlation_matrix(ens, mass: SymTridiag) -> np.ndarray:
    Y = np.asarray(getattr(ens, "fields", ens), dtype=float)
    if Y.ndim != 2 or Y.shape[1] != mass.n:
        raise DimensionError(f"snapshots of shape {Y.shape} do not match mass matrix of order {mass.n}")
    M = Y.shape[0]
    K = Y @ (mass @ Y.T) / M
    # upper triangle is authoritative; mirror it so K is exactly symmetric
    return np.triu(K) + np.triu(K, 1).T


def _mass_factor(mass: SymTridiag) -> np.ndarray:
    """Upper bidiagonal Cholesky factor U (banded storage) with U^T U = mass."""
    return mass.cholesky_banded()


def _apply_upper(ub: np.ndarray, X: np.ndarray) -> np.ndarray:
    out = ub[1][:, None] * X
    out[:-1] += ub[0, 1:][:, None] * X[1:]
    return out


def _sign_fix(phis: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(phis), axis=1)
    signs = np.sign(phis[np.arange(phis.shape[0]), idx])
    signs[signs == 0] = 1.0
    return phis * signs[:, None]


def primal_eigensolve(Y: np.ndarray, mass: SymTridiag):
    """Eigenpairs of the M x M correlation matrix (descending)."""
    K = correlation_matrix(Y, mass)
    lam, V = np.linalg.eigh(K)
    lam, V = lam[::-1], V[:, ::-1]
    return lam, V


def dual_eigensolve(Y: np.ndarray, mass: SymTridiag):
    """Eigenpairs of the n_dofs-order spatial problem (descending)."""
    M = Y.shape[0]
    ub = _mass_factor(mass)
    W = _apply_upper(ub, Y.T)
    C = W @ W.T / M
    C = np.triu(C) + np.triu(C, 1).T
    lam, Wv = np.linalg.eigh(C)
    return lam[::-1], Wv[:, ::-1], ub


def pod_basis(ens, mass: SymTridiag, eig_tol: float = DEFAULT_EIG_TOL, method: str = "auto",
              stiffness: SymTridiag | None = None) -> PodBasis:
    """POD basis of a snapshot ensemble.

    Eigenpairs with lambda <= eig_tol * lambda_1 are discarded; the number kept
    is the effective rank d. Basis fields are sign-fixed so that their entry of
    largest magnitude is positive.
    """
    Y = np.asarray(ens.fields, dtype=float)
    M, n = Y.shape
    if M == 0:
        raise DegenerateEnsembleError("empty ensemble")
    if n != mass.n:
        raise DimensionError(f"snapshots have {n} dofs, mass matrix has order {mass.n}")
    if method == "auto":
        method = "dual" if M > n else "primal"

    if method == "primal":
        lam, V = primal_eigensolve(Y, mass)
    elif method == "dual":
        lam, Wv, ub = dual_eigensolve(Y, mass)
    else:
        raise ValueError(f"unknown eigensolve method {method!r}")

    if lam.size == 0 or not lam[0] > 0:
        raise DegenerateEnsembleError("ensemble carries no energy")
    keep = lam > eig_tol * lam[0]
    d = int(np.count_nonzero(keep))
    lambdas = lam[:d].copy()

    if method == "primal":
        phis = (V[:, :d].T @ Y) / np.sqrt(M * lambdas)[:, None]
        # modes near the cutoff lose orthogonality as eps*lambda_1/lambda_k;
        # the symmetric (Loewdin) correction restores it with minimal change
        G = phis @ (mass @ phis.T)
        w, Q = np.linalg.eigh(G)
        phis = (Q / np.sqrt(w)) @ Q.T @ phis
    else:
        rhs = Wv[:, :d]
        phis = solve_banded((0, 1), ub, rhs, check_finite=False).T

    mesh = getattr(ens, "mesh", None)
    if stiffness is None:
        stiffness = assemble_stiffness(mesh)
    return PodBasis(
        lambdas=lambdas,
        phis=_sign_fix(phis),
        mass=mass,
        stiffness=stiffness,
        mesh=mesh,
        kind=getattr(ens, "kind", ""),
        n_snapshots=M,
        method=method,
        spectrum=lam,
        eig_tol=eig_tol,
    )


def eigen_tail(basis: PodBasis, r: int) -> float:
    r = basis.check_r(r)
    return float(np.sqrt(max(basis.tails()[r], 0.0)))


def gram_matrix(basis: PodBasis, r=None) -> np.ndarray:
    P = basis.phis[: basis.d if r is None else r]
    return P @ (basis.mass @ P.T)


def pod_stiffness(basis: PodBasis, r: int, stiffness: SymTridiag | None = None) -> PodStiffness:
    r = basis.check_r(r, lo=1)
    S = basis.stiffness if stiffness is None else stiffness
    P = basis.phis[:r]
    Sr = P @ (S @ P.T)
    Sr = np.triu(Sr) + np.triu(Sr, 1).T
    return PodStiffness(Sr, float(np.linalg.eigvalsh(Sr)[-1]))


def l2_project(field, basis: PodBasis, r: int) -> np.ndarray:
    """Coefficients (field, phi_j) for j <= r. Accepts one field or a stack of rows."""
    r = basis.check_r(r)
    field = np.asarray(field, dtype=float)
    return (basis.mass @ field.T).T @ basis.phis[:r].T


def reconstruct(coeffs, basis: PodBasis) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    r = coeffs.shape[-1]
    return coeffs @ basis.phis[:r]


def ritz_project(field, basis: PodBasis, r: int, stiffness: SymTridiag | None = None) -> np.ndarray:
    """Coefficients of the H1-seminorm orthogonal projection onto span(phi_1..phi_r)."""
    r = basis.check_r(r)
    if r == 0:
        return np.zeros(np.asarray(field).shape[:-1] + (0,))
    S = basis.stiffness if stiffness is None else stiffness
    Sr = pod_stiffness(basis, r, S).matrix
    b = (S @ np.asarray(field, dtype=float).T).T @ basis.phis[:r].T
    try:
        cf = np.linalg.cholesky(Sr)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"POD stiffness matrix of order {r} is numerically singular") from exc
    y = np.linalg.solve(cf, b.T)
    return np.linalg.solve(cf.T, y).T


def interp_error(field, basis: PodBasis, r: int):
    """POD interpolation error of ``field`` and its L2 norm and H1 seminorm.

    For a stack of fields, the norms are returned as arrays.
    """
    a = l2_project(field, basis, r)
    eta = np.asarray(field, dtype=float) - reconstruct(a, basis)
    l2sq, h1sq = batch_norms(eta, basis.mass, basis.stiffness)
    if eta.ndim == 1:
        return eta, float(np.sqrt(l2sq[0])), float(np.sqrt(h1sq[0]))
    return eta, np.sqrt(l2sq), np.sqrt(h1sq)


def approximation_residual(ens, basis: PodBasis, r: int) -> float:
    """Defect of (1/M) sum_i ||eta(s_i)||^2 = sum_{j>r} lambda_j, relative to sum_j lambda_j."""
    _, l2, _ = interp_error(ens.fields, basis, r)
    lhs = float(np.sum(l2**2)) / ens.M
    tails = basis.tails()
    return abs(lhs - tails[r]) / tails[0]
