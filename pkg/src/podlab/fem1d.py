"""Piecewise-linear finite elements on a uniform mesh of [0, 1].

Homogeneous Dirichlet conditions are built in: a nodal field is the vector of
its values at the interior nodes, boundary values being implicitly zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky_banded, solveh_banded

from .errors import DimensionError, InvalidMeshError

# 2-point Gauss-Legendre rule on the reference cell [0, 1]
GAUSS_POINTS = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))
GAUSS_WEIGHTS = np.array([0.5, 0.5])


@dataclass(frozen=True)
class Mesh1D:
    n_cells: int

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n_cells + 1, dtype=float) / self.n_cells
        x[-1] = 1.0
        return x

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def n_dofs(self) -> int:
        return self.n_cells - 1


def build_mesh(n_cells: int) -> Mesh1D:
    if int(n_cells) != n_cells or n_cells < 2:
        raise InvalidMeshError(f"need an integer n_cells >= 2, got {n_cells!r}")
    return Mesh1D(int(n_cells))


@dataclass(frozen=True)
class SymTridiag:
    """Symmetric tridiagonal matrix stored as main and off diagonals."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    @property
    def shape(self):
        return (self.n, self.n)

    def __matmul__(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n:
            raise DimensionError(f"operand has {v.shape[0]} rows, matrix order is {self.n}")
        d = self.diag if v.ndim == 1 else self.diag[:, None]
        o = self.off if v.ndim == 1 else self.off[:, None]
        out = d * v
        out[:-1] += o * v[1:]
        out[1:] += o * v[:-1]
        return out

    def __add__(self, other: SymTridiag) -> SymTridiag:
        return SymTridiag(self.diag + other.diag, self.off + other.off)

    def __sub__(self, other: SymTridiag) -> SymTridiag:
        return SymTridiag(self.diag - other.diag, self.off - other.off)

    def scaled(self, a: float) -> SymTridiag:
        return SymTridiag(a * self.diag, a * self.off)

    def inner(self, u, v) -> float:
        return float(np.dot(u, self @ v))

    def banded(self) -> np.ndarray:
        """Upper banded storage as expected by ``scipy.linalg.solveh_banded``."""
        ab = np.zeros((2, self.n))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        return ab

    def solve(self, rhs):
        if self.n == 1:  # scipy's tridiagonal path rejects 1x1 systems
            return np.asarray(rhs, dtype=float) / self.diag[0]
        return solveh_banded(self.banded(), rhs, check_finite=False)

    def cholesky_banded(self) -> np.ndarray:
        return cholesky_banded(self.banded())

    def toarray(self) -> np.ndarray:
        a = np.diag(self.diag)
        a += np.diag(self.off, 1) + np.diag(self.off, -1)
        return a


MassMatrix = SymTridiag
StiffnessMatrix = SymTridiag


def assemble_mass(mesh: Mesh1D) -> SymTridiag:
    n, h = mesh.n_dofs, mesh.h
    return SymTridiag(np.full(n, 2.0 * h / 3.0), np.full(n - 1, h / 6.0))


def assemble_stiffness(mesh: Mesh1D) -> SymTridiag:
    n, h = mesh.n_dofs, mesh.h
    return SymTridiag(np.full(n, 2.0 / h), np.full(n - 1, -1.0 / h))


def interpolate(mesh: Mesh1D, func) -> np.ndarray:
    """Nodal interpolant of ``func`` (vectorised in x) on the interior nodes."""
    vals = np.asarray(func(mesh.interior), dtype=float)
    return np.broadcast_to(vals, (mesh.n_dofs,)).copy()


def load_vector(mesh: Mesh1D, func) -> np.ndarray:
    """Load vector (f, phi_i) by 2-point Gauss quadrature on every cell."""
    h = mesh.h
    left = mesh.nodes[:-1]
    F = np.zeros(mesh.n_cells + 1)
    for xi, w in zip(GAUSS_POINTS, GAUSS_WEIGHTS):
        fx = np.asarray(func(left + xi * h), dtype=float) * (w * h)
        F[:-1] += fx * (1.0 - xi)
        F[1:] += fx * xi
    return F[1:-1]


def norms(field, mass: SymTridiag, stiffness: SymTridiag):
    """(L2 norm, H1 seminorm, full H1 norm) of a nodal field."""
    field = np.asarray(field, dtype=float)
    if field.shape != (mass.n,) or stiffness.n != mass.n:
        raise DimensionError(f"field of shape {field.shape} does not match matrices of order {mass.n}")
    l2sq = max(mass.inner(field, field), 0.0)
    h1sq = max(stiffness.inner(field, field), 0.0)
    return np.sqrt(l2sq), np.sqrt(h1sq), np.sqrt(l2sq + h1sq)


def batch_norms(fields, mass: SymTridiag, stiffness: SymTridiag):
    """Row-wise squared L2 norms and H1 seminorms of a (k, n_dofs) stack."""
    fields = np.atleast_2d(np.asarray(fields, dtype=float))
    if fields.shape[1] != mass.n:
        raise DimensionError(f"fields have {fields.shape[1]} columns, matrices have order {mass.n}")
    l2sq = np.einsum("ij,ji->i", fields, mass @ fields.T)
    h1sq = np.einsum("ij,ji->i", fields, stiffness @ fields.T)
    return np.maximum(l2sq, 0.0), np.maximum(h1sq, 0.0)
