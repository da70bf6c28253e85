"""Full-order finite-element solvers for the heat and Burgers equations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_solve_banded, solve_banded

from .errors import NewtonConvergenceError, SolverError
from .fem1d import Mesh1D, assemble_mass, assemble_stiffness, interpolate, load_vector

CRANK_NICOLSON = "crank-nicolson"
BACKWARD_EULER = "backward-euler"


def exact_heat(x, t, c=100.0):
    """Steep front travelling to the right, zero at x = 0 and x = 1."""
    x = np.asarray(x, dtype=float)
    z = c / 25.0 - c * (x - t / 2.0) ** 2
    return np.sin(np.pi * x) * (np.arctan(z) / np.pi + 0.5)


def exact_heat_dt(x, t, c=100.0):
    x = np.asarray(x, dtype=float)
    s = x - t / 2.0
    z = c / 25.0 - c * s**2
    return np.sin(np.pi * x) * c * s / (np.pi * (1.0 + z**2))


def exact_heat_dx(x, t, c=100.0):
    x = np.asarray(x, dtype=float)
    s = x - t / 2.0
    z = c / 25.0 - c * s**2
    g = np.arctan(z) / np.pi + 0.5
    gx = -2.0 * c * s / (np.pi * (1.0 + z**2))
    return np.pi * np.cos(np.pi * x) * g + np.sin(np.pi * x) * gx


def exact_heat_dxx(x, t, c=100.0):
    x = np.asarray(x, dtype=float)
    s = x - t / 2.0
    z = c / 25.0 - c * s**2
    zx = -2.0 * c * s
    g = np.arctan(z) / np.pi + 0.5
    gx = zx / (np.pi * (1.0 + z**2))
    gxx = (-2.0 * c * (1.0 + z**2) - 2.0 * z * zx**2) / (np.pi * (1.0 + z**2) ** 2)
    sx, cx = np.sin(np.pi * x), np.cos(np.pi * x)
    return -np.pi**2 * sx * g + 2.0 * np.pi * cx * gx + sx * gxx


def heat_forcing(x, t, c=100.0, nu=1e-2):
    """Right-hand side that makes :func:`exact_heat` solve u_t - nu u_xx = f."""
    return exact_heat_dt(x, t, c) - nu * exact_heat_dxx(x, t, c)


def burgers_step_initial(x):
    """1 on (0, 1/2], 0 on (1/2, 1)."""
    x = np.asarray(x, dtype=float)
    return np.where((x > 0.0) & (x <= 0.5), 1.0, 0.0)


@dataclass(frozen=True)
class HeatProblem:
    nu: float = 1e-2
    c: float = 100.0
    t_final: float = 1.0
    forcing: Optional[Callable] = None
    initial: Optional[Callable] = None

    def __post_init__(self):
        if self.nu < 0 or self.c <= 0 or self.t_final < 0:
            raise ValueError(f"invalid heat problem parameters: {self}")

    def exact(self, x, t):
        return exact_heat(x, t, self.c)

    def exact_dx(self, x, t):
        return exact_heat_dx(x, t, self.c)

    def f(self, x, t):
        if self.forcing is not None:
            return self.forcing(x, t)
        return heat_forcing(x, t, self.c, self.nu)

    def u0(self, x):
        if self.initial is not None:
            return self.initial(x)
        return self.exact(x, 0.0)


@dataclass(frozen=True)
class BurgersProblem:
    nu: float = 1e-2
    t_final: float = 1.0
    initial: Callable = burgers_step_initial

    def __post_init__(self):
        if self.nu <= 0 or self.t_final < 0:
            raise ValueError(f"invalid Burgers problem parameters: {self}")


@dataclass(frozen=True)
class NewtonSettings:
    tol: float = 1e-10
    max_iter: int = 50


@dataclass
class Trajectory:
    """Nodal fields at the uniform times 0, dt, ..., N dt (one row per time)."""

    fields: np.ndarray
    dt: float
    mesh: Mesh1D
    scheme: str
    newton_iterations: list = field(default_factory=list)
    problem: str = ""

    @property
    def n_steps(self) -> int:
        return self.fields.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.fields.shape[0]) * self.dt

    def __len__(self):
        return self.fields.shape[0]


def n_time_steps(t_final: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError(f"time step must be positive, got {dt}")
    n = int(round(t_final / dt))
    if abs(n * dt - t_final) > 1e-12:
        raise ValueError(f"dt={dt} does not divide t_final={t_final}")
    return n


def newton(residual, jac_solve, x0, settings: NewtonSettings, step: int = -1):
    """Plain Newton iteration; at least one update is taken.

    ``residual(x)`` returns the scaled residual vector and ``jac_solve(x, r)``
    returns J(x)^{-1} r. Returns the converged iterate and the number of updates.
    """
    x = np.array(x0, dtype=float)
    res = residual(x)
    for it in range(1, settings.max_iter + 1):
        x -= jac_solve(x, res)
        res = residual(x)
        rnorm = np.max(np.abs(res)) if res.size else 0.0
        if not np.isfinite(rnorm):
            break
        if rnorm <= settings.tol:
            return x, it
    rnorm = np.max(np.abs(res)) if res.size else 0.0
    raise NewtonConvergenceError(step, settings.max_iter, float(rnorm))


def solve_heat(problem: HeatProblem, mesh: Mesh1D, dt: float) -> Trajectory:
    """Crank-Nicolson in time, P1 elements in space."""
    n_steps = n_time_steps(problem.t_final, dt)
    M, S = assemble_mass(mesh), assemble_stiffness(mesh)
    lhs = M + S.scaled(0.5 * problem.nu * dt)
    rhs_op = M - S.scaled(0.5 * problem.nu * dt)
    try:
        chol = lhs.cholesky_banded()
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"Crank-Nicolson matrix is not positive definite: {exc}") from exc

    out = np.empty((n_steps + 1, mesh.n_dofs))
    out[0] = interpolate(mesh, problem.u0)
    F_old = load_vector(mesh, lambda x: problem.f(x, 0.0))
    for n in range(n_steps):
        t_new = (n + 1) * dt
        F_new = load_vector(mesh, lambda x: problem.f(x, t_new))
        b = rhs_op @ out[n] + 0.5 * dt * (F_old + F_new)
        out[n + 1] = cho_solve_banded((chol, False), b, check_finite=False)
        F_old = F_new
    return Trajectory(out, dt, mesh, CRANK_NICOLSON, problem="heat")


def burgers_convection(u) -> np.ndarray:
    """Galerkin vector (u u_x, phi_i) for P1 u with zero boundary values."""
    up = np.concatenate(([0.0], u, [0.0]))
    return (up[2:] - up[:-2]) * (up[2:] + up[1:-1] + up[:-2]) / 6.0


def burgers_convection_jacobian(u):
    """Sub, main and super diagonals of d(u u_x, phi_i)/du_j."""
    up = np.concatenate(([0.0], u, [0.0]))
    lower = -(2.0 * up[:-2] + up[1:-1]) / 6.0
    main = (up[2:] - up[:-2]) / 6.0
    upper = (2.0 * up[2:] + up[1:-1]) / 6.0
    return lower, main, upper


def solve_burgers(
    problem: BurgersProblem,
    mesh: Mesh1D,
    dt: float,
    newton_settings: NewtonSettings = NewtonSettings(),
    u0=None,
) -> Trajectory:
    """Backward Euler in time with Newton's method at every step."""
    n_steps = n_time_steps(problem.t_final, dt)
    M, S = assemble_mass(mesh), assemble_stiffness(mesh)
    A = M + S.scaled(problem.nu * dt)
    h = mesh.h

    out = np.empty((n_steps + 1, mesh.n_dofs))
    out[0] = interpolate(mesh, problem.initial) if u0 is None else u0
    iters = []

    def jac_solve(u, r):
        lo, mid, up = burgers_convection_jacobian(u)
        ab = np.zeros((3, u.size))
        ab[0, 1:] = A.off + dt * up[:-1]
        ab[1] = A.diag + dt * mid
        ab[2, :-1] = A.off + dt * lo[1:]
        return solve_banded((1, 1), ab, r * h, check_finite=False)

    for n in range(n_steps):
        prev = out[n]
        Mprev = M @ prev

        # residual scaled by 1/h so that it is O(1) in nodal units
        def residual(u):
            return (A @ u - Mprev + dt * burgers_convection(u)) / h

        out[n + 1], k = newton(residual, jac_solve, prev, newton_settings, step=n + 1)
        iters.append(k)
    return Trajectory(out, dt, mesh, BACKWARD_EULER, newton_iterations=iters, problem="burgers")
