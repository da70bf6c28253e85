"""Galerkin reduced-order models on the span of the leading POD modes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fem1d import load_vector
from .pde_solvers import (
    BACKWARD_EULER,
    CRANK_NICOLSON,
    BurgersProblem,
    NewtonSettings,
    Trajectory,
    n_time_steps,
    newton,
)
from .pod import PodBasis, l2_project, pod_stiffness


@dataclass
class RomOperators:
    r: int
    nu: float
    mass_r: np.ndarray
    stiff_r: np.ndarray
    load_r: Optional[Callable] = None
    tensor_r: Optional[np.ndarray] = None

    @property
    def problem(self) -> str:
        return "burgers" if self.tensor_r is not None else "heat"

    def q(self, a):
        """Reduced convection sum_jk N_ijk a_j a_k."""
        return np.einsum("ijk,j,k->i", self.tensor_r, a, a)

    def q_jacobian(self, a):
        return np.einsum("ijk,k->ij", self.tensor_r, a) + np.einsum("ijk,j->ik", self.tensor_r, a)


@dataclass
class RomTrajectory:
    coeffs: np.ndarray  # (N+1, r)
    dt: float
    scheme: str
    newton_iterations: list = field(default_factory=list)

    @property
    def times(self):
        return np.arange(self.coeffs.shape[0]) * self.dt


def _reduced_mass(basis, r):
    P = basis.phis[:r]
    mass_r = P @ (basis.mass @ P.T)
    if r and np.max(np.abs(mass_r - np.eye(r))) > 1e-10:
        raise ValueError("POD basis is not L2-orthonormal; reduced mass differs from identity")
    return np.eye(r)


def build_heat_rom(basis: PodBasis, r: int, nu: float, forcing=None) -> RomOperators:
    """Operators of the reduced heat equation; ``forcing(x, t)`` may be None for f = 0."""
    r = basis.check_r(r, lo=1)
    P = basis.phis[:r]
    stiff = pod_stiffness(basis, r).matrix
    if forcing is None:
        load = lambda t: np.zeros(r)  # noqa: E731
    else:
        load = lambda t: P @ load_vector(basis.mesh, lambda x: forcing(x, t))  # noqa: E731
    return RomOperators(r, nu, _reduced_mass(basis, r), stiff, load_r=load)


def convection_tensor(basis: PodBasis, r: int) -> np.ndarray:
    """N_ijk = (phi_j dphi_k/dx, phi_i), integrated exactly cell by cell."""
    P = np.pad(basis.phis[:r], ((0, 0), (1, 1)))
    A, B = P[:, :-1], P[:, 1:]
    h = basis.mesh.h
    D = (B - A) / h
    lin = lambda X, Y: np.einsum("ie,je,ke->ijk", X, Y, D)  # noqa: E731
    return (h / 6.0) * (2.0 * lin(A, A) + lin(A, B) + lin(B, A) + 2.0 * lin(B, B))


def build_burgers_rom(basis: PodBasis, r: int, nu: float) -> RomOperators:
    r = basis.check_r(r, lo=1)
    stiff = pod_stiffness(basis, r).matrix
    return RomOperators(r, nu, _reduced_mass(basis, r), stiff, tensor_r=convection_tensor(basis, r))


def solve_rom(ops: RomOperators, scheme: str, a0, dt: float, t_final: float,
              newton_settings: NewtonSettings = NewtonSettings()) -> RomTrajectory:
    n_steps = n_time_steps(t_final, dt)
    r = ops.r
    out = np.empty((n_steps + 1, r))
    out[0] = a0
    iters = []
    if scheme == CRANK_NICOLSON:
        if ops.tensor_r is not None:
            raise ValueError("Crank-Nicolson ROM is only implemented for the linear heat problem")
        half = 0.5 * ops.nu * dt * ops.stiff_r
        fac = cho_factor(ops.mass_r + half)
        rhs_op = ops.mass_r - half
        b_old = ops.load_r(0.0)
        for n in range(n_steps):
            b_new = ops.load_r((n + 1) * dt)
            out[n + 1] = cho_solve(fac, rhs_op @ out[n] + 0.5 * dt * (b_old + b_new))
            b_old = b_new
    elif scheme == BACKWARD_EULER:
        A = ops.mass_r + ops.nu * dt * ops.stiff_r
        load = ops.load_r if ops.load_r is not None else (lambda t: np.zeros(r))
        for n in range(n_steps):
            prev = out[n]
            b = ops.mass_r @ prev + dt * load((n + 1) * dt)
            if ops.tensor_r is None:
                out[n + 1] = np.linalg.solve(A, b)
                continue

            def residual(a):
                return A @ a + dt * ops.q(a) - b

            def jac_solve(a, res):
                return np.linalg.solve(A + dt * ops.q_jacobian(a), res)

            out[n + 1], k = newton(residual, jac_solve, prev, newton_settings, step=n + 1)
            iters.append(k)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return RomTrajectory(out, dt, scheme, iters)


def lift(rt: RomTrajectory, basis: PodBasis) -> Trajectory:
    r = rt.coeffs.shape[1]
    if r > basis.d:
        raise ValueError(f"trajectory has {r} coefficients, basis only {basis.d} modes")
    fields = rt.coeffs @ basis.phis[:r]
    return Trajectory(fields, rt.dt, basis.mesh, rt.scheme, list(rt.newton_iterations))


def simulate_rom(problem, basis: PodBasis, r: int, dt: float, u0,
                 newton_settings: NewtonSettings = NewtonSettings()):
    """Build, initialise (L2 projection of ``u0``) and integrate the r-mode ROM.

    Uses the same time scheme as the full-order solver for ``problem``.
    Returns the coefficient trajectory.
    """
    a0 = l2_project(u0, basis, r)
    if isinstance(problem, BurgersProblem):
        ops = build_burgers_rom(basis, r, problem.nu)
        return solve_rom(ops, BACKWARD_EULER, a0, dt, problem.t_final, newton_settings)
    ops = build_heat_rom(basis, r, problem.nu, problem.f)
    return solve_rom(ops, CRANK_NICOLSON, a0, dt, problem.t_final)
