"""Snapshot ensembles with and without time difference quotients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem1d import Mesh1D

NO_DQ = "nodq"
DQ = "dq"


@dataclass
class SnapshotEnsemble:
    """Snapshot fields as rows: the states, followed by their DQs when ``kind == DQ``."""

    fields: np.ndarray
    kind: str
    dt: float
    n_states: int
    stride: int
    mesh: Mesh1D
    problem: str = ""

    @property
    def M(self) -> int:
        return self.fields.shape[0]

    @property
    def states(self) -> np.ndarray:
        return self.fields[: self.n_states]

    @property
    def quotients(self) -> np.ndarray:
        return self.fields[self.n_states :]


def parse_kind(kind) -> str:
    if isinstance(kind, bool):
        return DQ if kind else NO_DQ
    k = str(kind).lower().replace("_", "").replace("-", "")
    if k not in (NO_DQ, DQ):
        raise ValueError(f"unknown ensemble kind {kind!r}")
    return k


def difference_quotients(fields, dt: float) -> np.ndarray:
    """Backward quotients (u_n - u_{n-1}) / dt for n = 1..N."""
    fields = np.asarray(fields, dtype=float)
    if fields.ndim != 2 or fields.shape[0] < 2:
        raise ValueError("difference quotients need at least two fields")
    return np.diff(fields, axis=0) / dt


def build_ensemble(traj, kind=NO_DQ, stride: int = 1) -> SnapshotEnsemble:
    kind = parse_kind(kind)
    if stride < 1 or int(stride) != stride:
        raise ValueError(f"stride must be a positive integer, got {stride}")
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    states = traj.fields[::stride]
    dt = traj.dt * stride
    if kind == DQ:
        if states.shape[0] < 2:
            raise ValueError("strided trajectory has fewer than two states")
        fields = np.vstack([states, difference_quotients(states, dt)])
    else:
        fields = np.array(states)
    return SnapshotEnsemble(fields, kind, dt, states.shape[0], int(stride), traj.mesh, traj.problem)
