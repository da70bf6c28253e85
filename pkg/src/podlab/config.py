"""Experiment configuration: flat ``key=value`` files with ``#`` comments."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError

DEFAULT_R_LISTS = {
    ("heat", False): [3, 5, 7, 10, 13],
    ("heat", True): [19, 23, 28, 33, 37],
    ("burgers", False): [3, 5, 7, 9, 11],
    ("burgers", True): [18, 21, 24, 28, 31],
}
DEFAULT_DT = {"heat": 1e-3, "burgers": 1e-4}
DEFAULT_DT_LIST = [2e-1, 1e-1, 5e-2, 2.5e-2, 1e-2]
DEFAULT_OUTPUT = "podlab-out"


@dataclass
class ExperimentConfig:
    problem: str = "heat"
    nu: float = 1e-2
    c: float = 100.0
    n_cells: int = 1024
    dt: Optional[float] = None
    t_final: float = 1.0
    snapshot_stride: int = 1
    dq: bool = False
    r_list: Optional[list] = None
    eig_tol: float = 1e-13
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    output_dir: Optional[str] = None
    reference: Optional[str] = None
    dt_list: list = field(default_factory=lambda: list(DEFAULT_DT_LIST))

    def resolved_dt(self) -> float:
        return self.dt if self.dt is not None else DEFAULT_DT[self.problem]

    def resolved_r_list(self) -> list:
        return self.r_list if self.r_list is not None else DEFAULT_R_LISTS[(self.problem, self.dq)]

    def resolved_output(self) -> Path:
        return Path(self.output_dir or os.environ.get("PODLAB_OUTPUT") or DEFAULT_OUTPUT)

    def echo(self) -> dict:
        d = asdict(self)
        d["dt"] = self.resolved_dt()
        d["r_list"] = self.resolved_r_list()
        return d


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text):
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int_list(text):
    return [int(p) for p in text.replace(",", " ").split()]


def _parse_float_list(text):
    return [float(p) for p in text.replace(",", " ").split()]


_PARSERS = {
    "problem": lambda s: s.strip().lower(),
    "nu": float,
    "c": float,
    "n_cells": int,
    "dt": float,
    "t_final": float,
    "snapshot_stride": int,
    "stride": int,
    "dq": _parse_bool,
    "r_list": _parse_int_list,
    "eig_tol": float,
    "newton_tol": float,
    "newton_max_iter": int,
    "output_dir": str.strip,
    "reference": lambda s: s.strip().lower(),
    "dt_list": _parse_float_list,
}


def parse_pairs(lines, source="config"):
    """Parse ``key=value`` lines into raw strings; returns (pairs, diagnostics)."""
    pairs, problems = {}, {}
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, eq, value = body.partition("=")
        key = key.strip()
        if not eq or not key:
            problems[f"{source}:{lineno}"] = f"expected key=value, got {line.strip()!r}"
            continue
        pairs[key] = value.strip()
    return pairs, problems


def build_config(pairs: dict, problems: dict | None = None) -> ExperimentConfig:
    problems = dict(problems or {})
    values = {}
    for key, raw in pairs.items():
        if key not in _PARSERS:
            problems[key] = "unknown key"
            continue
        try:
            values["snapshot_stride" if key == "stride" else key] = _PARSERS[key](raw)
        except ValueError as exc:
            problems[key] = str(exc)
    cfg = ExperimentConfig(**values)
    problems.update(validate(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def validate(cfg: ExperimentConfig) -> dict:
    bad = {}
    if cfg.problem not in ("heat", "burgers"):
        bad["problem"] = f"must be heat or burgers, got {cfg.problem!r}"
    for name in ("nu", "c", "eig_tol", "newton_tol"):
        if not getattr(cfg, name) > 0:
            bad[name] = "must be positive"
    if cfg.dt is not None and not cfg.dt > 0:
        bad["dt"] = "must be positive"
    if not cfg.t_final >= 0:
        bad["t_final"] = "must be nonnegative"
    for name in ("n_cells", "snapshot_stride", "newton_max_iter"):
        if not getattr(cfg, name) >= 1:
            bad[name] = "must be a positive integer"
    if cfg.n_cells < 2:
        bad["n_cells"] = "must be at least 2"
    if cfg.r_list is not None:
        if not cfg.r_list:
            bad["r_list"] = "must be nonempty"
        elif any(r < 1 for r in cfg.r_list) or sorted(set(cfg.r_list)) != cfg.r_list:
            bad["r_list"] = "must be strictly increasing positive integers"
    if not cfg.dt_list or any(not d > 0 for d in cfg.dt_list):
        bad["dt_list"] = "must be a nonempty list of positive steps"
    if cfg.reference not in (None, "exact", "exact-interpolated", "fom"):
        bad["reference"] = "must be exact, exact-interpolated or fom"
    if cfg.reference in ("exact", "exact-interpolated") and cfg.problem == "burgers":
        bad["reference"] = "the Burgers problem has no exact solution"
    return bad


def load_config(path=None, overrides=()) -> ExperimentConfig:
    """Read ``path`` (optional) and apply ``--set key=value`` overrides on top."""
    pairs, problems = {}, {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError({"config": f"cannot read {path}: {exc.strerror}"}) from exc
        pairs, problems = parse_pairs(text.splitlines(), str(path))
    over, over_problems = parse_pairs(overrides, "--set")
    pairs.update(over)
    problems.update(over_problems)
    return build_config(pairs, problems)


def config_keys():
    return [f.name for f in fields(ExperimentConfig)]
