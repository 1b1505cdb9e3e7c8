"""Experiment configuration and runners behind the command line."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import core
from . import precision as prec
from .accel import aitken
from .core import SolverConfig, Status
from .models.heisenberg import ipr, lowest_diagonal_target
from .models.oscillators import harmonic_diagonal
from .models.spec import ModelSpec, model_parameters, parse_number, with_param
from .pencil import relax_iterate_generalized
from .trace import ConvergenceTrace, fmt17

PARTITIONINGS = ("en", "natural")
SUMMARY_HEADER = ("param", "value", "E_final", "residual", "k", "status")
_SOLVER_FIELDS = tuple(f.name for f in fields(SolverConfig))


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class ExperimentConfig:
    model: ModelSpec
    partitioning: str = "en"
    solver: SolverConfig = field(default_factory=SolverConfig)
    target: Optional[int] = None
    reference: Optional[str] = None  # pencils only: "e0" or a number
    trace_csv: Optional[str] = None
    trace_json: Optional[str] = None
    trace_keep: Optional[int] = None
    sweep: list = field(default_factory=list)  # [(name, [values...])]

    def validate(self) -> None:
        errors = []
        if self.partitioning not in PARTITIONINGS:
            errors.append(f"partitioning must be one of {PARTITIONINGS}, got {self.partitioning!r}")
        if self.partitioning == "natural" and self.model.model not in ("anharmonic", "herbst-simon"):
            errors.append("natural partitioning is defined for the oscillator models only")
        if self.model.is_pencil and self.partitioning != "en":
            errors.append("pencils use the generalized EN-type map only")
        if self.reference is not None and not self.model.is_pencil:
            errors.append("reference applies to pencil models only")
        if self.trace_keep is not None and self.trace_keep < 1:
            errors.append("trace_keep must be >= 1")
        allowed = set(model_parameters(self.model.model)) | set(_SOLVER_FIELDS) | {"partitioning", "target"}
        for entry in self.sweep:
            name, values = entry
            if name not in allowed:
                errors.append(f"sweep parameter {name!r} is not a config field")
            if not values:
                errors.append(f"sweep parameter {name!r} has no values")
        if errors:
            raise ConfigError(errors)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        d["solver"] = self.solver.to_dict()
        d["sweep"] = [[n, list(v)] for n, v in self.sweep]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError([f"unknown config keys: {sorted(unknown)}"])
        d["model"] = ModelSpec.from_dict(d["model"])
        d["solver"] = SolverConfig.from_dict(d.get("solver", {}))
        d["sweep"] = [(n, list(v)) for n, v in d.get("sweep", [])]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class RunResult:
    energy: float
    residual: float
    k: int
    status: Status
    derived: dict
    trace: ConvergenceTrace
    psi: np.ndarray

    def summary(self) -> dict:
        out = {"E": fmt17(self.energy), "residual": fmt17(self.residual), "k": self.k,
               "status": self.status.value}
        out.update({k: fmt17(v) if not isinstance(v, (str, int)) else v for k, v in self.derived.items()})
        return out


def _reference(cfg: ExperimentConfig):
    if cfg.reference is None:
        return 0.0 if cfg.model.model == "zeeman" else None
    if str(cfg.reference).lower() == "e0":
        return None
    return parse_number(cfg.reference)


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Build the model, solve, and collect the trace plus model-specific derived values."""
    cfg.validate()
    scfg = cfg.solver
    trace = ConvergenceTrace(cfg.trace_keep)
    derived: dict = {}
    built = cfg.model.build(scfg.precision)
    if cfg.model.is_pencil:
        target = 0 if cfg.target is None else cfg.target
        state, status = relax_iterate_generalized(built, scfg, target, trace, reference=_reference(cfg))
        if cfg.model.model == "zeeman":
            derived["E_field"] = state.energy - 0.5
    else:
        H = built[0] if cfg.model.model == "heisenberg" else built
        if cfg.target is not None:
            target = cfg.target
        elif cfg.model.model == "heisenberg":
            target = lowest_diagonal_target(H)
        else:
            target = 0
        if cfg.partitioning == "natural":
            f = harmonic_diagonal(H.dim, scfg.precision)
            p = core.Partitioning(f, H.add_diagonal(-f).as_precision(scfg.precision), 1, target)
        else:
            p = core.epstein_nesbet(H, target)
        state, status = core.relax_iterate(p, scfg, trace)
        if cfg.model.model == "herbst-simon":
            derived["(E-1)/2"] = (state.energy - 1) / 2
        if cfg.model.model == "heisenberg":
            derived["ipr"] = ipr(prec.to_double(state.psi))
    if len(trace.energies) >= 3:
        # Aitken on the last three recorded energies
        es = [float(e) for e in trace.energies[-3:]]
        if all(np.isfinite(es)):
            val = aitken(es).values[-1]
            derived["aitken"] = val - 0.5 if cfg.model.model == "zeeman" else val
    return RunResult(state.energy, state.residual, state.k, status, derived, trace, state.psi)


def write_outputs(cfg: ExperimentConfig, result: RunResult, csv_path=None, json_path=None) -> None:
    csv_path = csv_path or cfg.trace_csv
    json_path = json_path or cfg.trace_json
    if csv_path:
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        result.trace.write_csv(csv_path)
    if json_path:
        Path(json_path).parent.mkdir(parents=True, exist_ok=True)
        result.trace.write_json(json_path, cfg.to_dict(), result.summary())


def _apply(cfg: ExperimentConfig, name: str, value) -> ExperimentConfig:
    d = cfg.to_dict()
    d["sweep"] = []
    out = ExperimentConfig.from_dict(d)
    if name in _SOLVER_FIELDS:
        sd = out.solver.to_dict()
        sd[name] = parse_number(value) if name in ("alpha", "tol", "divergence_norm") else value
        out.solver = SolverConfig.from_dict(sd)
    elif name in ("partitioning", "target"):
        setattr(out, name, value)
    else:
        out.model = with_param(out.model, name, value)
    return out


def _sweep_point(args):
    cfg, name, value, i, out_dir = args
    try:
        point = _apply(cfg, name, value)
        res = run_experiment(point)
        stem = Path(out_dir) / f"trace_{i:03d}_{name}={value}"
        write_outputs(point, res, f"{stem}.csv", f"{stem}.json")
        return (name, value, fmt17(res.energy), fmt17(res.residual), res.k, res.status.value)
    except Exception as exc:  # recorded, the sweep continues
        return (name, value, "nan", "nan", 0, f"Error: {exc}")


def sweep_points(cfg: ExperimentConfig) -> list[tuple[str, object]]:
    return [(name, v) for name, values in cfg.sweep for v in values]


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("RELAXPT_THREADS", "1")))
    except ValueError:
        return 1


def run_sweep(cfg: ExperimentConfig, out_dir, summary_path=None) -> list[tuple]:
    """One trace per grid point plus a summary CSV, rows in grid order."""
    cfg.validate()
    if not cfg.sweep:
        raise ConfigError(["sweep list is empty"])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, n, v, i, str(out_dir)) for i, (n, v) in enumerate(sweep_points(cfg))]
    workers = min(thread_cap(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    summary_path = Path(summary_path) if summary_path else out_dir / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)
    return rows
