"""Command line: ``relaxpt run | sweep | export | oracle``.

Configuration comes from flags or ``--config file.json``; flags given on the
command line override the file. Exact parameter tokens such as
``--g sqrt0.3`` are kept as text and evaluated at the working precision.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import oracle
from .core import Status
from .experiment import ConfigError, ExperimentConfig, run_experiment, run_sweep, write_outputs
from .mmio import write_operator, write_pencil
from .models.spec import MODELS, model_parameters
from .models.zeeman import zeeman_energy
from .trace import fmt17

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_CONFIG = 0, 1, 2

_MODEL_FLAGS = {
    # flag dest -> ModelSpec parameter
    "s": "s", "g": "g", "N": "N", "B": "B", "L": "L", "h": "h", "seed": "seed",
    "periodic": "periodic", "sz_sector": "sz_sector", "path": "path", "path_s": "path_s",
}
_SOLVER_FLAGS = {
    "alpha": "alpha", "tol": "tol", "max_iter": "max_iter", "mode": "mode", "accel": "acceleration",
    "memory": "memory", "precision": "precision", "engine": "engine", "restrict": "restrict_component",
}


def _model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=MODELS)
    g.add_argument("--s", type=int, help="anharmonic exponent: potential g x^(2s)")
    g.add_argument("--g", help="coupling; accepts tokens like sqrt0.3 or 1/3")
    g.add_argument("--N", type=int, help="basis size")
    g.add_argument("--B", help="magnetic field (atomic units)")
    g.add_argument("--L", type=int, help="chain length")
    g.add_argument("--h", help="disorder strength")
    g.add_argument("--seed", type=int)
    g.add_argument("--open", dest="periodic", action="store_const", const=False,
                   help="open chain (default periodic)")
    g.add_argument("--sz-sector", dest="sz_sector", action="store_const", const=True,
                   help="restrict to total S^z = 0")
    g.add_argument("--matrix", dest="path", help="Matrix Market operator (model matrix-market)")
    g.add_argument("--pencil", nargs=2, metavar=("A.mtx", "S.mtx"), help="Matrix Market pencil")
    g.add_argument("--config", help="JSON experiment config; flags override it")


def _solver_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--partition", dest="partitioning", choices=("en", "natural"))
    g.add_argument("--alpha", type=float)
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--mode", choices=("ipt", "rs"))
    g.add_argument("--accel", choices=("none", "anderson"))
    g.add_argument("--memory", type=int, help="Anderson memory M")
    g.add_argument("--precision", choices=("double", "extended"))
    g.add_argument("--engine", choices=("numpy", "compiled"))
    g.add_argument("--restrict", action="store_const", const=True,
                   help="solve on the connected component of the target only")
    g.add_argument("--target", type=int)
    g.add_argument("--reference", help="pencil map reference energy: e0 or a number")
    g.add_argument("--trace-csv", dest="trace_csv")
    g.add_argument("--trace-json", dest="trace_json")
    g.add_argument("--trace-keep", dest="trace_keep", type=int, help="keep every n-th trace row")
    g.add_argument("--allow-partial", action="store_true",
                   help="exit 0 even without convergence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaxpt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one problem and write its trace")
    _model_args(run)
    _solver_args(run)

    sweep = sub.add_parser("sweep", help="solve over a parameter grid")
    _model_args(sweep)
    _solver_args(sweep)
    sweep.add_argument("--param", action="append", default=[], metavar="NAME=V1,V2,...",
                       help="grid over one config field (repeatable)")
    sweep.add_argument("--out-dir", default="sweep_out")
    sweep.add_argument("--summary", help="summary CSV path (default OUT_DIR/summary.csv)")

    export = sub.add_parser("export", help="write a model as Matrix Market file(s)")
    _model_args(export)
    export.add_argument("--out", required=True, help="output file (the A matrix for pencils)")
    export.add_argument("--out-s", help="S matrix output for pencils (default <out>_S.mtx)")

    orc = sub.add_parser("oracle", help="dense reference ground energy")
    _model_args(orc)
    orc.add_argument("--target", type=int, help="unused; accepted for symmetry with run")
    return parser


def _load_config(args) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    model = dict(base.get("model", {}))
    params = dict(model.get("params", {}))
    if args.model is not None:
        if model.get("model") not in (None, args.model):
            params = {}
        model["model"] = args.model
    if getattr(args, "pencil", None):
        model["model"] = "matrix-market"
        params["path"], params["path_s"] = args.pencil
    for dest, name in _MODEL_FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            params[name] = val
    if "model" not in model:
        raise ConfigError(["no model given (use --model or --config)"])
    model["params"] = params
    base["model"] = model
    solver = dict(base.get("solver", {}))
    for dest, name in _SOLVER_FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            solver[name] = val
    base["solver"] = solver
    for key in ("partitioning", "target", "reference", "trace_csv", "trace_json", "trace_keep"):
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    for spec in getattr(args, "param", []) or []:
        name, _, values = spec.partition("=")
        if not values:
            raise ConfigError([f"bad --param {spec!r}; expected NAME=V1,V2,..."])
        base.setdefault("sweep", [])
        base["sweep"] = [e for e in base["sweep"] if e[0] != name] + [[name, _coerce_list(values)]]
    for name, values in base.get("sweep", []):
        # a swept model parameter need not be given on its own
        if name in model_parameters(model["model"]) and name not in params and values:
            params[name] = values[0]
    try:
        return ExperimentConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError([str(exc)]) from exc


def _coerce_list(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            out.append(int(tok))
        except ValueError:
            out.append(tok)
    return out


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    res = run_experiment(cfg)
    write_outputs(cfg, res)
    summary = res.summary()
    print(" ".join(f"{k}={v}" for k, v in summary.items()))
    if res.status is not Status.CONVERGED and not args.allow_partial:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    rows = run_sweep(cfg, args.out_dir, args.summary)
    for row in rows:
        print(",".join(str(x) for x in row))
    failed = [r for r in rows if r[5] != Status.CONVERGED.value]
    if failed and not args.allow_partial:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_export(args) -> int:
    cfg = _load_config(args)
    built = cfg.model.build()
    comment = cfg.model.to_json()
    if cfg.model.is_pencil:
        out_s = args.out_s or str(Path(args.out).with_suffix("")) + "_S.mtx"
        write_pencil(args.out, out_s, built, comment)
        print(f"wrote {args.out} {out_s}")
    else:
        H = built[0] if cfg.model.model == "heisenberg" else built
        write_operator(args.out, H, comment)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cfg = _load_config(args)
    built = cfg.model.build()
    if cfg.model.is_pencil:
        e = oracle.dense_eig_generalized(built).ground_energy
        line = f"E={fmt17(e)}"
        if cfg.model.model == "zeeman":
            line += f" E_field={fmt17(zeeman_energy(e))}"
    else:
        H = built[0] if cfg.model.model == "heisenberg" else built
        e = oracle.ground_energy(H)
        line = f"E={fmt17(e)}"
        if cfg.model.model == "herbst-simon":
            line += f" (E-1)/2={fmt17((e - 1) / 2)}"
    print(line)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "export": _cmd_export, "oracle": _cmd_oracle}
    try:
        return handler[args.command](args)
    except (ConfigError, ValueError, IndexError, ArithmeticError, OSError) as exc:
        errors = exc.errors if isinstance(exc, ConfigError) else [str(exc)]
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
