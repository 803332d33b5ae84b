"""Command-line front end: ``varswap {price,mc,sweep,audit,crossover}``.

Settings are resolved in three layers, later ones winning: built-in
defaults, the ``--config`` file (TOML or JSON), then explicit flags.
``--threads`` falls back to ``VARSWAP_THREADS`` and never changes output.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 unsupported
model, 4 audit failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence, TextIO

from . import analysis
from .mc import SimConfig, resolve_workers, simulate
from .models import (
    DomainError,
    SwapContract,
    UnsupportedModel,
    ValidationError,
    ensure_valid,
    make_model,
    read_config,
    validate,
)
from .strikes import UNDEFINED, StrikeReport, closed_forms, critical_rho, strike_report

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_UNSUPPORTED, EXIT_AUDIT = 0, 1, 2, 3, 4

COMMANDS = ("price", "mc", "sweep", "audit", "crossover")


@dataclass
class RunConfig:
    command: str
    model: dict[str, Any] = field(default_factory=dict)  # {"type": ..., "params": {...}}
    contract: dict[str, Any] = field(default_factory=dict)
    sim: dict[str, Any] = field(default_factory=dict)
    n_list: list[int] | None = None
    draws: int = 1000
    families: list[str] = field(default_factory=lambda: ["heston", "hull_white"])
    c_scale: float = 1.0
    fmt: str = "csv"
    out: str | None = None


def _parse_param(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric value in {text!r}") from None


def _parse_n_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --n-list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON file; flags override its values")
    common.add_argument("--model", help="heston, hull_white, three_halves or const_vol")
    common.add_argument("--param", action="append", type=_parse_param, default=[],
                        metavar="KEY=VALUE", help="model parameter, repeatable (e.g. kappa=2)")
    common.add_argument("--n", type=int)
    common.add_argument("--T", type=float)
    common.add_argument("--r", type=float)
    common.add_argument("--rho", type=float)
    common.add_argument("--paths", type=int)
    common.add_argument("--substeps", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker cap (default $VARSWAP_THREADS or 1)")
    common.add_argument("--format", choices=("csv", "json"), dest="fmt")
    common.add_argument("--out", help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="varswap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("price", parents=[common], help="closed-form strike report")
    sub.add_parser("mc", parents=[common], help="Monte Carlo estimates")
    sp = sub.add_parser("sweep", parents=[common], help="Kd - Kc and C over a list of n")
    sp.add_argument("--n-list", type=_parse_n_list)
    ap = sub.add_parser("audit", parents=[common], help="inequality ledger over random draws")
    ap.add_argument("--draws", type=int)
    ap.add_argument("--family", action="append", choices=("heston", "hull_white"))
    ap.add_argument("--c-scale", type=float, help=argparse.SUPPRESS)  # mutation testing
    cp = sub.add_parser("crossover", parents=[common], help="critical correlation table")
    cp.add_argument("--n-list", type=_parse_n_list)
    return p


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags into a RunConfig."""
    cfg = read_config(args.config) if args.config else {}
    rc = RunConfig(command=args.command)
    rc.model = {"type": cfg.get("model", {}).get("type"),
                "params": dict(cfg.get("model", {}).get("params", {}))}
    rc.contract = dict(cfg.get("contract", {}))
    rc.sim = dict(cfg.get("sim", {}))
    rc.n_list = cfg.get("sweep", {}).get("n_list")
    audit_cfg = cfg.get("audit", {})
    rc.draws = int(audit_cfg.get("draws", rc.draws))
    rc.families = list(audit_cfg.get("families", rc.families))
    out_cfg = cfg.get("output", {})
    rc.fmt = out_cfg.get("format", rc.fmt)
    rc.out = out_cfg.get("path")

    if args.model:
        if rc.model["type"] and rc.model["type"] != args.model:
            rc.model["params"] = {}
        rc.model["type"] = args.model
    rc.model["params"].update(dict(args.param))
    for key in ("n", "T", "r", "rho"):
        if getattr(args, key) is not None:
            rc.contract[key] = getattr(args, key)
    for key in ("paths", "substeps", "seed", "threads"):
        if getattr(args, key) is not None:
            rc.sim[key] = getattr(args, key)
    if getattr(args, "n_list", None):
        rc.n_list = args.n_list
    if getattr(args, "draws", None) is not None:
        rc.draws = args.draws
    if getattr(args, "family", None):
        rc.families = args.family
    if getattr(args, "c_scale", None) is not None:
        rc.c_scale = args.c_scale
    if args.fmt:
        rc.fmt = args.fmt
    if args.out:
        rc.out = args.out
    if rc.fmt not in ("csv", "json"):
        raise ValidationError(f"unknown format {rc.fmt!r}")
    return rc


def _model(rc: RunConfig):
    if not rc.model.get("type"):
        raise ValidationError("no model given (--model or [model] type in --config)")
    return make_model(rc.model["type"], **rc.model["params"])


def _contract(rc: RunConfig, need_n: bool = True) -> SwapContract:
    c = dict(rc.contract)
    if "T" not in c:
        raise ValidationError("contract needs T")
    if "n" not in c and need_n:
        raise ValidationError("contract needs n")
    n = c.get("n", 1)
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    return SwapContract(T=float(c["T"]), n=n, r=float(c.get("r", 0.0)),
                        rho=float(c.get("rho", 0.0)))


def _sim(rc: RunConfig) -> SimConfig:
    s = rc.sim
    return SimConfig(paths=int(s.get("paths", 200_000)), substeps=int(s.get("substeps", 64)),
                     seed=int(s.get("seed", 0)),
                     workers=resolve_workers(int(s["threads"]) if s.get("threads") else None))


# --- serialisation ------------------------------------------------------------

def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def report_json(report: StrikeReport) -> str:
    return dump_json(report.to_dict())


def report_from_json(text: str) -> StrikeReport:
    return StrikeReport.from_dict(json.loads(text))


def _csv(header, rows) -> str:
    return analysis._write(header, rows, None)


def _report_csv(rep: StrikeReport) -> str:
    d = rep.to_dict()
    terms = d.pop("decomposition")
    header = list(d) + list(terms)
    return _csv(header, [[rep.c_star if k == "c_star" else d[k] for k in d] + list(terms.values())])


def _jsonable(x):
    if x is UNDEFINED:
        return "undefined"
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


# --- commands -------------------------------------------------------------------

def cmd_price(rc: RunConfig) -> tuple[str, int]:
    model, contract = _model(rc), _contract(rc)
    ensure_valid(model, contract)
    try:
        closed_forms(model)
    except UnsupportedModel as exc:
        raise UnsupportedModel(f"{exc}; run `varswap mc` instead") from None
    rep = strike_report(model, contract)
    return (report_json(rep) if rc.fmt == "json" else _report_csv(rep)), EXIT_OK


def cmd_mc(rc: RunConfig) -> tuple[str, int]:
    model, contract, sim = _model(rc), _contract(rc), _sim(rc)
    run = simulate(model, contract, sim)
    est = {"Kd": run.Kd, "Kc": run.Kc, "diff": run.diff, "C": run.C, "gamma": run.gamma}
    try:
        est["gamma_transform"] = run.gamma_transform
    except UnsupportedModel:
        pass
    lem = run.third_moment_identity()
    est.update(identity_lhs=lem.lhs, identity_rhs=lem.rhs, identity_diff=lem.diff)
    if rc.fmt == "json":
        body = {"model": model.variant, "params": model.params(), "T": contract.T,
                "n": contract.n, "r": contract.r, "rho": contract.rho,
                "paths": sim.paths, "substeps": sim.substeps, "seed": sim.seed,
                "aborted": run.aborted,
                "estimates": {k: v.to_dict() for k, v in est.items()}}
        return dump_json(body), EXIT_OK
    rows = [(k, v.value, v.stderr, v.paths) for k, v in est.items()]
    return _csv(("quantity", "value", "stderr", "paths"), rows), EXIT_OK


def cmd_sweep(rc: RunConfig) -> tuple[str, int]:
    model, contract = _model(rc), _contract(rc, need_n=False)
    n_list = rc.n_list or [4, 16, 64, 256]
    res = analysis.convergence_sweep(model, contract, n_list, _sim(rc))
    if rc.fmt == "json":
        rows = [{k: _jsonable(getattr(r, k)) for k in analysis.SWEEP_HEADER} for r in res.rows]
        return dump_json({"T": contract.T, "r": contract.r, "rho": contract.rho, "rows": rows}), EXIT_OK
    return res.to_csv(), EXIT_OK


def cmd_audit(rc: RunConfig) -> tuple[str, int]:
    if rc.draws < 1:
        raise ValidationError("--draws must be >= 1")
    seed = int(rc.sim.get("seed", 0))
    ledger = analysis.property_audit(rc.draws, seed, rc.families, c_scale=rc.c_scale)
    code = EXIT_OK if ledger.all_passed else EXIT_AUDIT
    if rc.fmt == "json":
        body = {"draws": len(ledger.draws), "draws_passed": ledger.draws_passed(),
                "failures": [dict(zip(analysis.LEDGER_HEADER, r.as_tuple())) for r in ledger.failures],
                "rows": len(ledger.rows)}
        return dump_json(body), code
    return ledger.to_csv(), code


def cmd_crossover(rc: RunConfig) -> tuple[str, int]:
    model, contract = _model(rc), _contract(rc, need_n=False)
    kc_fn, c_fn, g_fn = closed_forms(model)
    if rc.n_list:
        n_list = rc.n_list
    elif "n" in rc.contract:
        n_list = [int(contract.n)]
    else:
        n_list = [1, 4, 12, 52, 252]
    header = ("model", "n", "h", "Kc", "C", "gamma", "c_star")
    rows = []
    for n in n_list:
        c = contract.with_(n=int(n))
        ensure_valid(model, c)
        Kc, C, g = kc_fn(model, c.T), c_fn(model, c), g_fn(model, c)
        rows.append((model.variant, c.n, c.h, Kc, C, g, critical_rho(Kc, C, g, c.r, c.h)))
    if rc.fmt == "json":
        return dump_json({"r": contract.r, "rows": [dict(zip(header, map(_jsonable, r))) for r in rows]}), EXIT_OK
    return _csv(header, rows), EXIT_OK


_DISPATCH = {"price": cmd_price, "mc": cmd_mc, "sweep": cmd_sweep, "audit": cmd_audit,
             "crossover": cmd_crossover}


def _emit(text: str, path: str | None, stdout: TextIO) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None,
        stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        try:
            rc = resolve(args)
        except (OSError, ValueError, TypeError, KeyError, AttributeError) as exc:
            raise ValidationError(f"bad configuration: {exc}") from exc
        if rc.model.get("type"):
            for w in validate(_model(rc)).warnings:
                print(f"warning: {w}", file=stderr)
        text, code = _DISPATCH[rc.command](rc)
        _emit(text, rc.out, stdout)
        return code
    except UnsupportedModel as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_UNSUPPORTED
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort exit code for CI
        print(f"internal error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_INTERNAL


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
