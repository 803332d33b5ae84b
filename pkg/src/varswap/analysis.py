"""Convergence sweeps, inequality audits and sign-law tests.

Everything here is orchestration: closed forms come from
:mod:`varswap.strikes`, oracles from :mod:`varswap.oracles` and Monte Carlo
estimates from :mod:`varswap.mc`.  Results are plain row lists that can be
written as CSV with :func:`write_sweep_csv` / :func:`write_ledger_csv`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .mc import McEstimate, SimConfig, simulate
from .models import ConstVol, Heston, HullWhite, ModelSpec, SwapContract, ThreeHalves, ensure_valid
from .oracles import kernel_for, quad_m4_bound
from .strikes import UNDEFINED, closed_forms, critical_rho, kd_excess, strike_report

REL_TOL = 1e-10
R_GRID = tuple(round(0.01 * k, 2) for k in range(21))
RHO_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)
PROBE = 1e-6

SWEEP_HEADER = ("model", "n", "h", "Kc", "Kd", "diff", "C", "gamma", "c_star", "source", "stderr")
LEDGER_HEADER = ("draw_id", "seed", "check", "lhs", "rhs", "margin", "pass")


def fmt(x) -> str:
    """17 significant digits for floats; literal tokens for the rest."""
    if x is UNDEFINED:
        return "undefined"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write(header, rows, out: TextIO | None) -> str:
    buf = io.StringIO() if out is None else out
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue() if out is None else ""


# --- random parameter draws ------------------------------------------------------

FAMILIES = ("heston", "hull_white", "const_vol")


def _log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def draw_seed(seed: int, family: str, draw_id: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(FAMILIES.index(family), draw_id))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def draw_case(family: str, seed: int) -> tuple[ModelSpec, SwapContract]:
    """One random (model, contract) pair; a pure function of (family, seed)."""
    rng = np.random.default_rng(seed)
    if family == "heston":
        model = Heston(kappa=_log_uniform(rng, 0.1, 10), nu=_log_uniform(rng, 0.1, 10),
                       theta=_log_uniform(rng, 0.0025, 0.25), V0=_log_uniform(rng, 0.0025, 0.25))
    elif family == "hull_white":
        model = HullWhite(mu=float(rng.uniform(-0.5, 0.5)), sigma=_log_uniform(rng, 0.05, 1.0),
                          V0=_log_uniform(rng, 0.0025, 0.25))
    elif family == "const_vol":
        model = ConstVol(V0=_log_uniform(rng, 0.0025, 0.25))
    else:
        raise ValueError(f"unknown family {family!r}")
    contract = SwapContract(T=float(rng.uniform(0.1, 5.0)), n=int(rng.integers(1, 513)),
                            r=float(rng.uniform(0.0, 0.2)), rho=float(rng.uniform(-1.0, 1.0)))
    return model, contract


# --- ledgers ----------------------------------------------------------------------

@dataclass(frozen=True)
class LedgerRow:
    draw_id: str
    seed: int
    check: str
    lhs: float
    rhs: float
    margin: float
    passed: bool

    def as_tuple(self):
        return (self.draw_id, self.seed, self.check, self.lhs, self.rhs, self.margin, self.passed)


@dataclass
class PropertyLedger:
    rows: list[LedgerRow] = field(default_factory=list)
    params: dict[str, dict] = field(default_factory=dict)  # draw_id -> parameter vector
    notes: dict[str, int] = field(default_factory=dict)

    @property
    def draws(self) -> list[str]:
        return list(dict.fromkeys(r.draw_id for r in self.rows))

    @property
    def failures(self) -> list[LedgerRow]:
        return [r for r in self.rows if not r.passed]

    @property
    def all_passed(self) -> bool:
        return not self.failures

    def draws_passed(self) -> int:
        bad = {r.draw_id for r in self.failures}
        return sum(1 for d in self.draws if d not in bad)

    def checks(self) -> set[str]:
        return {r.check for r in self.rows}

    def extend(self, other: "PropertyLedger") -> "PropertyLedger":
        self.rows.extend(other.rows)
        self.params.update(other.params)
        for k, v in other.notes.items():
            self.notes[k] = self.notes.get(k, 0) + v
        return self

    def to_csv(self, out: TextIO | None = None) -> str:
        return _write(LEDGER_HEADER, (r.as_tuple() for r in self.rows), out)


def _leq(draw_id, seed, check, lhs, rhs, tol=REL_TOL) -> LedgerRow:
    """Row for the claim lhs <= rhs up to a relative tolerance."""
    lhs, rhs = float(lhs), float(rhs)
    slack = tol * max(abs(lhs), abs(rhs))
    return LedgerRow(draw_id, seed, check, lhs, rhs, rhs - lhs, bool(lhs <= rhs + slack))


def _params_of(model: ModelSpec, contract: SwapContract) -> dict:
    return {"model": model.variant, **model.params(), "T": contract.T, "n": contract.n,
            "r": contract.r, "rho": contract.rho}


def audit_case(model: ModelSpec, contract: SwapContract, draw_id: str, seed: int, *,
               c_scale: float = 1.0, tol: float = REL_TOL) -> list[LedgerRow]:
    """Evaluate the seven analytic inequalities for one (model, contract)."""
    kc_fn, c_fn, g_fn = closed_forms(model)
    T, n, h = contract.T, contract.n, contract.h

    def C_at(m):
        return c_scale * c_fn(model, contract.with_(n=m))

    Kc = kc_fn(model, T)
    C = C_at(n)
    gamma = g_fn(model, contract)
    rows = [
        _leq(draw_id, seed, "in1", C, C_at(1), tol),
        _leq(draw_id, seed, "ineqm", C, h * quad_m4_bound(kernel_for(model), T) / T, tol),
        _leq(draw_id, seed, "KcC", Kc * Kc * h, C, tol),
        _leq(draw_id, seed, "C_ineq_lower", 0.5 * C_at(2 * n), C, tol),
    ]
    if n % 2 == 0:
        rows.append(_leq(draw_id, seed, "C_ineq_upper", C, C_at(n // 2), tol))
    rows.append(_leq(draw_id, seed, "e18", abs(gamma / 3.0), math.sqrt(Kc * C), tol))

    rho = contract.rho
    worst = None
    for r in R_GRID:
        kd = Kc + kd_excess(Kc, C, gamma, r, rho, h)
        bound = Kc - Kc * Kc * h / 4.0 + C / 4.0 - rho * gamma / 3.0
        row = _leq(draw_id, seed, "ineq", bound, kd, tol)
        if worst is None or row.margin < worst.margin:
            worst = row
    rows.append(worst)

    worst = None
    for r in R_GRID:
        kd0 = Kc + kd_excess(Kc, C, gamma, r, 0.0, h)
        row = _leq(draw_id, seed, "rho_is_0", Kc, kd0, tol)
        if worst is None or row.margin < worst.margin:
            worst = row
    rows.append(worst)
    return rows


def property_audit(draw_count: int, seed: int, families: Sequence[str] = ("heston", "hull_white"),
                   *, c_scale: float = 1.0, tol: float = REL_TOL) -> PropertyLedger:
    """Inequality ledger over ``draw_count`` random draws per family."""
    if draw_count < 1:
        raise ValueError("draw_count must be >= 1")
    ledger = PropertyLedger()
    for family in families:
        for i in range(draw_count):
            s = draw_seed(seed, family, i)
            model, contract = draw_case(family, s)
            did = f"{family}:{i}"
            ledger.params[did] = _params_of(model, contract)
            ledger.rows.extend(audit_case(model, contract, did, s, c_scale=c_scale, tol=tol))
    return ledger


def sign_law_case(Kc, C, gamma, r, h, draw_id, seed) -> tuple[list[LedgerRow], int]:
    """Sign of Kd - Kc against the critical correlation for one set of components.

    Correlations outside [-1, 1] are probed algebraically; only the linear
    structure of Kd in rho is being tested.
    """
    rows = []
    below = 0
    cstar = critical_rho(Kc, C, gamma, r, h)

    def row(check, rho, ok, excess):
        rows.append(LedgerRow(draw_id, seed, check, rho, fmt(cstar) if cstar is UNDEFINED else cstar,
                              excess, bool(ok)))

    if cstar is UNDEFINED:
        for rho in RHO_GRID:
            ex = kd_excess(Kc, C, gamma, r, rho, h)
            below += ex < 0
            row(f"gamma0_rho={rho:g}", rho, ex >= 0, ex)
        return rows, below

    for rho in RHO_GRID:
        if rho == cstar:
            continue
        ex = kd_excess(Kc, C, gamma, r, rho, h)
        below += ex < 0
        expect_above = rho < cstar if gamma > 0 else rho > cstar
        ok = (ex > 0) == expect_above
        # corollaries: Kd >= Kc for rho <= 0 when gamma > 0, rho >= 0 when gamma < 0
        if (gamma > 0 and rho <= 0) or (gamma < 0 and rho >= 0):
            ok = ok and ex >= 0
        row(f"sign_rho={rho:g}", rho, ok, ex)
    lo, hi = cstar - PROBE, cstar + PROBE
    ex_lo = kd_excess(Kc, C, gamma, r, lo, h)
    ex_hi = kd_excess(Kc, C, gamma, r, hi, h)
    if gamma > 0:
        row("probe_below_cstar", lo, ex_lo > 0, ex_lo)
        row("probe_above_cstar", hi, ex_hi < 0, ex_hi)
    else:
        row("probe_below_cstar", lo, ex_lo < 0, ex_lo)
        row("probe_above_cstar", hi, ex_hi > 0, ex_hi)
    row("cstar_sign", cstar, math.copysign(1.0, cstar) == math.copysign(1.0, gamma), cstar)
    return rows, below


def sign_law_test(draw_count: int, seed: int, families: Sequence[str] = ("heston", "hull_white"),
                  *, mirror: bool = True, gamma_zero_draws: int | None = None) -> PropertyLedger:
    """Sign law for ``draw_count`` draws split across ``families``.

    ``mirror`` also runs every draw with gamma negated (the law of the model
    with W2 reflected), covering the gamma < 0 case no shipped model
    produces.  A constant-volatility branch covers gamma = 0.
    """
    ledger = PropertyLedger()
    below = 0
    for i in range(draw_count):
        family = families[i % len(families)]
        s = draw_seed(seed, family, i)
        model, contract = draw_case(family, s)
        kc_fn, c_fn, g_fn = closed_forms(model)
        Kc, C, g = kc_fn(model, contract.T), c_fn(model, contract), g_fn(model, contract)
        if g == 0:
            continue
        did = f"{family}:{i}"
        ledger.params[did] = _params_of(model, contract)
        rows, b = sign_law_case(Kc, C, g, contract.r, contract.h, did, s)
        ledger.rows.extend(rows)
        below += b
        if mirror:
            rows, _ = sign_law_case(Kc, C, -g, contract.r, contract.h, did + ":mirror", s)
            ledger.rows.extend(rows)
    zero = draw_count // 10 if gamma_zero_draws is None else gamma_zero_draws
    for i in range(max(zero, 1)):
        s = draw_seed(seed, "const_vol", i)
        model, contract = draw_case("const_vol", s)
        rep = strike_report(model, contract)
        did = f"const_vol:{i}"
        ledger.params[did] = _params_of(model, contract)
        rows, _ = sign_law_case(rep.Kc, rep.C, rep.gamma, contract.r, contract.h, did, s)
        ledger.rows.extend(rows)
    ledger.notes["kd_below_kc_instances"] = below
    return ledger


# --- convergence sweeps --------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    model: str
    n: int
    h: float
    Kc: float
    Kd: float
    diff: float
    C: float
    gamma: float
    c_star: object
    source: str
    stderr: float = math.nan  # combined sqrt(se_Kd^2 + se_Kc^2) for mc rows
    kd_stderr: float = math.nan
    kc_stderr: float = math.nan
    diff_stderr: float = math.nan  # paired

    def as_tuple(self):
        return tuple(getattr(self, k) for k in SWEEP_HEADER)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    T: float

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self, out: TextIO | None = None) -> str:
        return _write(SWEEP_HEADER, (r.as_tuple() for r in self.rows), out)


def convergence_sweep(model: ModelSpec, contract: SwapContract, n_list: Iterable[int],
                      config: SimConfig | None = None) -> SweepResult:
    """Kd(T/n) - Kc and C(T/n) along ``n_list``; analytic where possible, else MC."""
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValueError("n_list must be non-empty")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly ascending")
    rows = []
    for n in n_list:
        c = contract.with_(n=n)
        ensure_valid(model, c)
        if isinstance(model, ThreeHalves):
            run = simulate(model, c, config or SimConfig())
            kd, kc, cc, g, diff = run.Kd, run.Kc, run.C, run.gamma, run.diff
            rows.append(SweepRow(
                model.variant, n, c.h, kc.value, kd.value, diff.value, cc.value, g.value,
                critical_rho(kc.value, cc.value, g.value, c.r, c.h), "mc",
                stderr=math.hypot(kd.stderr, kc.stderr), kd_stderr=kd.stderr,
                kc_stderr=kc.stderr, diff_stderr=diff.stderr))
        else:
            rep = strike_report(model, c)
            excess = kd_excess(rep.Kc, rep.C, rep.gamma, c.r, c.rho, c.h)
            rows.append(SweepRow(model.variant, n, rep.h, rep.Kc, rep.Kd, excess,
                                 rep.C, rep.gamma, rep.c_star, "analytic"))
    return SweepResult(rows, contract.T)


def write_sweep_csv(result: SweepResult, out: TextIO | None = None) -> str:
    return result.to_csv(out)


def write_ledger_csv(ledger: PropertyLedger, out: TextIO | None = None) -> str:
    return ledger.to_csv(out)


# --- Monte Carlo identity suite ---------------------------------------------------

@dataclass(frozen=True)
class McIdentityRow:
    model: str
    identity_lhs: McEstimate
    identity_rhs: McEstimate
    identity_z: float
    identity_pass: bool
    bound_lhs: float
    bound_rhs: float
    bound_stderr: float
    bound_pass: bool


def lemma_and_bound_mc_suite(cases: Sequence[tuple[ModelSpec, SwapContract]],
                             config: SimConfig, *, z: float = 3.0) -> list[McIdentityRow]:
    """Third-moment identity and |gamma/3| <= sqrt(Kc C) on simulated paths."""
    out = []
    for model, contract in cases:
        run = simulate(model, contract, config)
        lem = run.third_moment_identity()
        kc, cc, g = run.Kc, run.C, run.gamma
        lhs = abs(g.value) / 3.0
        rhs = math.sqrt(max(kc.value, 0.0) * max(cc.value, 0.0))
        # delta method for sqrt(Kc C)
        se = math.sqrt((g.stderr / 3.0) ** 2
                       + (0.5 * math.sqrt(cc.value / kc.value) * kc.stderr) ** 2
                       + (0.5 * math.sqrt(kc.value / cc.value) * cc.stderr) ** 2)
        out.append(McIdentityRow(model.variant, lem.lhs, lem.rhs, lem.paired_z,
                                 abs(lem.paired_z) <= z, lhs, rhs, se, lhs <= rhs + z * se))
    return out
