"""Monte Carlo engine for the variance and log-price paths.

Paths are simulated in fixed-size blocks.  Block ``b`` draws from its own
Philox stream keyed by ``SeedSequence(seed, spawn_key=(b,))``, so every path
is a pure function of (inputs, seed, path index) and the result does not
depend on how many worker threads process the blocks.  Per-block reductions
are merged in block order.

Per sampling interval the engine produces

    I  = int m^2(V_s) ds           (trapezoid over substeps)
    J  = int m(V_s) dW2_s          (left-point Ito sum plus Milstein term)
    dY = r h - I/2 + rho J + sqrt((1 - rho^2) I) Z

where the last line samples the log-return exactly from its Gaussian law
given the variance path ("mixing").  With ``mixing=False`` the log-price is
stepped with its own independent Brownian motion instead.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models import (
    ConstVol,
    Heston,
    HullWhite,
    ModelSpec,
    SwapContract,
    ThreeHalves,
    UnsupportedModel,
    ensure_valid,
    transform_pair,
)

ABORT_LIMIT = 1e-4
RECIPROCAL_FLOOR = 1e-12


class SimulationError(RuntimeError):
    pass


class Scheme(str, enum.Enum):
    FULL_TRUNCATION_EULER = "FullTruncationEuler"
    EXACT_GBM = "ExactGBM"
    RECIPROCAL_CIR = "ReciprocalCIR"


_DEFAULT_SCHEME = {
    Heston: Scheme.FULL_TRUNCATION_EULER,
    HullWhite: Scheme.EXACT_GBM,
    ThreeHalves: Scheme.RECIPROCAL_CIR,
    ConstVol: Scheme.FULL_TRUNCATION_EULER,
}


@dataclass(frozen=True)
class SimConfig:
    paths: int = 200_000
    substeps: int = 64
    seed: int = 0
    scheme: Scheme | None = None
    mixing: bool = True
    milstein: bool = True
    block_size: int = 8192
    workers: int = 1  # execution only; never changes results

    def __post_init__(self):
        if self.paths < 2:
            raise ValueError("paths must be >= 2")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.scheme is not None and not isinstance(self.scheme, Scheme):
            object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def n_blocks(self) -> int:
        return -(-self.paths // self.block_size)

    def block_rows(self, block: int) -> int:
        return min(self.block_size, self.paths - block * self.block_size)


def resolve_workers(workers: int | None) -> int:
    if workers:
        return max(1, int(workers))
    env = os.environ.get("VARSWAP_THREADS")
    return max(1, int(env)) if env else 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


@dataclass(frozen=True)
class IntervalStats:
    I: np.ndarray
    J: np.ndarray
    dY: np.ndarray


@dataclass(frozen=True)
class PathBatch:
    """Per-path, per-interval statistics of one simulation block."""

    first_path: int
    I: np.ndarray  # (paths, n)
    J: np.ndarray
    dY: np.ndarray
    J_transform: np.ndarray | None
    aborted: np.ndarray  # (paths,) bool

    def path(self, k: int) -> IntervalStats:
        return IntervalStats(self.I[k], self.J[k], self.dY[k])


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    paths: int
    ci95: tuple[float, float] = field(default=(math.nan, math.nan))

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "McEstimate":
        x = np.asarray(x, dtype=float)
        value = float(np.mean(x))
        se = float(np.std(x, ddof=1) / math.sqrt(x.size))
        return cls(value, se, int(x.size), (value - 1.96 * se, value + 1.96 * se))

    def zscore(self, target: float) -> float:
        return (self.value - target) / self.stderr if self.stderr > 0 else (
            0.0 if self.value == target else math.inf)

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "paths": self.paths,
                "ci95": list(self.ci95)}


def _scheme_for(model: ModelSpec, config: SimConfig) -> Scheme:
    scheme = config.scheme or _DEFAULT_SCHEME[type(model)]
    if scheme is Scheme.EXACT_GBM and not isinstance(model, HullWhite):
        raise UnsupportedModel(f"ExactGBM scheme needs a Hull-White model, got {model.variant}")
    if scheme is Scheme.RECIPROCAL_CIR and not isinstance(model, ThreeHalves):
        raise UnsupportedModel(f"ReciprocalCIR scheme needs a 3/2 model, got {model.variant}")
    return scheme


def _raw_coefficients(model: ModelSpec):
    """Vectorised (drift, diffusion, milstein) on v >= 0 without domain checks.

    ``milstein`` is m'(v) sigma(v) / 2, the coefficient of (dW^2 - dt) in the
    second-order expansion of int m(V) dW over one substep.
    """
    if isinstance(model, Heston):
        k, th, nu = model.kappa, model.theta, model.nu
        return (lambda v: k * (th - v), lambda v: nu * np.sqrt(v),
                lambda v: np.full_like(v, 0.25 * nu))
    if isinstance(model, HullWhite):
        a, s = model.mu, model.sigma
        return (lambda v: a * v, lambda v: s * v, lambda v: 0.25 * s * np.sqrt(v))
    if isinstance(model, ThreeHalves):
        p, q, e = model.p, model.q, model.eps
        return (lambda v: v * (p + q * v), lambda v: e * v * np.sqrt(v), lambda v: 0.25 * e * v)
    zero = lambda v: np.zeros_like(v)  # noqa: E731
    return zero, zero, zero


def _trapezoid_rows(first, interior_sum, last, dt):
    return dt * (interior_sum + 0.5 * (last - first))


class _Block:
    """Simulates one block; holds the state of a single interval loop."""

    def __init__(self, model, contract, config, block, want_transform):
        self.model = model
        self.contract = contract
        self.config = config
        self.rows = config.block_rows(block)
        self.first_path = block * config.block_size
        self.rng = block_rng(config.seed, block)
        self.scheme = _scheme_for(model, config)
        self.tp = transform_pair(model) if want_transform else None

    def run(self) -> PathBatch:
        model, c, cfg = self.model, self.contract, self.config
        B, n, S = self.rows, c.n, cfg.substeps
        h = c.h
        dt = h / S
        sqdt = math.sqrt(dt)
        I = np.empty((B, n))
        J = np.empty((B, n))
        dY = np.empty((B, n))
        Jt = np.empty((B, n)) if self.tp is not None else None
        rho, r = c.rho, c.r
        rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))

        if self.scheme is Scheme.RECIPROCAL_CIR:
            state = np.full(B, 1.0 / model.V0)
        else:
            state = np.full(B, float(model.V0))

        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for i in range(n):
                dW = self.rng.standard_normal((S, B))
                dW *= sqdt
                dW3 = None
                if not cfg.mixing:
                    dW3 = self.rng.standard_normal((S, B))
                    dW3 *= sqdt
                state, Ii, Ji, Jti, dYi = self._interval(state, dW, dW3, dt, rho, rho_c, r)
                if cfg.mixing:
                    z = self.rng.standard_normal(B)
                    dYi = r * h - 0.5 * Ii + rho * Ji + np.sqrt(rho_c * rho_c * np.maximum(Ii, 0.0)) * z
                I[:, i] = Ii
                J[:, i] = Ji
                dY[:, i] = dYi
                if Jt is not None:
                    Jt[:, i] = Jti
            bad = ~(np.isfinite(I).all(axis=1) & np.isfinite(J).all(axis=1)
                    & np.isfinite(dY).all(axis=1))
            if Jt is not None:
                bad |= ~np.isfinite(Jt).all(axis=1)
        return PathBatch(self.first_path, I, J, dY, Jt, bad)

    def _interval(self, state, dW, dW3, dt, rho, rho_c, r):
        model, cfg = self.model, self.config
        S, B = dW.shape
        mil = cfg.milstein
        tp = self.tp
        naive = dW3 is not None
        dY = np.zeros(B) if naive else None

        if isinstance(model, ConstVol):
            v = float(model.V0)
            Ii = np.full(B, v * S * dt)
            Ji = math.sqrt(v) * dW.sum(axis=0)
            if naive:
                dY = (r - 0.5 * v) * S * dt + math.sqrt(v) * (rho * dW.sum(axis=0) + rho_c * dW3.sum(axis=0))
            return state, Ii, Ji, None, dY

        if self.scheme is Scheme.EXACT_GBM:
            a, s = model.mu, model.sigma
            incr = (a - 0.5 * s * s) * dt + s * dW
            logv = np.empty((S + 1, B))
            logv[0] = np.log(state)
            np.cumsum(incr, axis=0, out=logv[1:])
            logv[1:] += logv[0]
            V = np.exp(logv)
            sq = np.sqrt(V[:-1])
            Ii = dt * (V[1:-1].sum(axis=0) + 0.5 * (V[0] + V[-1]))
            Ji = (sq * dW).sum(axis=0)
            if mil:
                Ji += (0.25 * s * sq * (dW * dW - dt)).sum(axis=0)
            Jti = None
            if tp is not None:
                kv = tp.k(V)
                Jti = tp.f(V[-1]) - tp.f(V[0]) - dt * (kv[1:-1].sum(axis=0) + 0.5 * (kv[0] + kv[-1]))
            if naive:
                dY = ((r - 0.5 * V[:-1]) * dt + sq * (rho * dW + rho_c * dW3)).sum(axis=0)
            return V[-1].copy(), Ii, Ji, Jti, dY

        if self.scheme is Scheme.RECIPROCAL_CIR:
            p, q, e = model.p, model.q, model.eps
            X = state
            V = 1.0 / np.maximum(X, RECIPROCAL_FLOOR)
            V0 = V
            isum = np.zeros(B)
            Ji = np.zeros(B)
            ksum = np.zeros(B) if tp is not None else None
            for k in range(S):
                w = dW[k]
                sqv = np.sqrt(V)
                Ji += sqv * w
                if mil:
                    Ji += 0.25 * e * V * (w * w - dt)
                if naive:
                    dY += (r - 0.5 * V) * dt + sqv * (rho * w + rho_c * dW3[k])
                isum += V
                if ksum is not None:
                    ksum += (p + q * V) / e - 0.5 * e * V
                Xp = np.maximum(X, 0.0)
                X = X + (e * e - q - p * Xp) * dt - e * np.sqrt(Xp) * w
                V = 1.0 / np.maximum(X, RECIPROCAL_FLOOR)
            Ii = _trapezoid_rows(V0, isum, V, dt)
            Jti = None
            if ksum is not None:
                k0 = (p + q * V0) / e - 0.5 * e * V0
                k1 = (p + q * V) / e - 0.5 * e * V
                Jti = (np.log(V) - np.log(V0)) / e - _trapezoid_rows(k0, ksum, k1, dt)
            return X, Ii, Ji, Jti, dY

        # full-truncation Euler on V itself
        drift, diff, milc = _raw_coefficients(model)
        V = state
        Vp = np.maximum(V, 0.0)
        Vp0 = Vp
        isum = np.zeros(B)
        Ji = np.zeros(B)
        ksum = np.zeros(B) if tp is not None else None
        for k in range(S):
            w = dW[k]
            sqv = np.sqrt(Vp)
            Ji += sqv * w
            if mil:
                Ji += milc(Vp) * (w * w - dt)
            if naive:
                dY += (r - 0.5 * Vp) * dt + sqv * (rho * w + rho_c * dW3[k])
            isum += Vp
            if ksum is not None:
                ksum += tp.k(Vp)
            V = V + drift(Vp) * dt + diff(Vp) * w
            Vp = np.maximum(V, 0.0)
        Ii = _trapezoid_rows(Vp0, isum, Vp, dt)
        Jti = None
        if ksum is not None:
            Jti = tp.f(Vp) - tp.f(Vp0) - _trapezoid_rows(tp.k(Vp0), ksum, tp.k(Vp), dt)
        return V, Ii, Ji, Jti, dY


def _has_transform(model: ModelSpec) -> bool:
    try:
        transform_pair(model)
    except UnsupportedModel:
        return False
    return True


def simulate_block(model: ModelSpec, contract: SwapContract, config: SimConfig, block: int,
                   *, transform: bool = False) -> PathBatch:
    ensure_valid(model, contract)
    if not 0 <= block < config.n_blocks:
        raise IndexError(f"block {block} out of range")
    return _Block(model, contract, config, block, transform).run()


def simulate_variance_path(model: ModelSpec, contract: SwapContract, config: SimConfig,
                           path_index: int) -> IntervalStats:
    """Per-interval (I, J, dY) of a single path; identical to its row in any full run."""
    if not 0 <= path_index < config.paths:
        raise IndexError(f"path {path_index} out of range")
    block, row = divmod(path_index, config.block_size)
    return simulate_block(model, contract, config, block).path(row)


_FUNCTIONALS = ("kd", "kc", "c", "g", "g_tr", "mart", "qv")


def _reduce_block(batch: PathBatch, T: float) -> dict[str, np.ndarray]:
    keep = ~batch.aborted
    I, J, dY = batch.I[keep], batch.J[keep], batch.dY[keep]
    out = {
        "kd": np.sum(dY * dY, axis=1) / T,
        "kc": np.sum(I, axis=1) / T,
        "c": np.sum(I * I, axis=1) / T,
        "g": np.sum(J * J * J, axis=1) / T,
        "mart": np.sum(J, axis=1),
        "qv": np.sum(I, axis=1),
    }
    if batch.J_transform is not None:
        Jt = batch.J_transform[keep]
        out["g_tr"] = np.sum(Jt * Jt * Jt, axis=1) / T
    out["aborted"] = np.array([int(batch.aborted.sum())])
    return out


@dataclass(frozen=True)
class MomentIdentity:
    lhs: McEstimate  # (1/3) E M_T^3
    rhs: McEstimate  # E M_T [M]_T
    diff: McEstimate  # paired lhs - rhs

    @property
    def paired_z(self) -> float:
        return self.diff.zscore(0.0)


@dataclass(frozen=True)
class McRun:
    """Per-path functionals of one simulation; estimates are derived lazily."""

    model: ModelSpec
    contract: SwapContract
    config: SimConfig
    samples: dict
    aborted: int

    @property
    def paths(self) -> int:
        return int(self.samples["kd"].size)

    @property
    def Kd(self) -> McEstimate:
        return McEstimate.from_samples(self.samples["kd"])

    @property
    def Kc(self) -> McEstimate:
        return McEstimate.from_samples(self.samples["kc"])

    @property
    def C(self) -> McEstimate:
        return McEstimate.from_samples(self.samples["c"])

    @property
    def gamma(self) -> McEstimate:
        return McEstimate.from_samples(self.samples["g"])

    @property
    def gamma_transform(self) -> McEstimate:
        if "g_tr" not in self.samples:
            raise UnsupportedModel(f"no transform estimator for {self.model.variant}")
        return McEstimate.from_samples(self.samples["g_tr"])

    @property
    def diff(self) -> McEstimate:
        """Paired estimate of Kd - Kc from the same paths."""
        return McEstimate.from_samples(self.samples["kd"] - self.samples["kc"])

    def third_moment_identity(self) -> MomentIdentity:
        m, qv = self.samples["mart"], self.samples["qv"]
        lhs, rhs = m**3 / 3.0, m * qv
        return MomentIdentity(McEstimate.from_samples(lhs), McEstimate.from_samples(rhs),
                            McEstimate.from_samples(lhs - rhs))

    def diagnostics(self) -> dict:
        g = self.samples["g"]
        centred = g - g.mean()
        var = float(np.mean(centred**2))
        kurt = float(np.mean(centred**4) / var**2) if var > 0 else math.nan
        return {"paths": self.paths, "aborted": self.aborted, "gamma_sample_kurtosis": kurt}


def simulate(model: ModelSpec, contract: SwapContract, config: SimConfig) -> McRun:
    """Run all blocks and keep the per-path functionals needed by every estimator."""
    ensure_valid(model, contract)
    transform = _has_transform(model)
    workers = resolve_workers(config.workers)

    def work(b):
        batch = _Block(model, contract, config, b, transform).run()
        return _reduce_block(batch, contract.T)

    blocks = range(config.n_blocks)
    if workers > 1 and config.n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]

    aborted = int(sum(int(p["aborted"][0]) for p in parts))
    if aborted > ABORT_LIMIT * config.paths:
        raise SimulationError(f"{aborted} of {config.paths} paths produced non-finite values")
    keys = [k for k in _FUNCTIONALS if k in parts[0]]
    samples = {k: np.concatenate([p[k] for p in parts]) for k in keys}
    return McRun(model, contract, config, samples, aborted)


def estimate_Kd(model, contract, config) -> McEstimate:
    return simulate(model, contract, config).Kd


def estimate_Kc(model, contract, config) -> McEstimate:
    return simulate(model, contract, config).Kc


def estimate_C(model, contract, config) -> McEstimate:
    return simulate(model, contract, config).C


def estimate_gamma(model, contract, config) -> McEstimate:
    return simulate(model, contract, config).gamma


def estimate_gamma_via_transform(model, contract, config) -> McEstimate:
    if not _has_transform(model):
        raise UnsupportedModel(f"no transform pair for {model.variant}")
    return simulate(model, contract, config).gamma_transform


def lemma1_check(model, contract, config) -> MomentIdentity:
    """(1/3) E M_T^3 against E M_T [M]_T with M_t = int_0^t m(V) dW2, same paths."""
    return simulate(model, contract, config).third_moment_identity()
