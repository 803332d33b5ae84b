"""Model universe: stochastic volatility diffusions and swap contracts.

The stock follows

    dS_t / S_t = r dt + m(V_t) dW1_t
    dV_t       = mu(V_t) dt + sigma(V_t) dW2_t,   d<W1, W2>_t = rho dt

with m(x) = sqrt(x) for every variant shipped here, so the state space of V
is (0, inf).  Models are plain frozen dataclasses; construction never raises,
:func:`validate` reports whether a (model, contract) pair is admissible.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, ClassVar, Mapping

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ValidationError(ValueError):
    """Raised when an invalid model or contract reaches an engine."""


class UnsupportedModel(TypeError):
    """Raised when an operation has no implementation for a model variant."""


class DomainError(ValueError):
    """Raised when a coefficient function is evaluated outside (0, inf)."""


def _check_domain(v):
    if np.any(np.asarray(v) <= 0):
        raise DomainError("state must be strictly positive")


@dataclass(frozen=True, kw_only=True)
class ModelSpec:
    """Base class of the tagged union; ``variant`` is the tag."""

    variant: ClassVar[str] = ""

    V0: float

    def m(self, v):
        _check_domain(v)
        return np.sqrt(v)

    def drift(self, v):
        raise NotImplementedError

    def diffusion(self, v):
        raise NotImplementedError

    def params(self) -> dict[str, float]:
        return asdict(self)

    def constraints(self) -> list[tuple[bool, str]]:
        return [(self.V0 > 0, "V0 > 0")]


@dataclass(frozen=True, kw_only=True)
class Heston(ModelSpec):
    """dV = kappa (theta - V) dt + nu sqrt(V) dW."""

    variant: ClassVar[str] = "heston"

    kappa: float
    theta: float
    nu: float

    def drift(self, v):
        _check_domain(v)
        return self.kappa * (self.theta - np.asarray(v, dtype=float))

    def diffusion(self, v):
        _check_domain(v)
        return self.nu * np.sqrt(v)

    def constraints(self):
        return [
            (self.kappa > 0, "kappa > 0"),
            (self.theta > 0, "theta > 0"),
            (self.nu > 0, "nu > 0"),
            (self.V0 > 0, "V0 > 0"),
        ]

    @property
    def feller(self) -> bool:
        return 2.0 * self.kappa * self.theta >= self.nu**2


@dataclass(frozen=True, kw_only=True)
class HullWhite(ModelSpec):
    """Geometric Brownian variance: dV = mu V dt + sigma V dW."""

    variant: ClassVar[str] = "hull_white"

    mu: float
    sigma: float

    def drift(self, v):
        _check_domain(v)
        return self.mu * np.asarray(v, dtype=float)

    def diffusion(self, v):
        _check_domain(v)
        return self.sigma * np.asarray(v, dtype=float)

    def constraints(self):
        return [
            (math.isfinite(self.mu), "mu finite"),
            (self.sigma > 0, "sigma > 0"),
            (self.V0 > 0, "V0 > 0"),
        ]


@dataclass(frozen=True, kw_only=True)
class ThreeHalves(ModelSpec):
    """dV = V (p + q V) dt + eps V^{3/2} dW, non-explosive iff q < eps^2/2."""

    variant: ClassVar[str] = "three_halves"

    p: float
    q: float
    eps: float

    def drift(self, v):
        _check_domain(v)
        v = np.asarray(v, dtype=float)
        return v * (self.p + self.q * v)

    def diffusion(self, v):
        _check_domain(v)
        return self.eps * np.asarray(v, dtype=float) ** 1.5

    def constraints(self):
        return [
            (self.eps > 0, "eps > 0"),
            (self.V0 > 0, "V0 > 0"),
            (self.q < 0.5 * self.eps**2, "q < eps^2/2"),
        ]


@dataclass(frozen=True, kw_only=True)
class ConstVol(ModelSpec):
    """Degenerate V_t = V0; Gaussian log-returns."""

    variant: ClassVar[str] = "const_vol"

    def drift(self, v):
        _check_domain(v)
        return np.zeros_like(np.asarray(v, dtype=float))

    def diffusion(self, v):
        _check_domain(v)
        return np.zeros_like(np.asarray(v, dtype=float))


VARIANTS: dict[str, type[ModelSpec]] = {
    cls.variant: cls for cls in (Heston, HullWhite, ThreeHalves, ConstVol)
}


def make_model(kind: str, **params: float) -> ModelSpec:
    """Build a model from its tag and user-facing parameter names."""
    key = kind.lower().replace("-", "_")
    aliases = {"hw": "hull_white", "hullwhite": "hull_white", "32": "three_halves",
               "3/2": "three_halves", "threehalves": "three_halves",
               "constvol": "const_vol", "bs": "const_vol"}
    key = aliases.get(key, key)
    if key not in VARIANTS:
        raise UnsupportedModel(f"unknown model type {kind!r}")
    try:
        return VARIANTS[key](**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {key}: {exc}") from None


@dataclass(frozen=True)
class SwapContract:
    """Variance swap terms: maturity T (years) sampled n times."""

    T: float
    n: int
    r: float = 0.0
    rho: float = 0.0
    S0: float = 100.0

    @property
    def h(self) -> float:
        return self.T / self.n

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.n + 1)

    def with_(self, **changes) -> "SwapContract":
        d = asdict(self)
        d.update(changes)
        return SwapContract(**d)

    def constraints(self) -> list[tuple[bool, str]]:
        return [
            (self.T > 0, "T > 0"),
            (isinstance(self.n, (int, np.integer)) and self.n >= 1, "n positive integer"),
            (self.r >= 0, "r >= 0"),
            (-1.0 <= self.rho <= 1.0, "rho in [-1, 1]"),
            (self.S0 > 0, "S0 > 0"),
        ]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate(model: ModelSpec, contract: SwapContract | None = None) -> ValidationReport:
    """Check parameter domains; failures name the violated constraint."""
    checks = list(model.constraints())
    if contract is not None:
        checks += contract.constraints()
    errors = [f"violated: {name}" for good, name in checks if not good]
    for name, value in {**model.params(), **(asdict(contract) if contract else {})}.items():
        if not math.isfinite(float(value)):
            errors.append(f"non-finite parameter {name}")
    warnings, notes = [], []
    if isinstance(model, Heston) and not errors and not model.feller:
        warnings.append("Feller condition 2*kappa*theta >= nu^2 violated; V can reach 0")
    if isinstance(model, ThreeHalves) and model.q <= 0 and not errors:
        notes.append("q <= 0: mean-reverting 3/2 variance")
    return ValidationReport(not errors, tuple(errors), tuple(warnings), tuple(notes))


def ensure_valid(model: ModelSpec, contract: SwapContract | None = None) -> None:
    report = validate(model, contract)
    if not report.ok:
        raise ValidationError("; ".join(report.errors))


# Coefficient functions in the functional style used by the rest of the package.

def m(model: ModelSpec, v):
    return model.m(v)


def mu(model: ModelSpec, v):
    return model.drift(v)


def sigma(model: ModelSpec, v):
    return model.diffusion(v)


@dataclass(frozen=True)
class TransformPair:
    """f(v) = int m/sigma and k = mu f' + sigma^2 f''/2, so that
    df(V) = k(V) dt + m(V) dW2."""

    f: Callable
    k: Callable
    df: Callable
    d2f: Callable


def transform_pair(model: ModelSpec) -> TransformPair:
    if isinstance(model, Heston):
        kap, th, nu = model.kappa, model.theta, model.nu
        return TransformPair(
            f=lambda v: np.asarray(v, dtype=float) / nu,
            k=lambda v: kap * (th - np.asarray(v, dtype=float)) / nu,
            df=lambda v: np.full_like(np.asarray(v, dtype=float), 1.0 / nu),
            d2f=lambda v: np.zeros_like(np.asarray(v, dtype=float)),
        )
    if isinstance(model, HullWhite):
        a, s = model.mu, model.sigma
        return TransformPair(
            f=lambda v: 2.0 * np.sqrt(v) / s,
            k=lambda v: (a / s - s / 4.0) * np.sqrt(v),
            df=lambda v: 1.0 / (s * np.sqrt(v)),
            d2f=lambda v: -0.5 / (s * np.asarray(v, dtype=float) ** 1.5),
        )
    if isinstance(model, ThreeHalves):
        p, q, e = model.p, model.q, model.eps
        return TransformPair(
            f=lambda v: np.log(v) / e,
            k=lambda v: (p + q * np.asarray(v, dtype=float)) / e - 0.5 * e * np.asarray(v, dtype=float),
            df=lambda v: 1.0 / (e * np.asarray(v, dtype=float)),
            d2f=lambda v: -1.0 / (e * np.asarray(v, dtype=float) ** 2),
        )
    raise UnsupportedModel(f"no transform pair for {model.variant} (sigma vanishes)")


# --- configuration files ----------------------------------------------------

def read_config(source: str | Path | Mapping[str, Any]) -> dict[str, Any]:
    """Load a TOML or JSON config file (or pass a mapping through)."""
    if isinstance(source, Mapping):
        return dict(source)
    path = Path(source)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return json.loads(text)
    return tomllib.loads(text)


def model_from_config(cfg: Mapping[str, Any]) -> ModelSpec:
    block = cfg.get("model")
    if not block or "type" not in block:
        raise ValidationError("config needs a [model] block with a 'type' key")
    return make_model(block["type"], **dict(block.get("params", {})))


def contract_from_config(cfg: Mapping[str, Any]) -> SwapContract:
    block = dict(cfg.get("contract", {}))
    if "T" not in block or "n" not in block:
        raise ValidationError("config needs contract.T and contract.n")
    n = block["n"]
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    return SwapContract(
        T=float(block["T"]),
        n=n,
        r=float(block.get("r", 0.0)),
        rho=float(block.get("rho", 0.0)),
        S0=float(block.get("S0", 100.0)),
    )
