"""Closed-form fair strikes of discretely and continuously sampled variance swaps.

For a sampling step h = T/n the discrete fair strike decomposes exactly as

    Kd(h) = Kc + r^2 h - r Kc h + C(h)/4 - rho gamma(h)/3

where Kc is the continuous strike, C(h) the averaged second moment of the
per-interval integrated variance and gamma(h) the averaged third moment of
the per-interval variance-martingale increments.  Closed forms are available
for Heston, Hull-White and constant volatility; every exponential ratio is
routed through :mod:`varswap._expfun` so the limits kappa -> 0, mu -> 0,
2 mu + sigma^2 -> 0 etc. are finite.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

from ._expfun import exprel, exprel2, exprel_d1, exprel_dd
from .models import (
    ConstVol,
    Heston,
    HullWhite,
    ModelSpec,
    SwapContract,
    ThreeHalves,
    UnsupportedModel,
    ensure_valid,
)


class _Undefined:
    """Marker for a critical correlation that does not exist (gamma = 0)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "undefined"

    __str__ = __repr__

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


# --- Heston -----------------------------------------------------------------

def heston_Kc(model: Heston, T: float) -> float:
    """(1/T) int_0^T E V_s ds = theta + (V0 - theta)(1 - e^{-kappa T})/(kappa T)."""
    return model.theta + (model.V0 - model.theta) * exprel(-model.kappa * T)


def heston_gamma(model: Heston, contract: SwapContract) -> float:
    """Averaged third moment of int_{t_i}^{t_i+h} sqrt(V) dW over the partition.

    Equals (3 nu / kappa) {Kc + (Kc - theta) kappa h/(1 - e^{kappa h})
    - theta (1 - e^{-kappa h})/(kappa h)}, rewritten so that kappa h -> 0 is
    finite: gamma/3 = nu h [(Kc - theta) exprel2(x)/exprel(x) + theta exprel2(-x)].
    """
    kap, th, nu = model.kappa, model.theta, model.nu
    h = contract.h
    x = kap * h
    kc_excess = (model.V0 - th) * exprel(-kap * contract.T)
    return 3.0 * nu * h * (kc_excess * exprel2(x) / exprel(x) + th * exprel2(-x))


def heston_C(model: Heston, contract: SwapContract) -> float:
    """C(h) = (1/T) sum_i E(int_{t_i}^{t_i+h} V_s ds)^2 for the CIR variance.

    Split into the squared-mean part and the covariance part
    2 int int_{s<t} e^{-kappa (t-s)} Var V_s; both sums over cells are
    geometric and collapse to exprel ratios.
    """
    kap, th, nu, v0 = model.kappa, model.theta, model.nu, model.V0
    T, h = contract.T, contract.h
    d = v0 - th
    x, X = kap * h, kap * T
    r1 = exprel(-X) / exprel(-x)
    r2 = exprel(-2.0 * X) / exprel(-2.0 * x)
    mean_part = h * th * th + 2.0 * th * h * d * exprel(-X) + d * d * h * exprel(-x) ** 2 * r2
    dd = exprel_dd(-x, -2.0 * x)
    # Var V_s = (nu^2/kappa)[theta/2 + d e^{-kappa s} - (theta/2 + d) e^{-2 kappa s}]
    cov_part = (2.0 * h * nu * nu / kap) * (
        0.5 * th * (exprel2(-x) - dd * r2) + d * (exprel_d1(-x) * r1 - dd * r2)
    )
    return mean_part + cov_part


def _heston_C_expanded(model: Heston, contract: SwapContract) -> float:
    """Expanded textbook form of heston_C, kept to cross-check the rewrite.

    Ill-conditioned for small kappa h; not used by the engines.
    """
    kap, th, nu, v0 = model.kappa, model.theta, model.nu, model.V0
    T, h = contract.T, contract.h
    kc = heston_Kc(model, T)
    e = math.exp(kap * h)
    bracket = (3 * nu / kap) * ((kc - th) * kap * h / (1 - e) - th * (1 - 1 / e) / (kap * h))
    return (
        ((nu**2 / kap**2) * (th - 2 * v0) + 2 * (v0 - th) ** 2 / kap)
        * (math.expm1(-2 * kap * T) / (2 * kap * T))
        * ((1 - e) / (1 + e))
        + (nu**2 / kap**2) * (kc - th) * kap * h / (1 - e)
        + (h * th + nu**2 / kap**2) * (2 * kc - th)
        + (nu / kap) * bracket / 3
    )


# --- Hull-White ---------------------------------------------------------------

def hw_Kc(model: HullWhite, T: float) -> float:
    """V0 (e^{mu T} - 1)/(mu T)."""
    return model.V0 * exprel(model.mu * T)


def hw_C(model: HullWhite, contract: SwapContract) -> float:
    """2 V0^2 h exprel(bT) D(bh, mu h)/exprel(bh), b = 2 mu + sigma^2.

    D is the divided difference of exprel; it absorbs the 1/(mu + sigma^2)
    factor of the expanded expression.
    """
    a, s, v0 = model.mu, model.sigma, model.V0
    T, h = contract.T, contract.h
    b = 2.0 * a + s * s
    return 2.0 * v0 * v0 * h * exprel(b * T) * exprel_dd(b * h, a * h) / exprel(b * h)


def hw_gamma(model: HullWhite, contract: SwapContract) -> float:
    """3 sigma V0^{3/2} h exprel(cT) D(ch, mu h)/exprel(ch), c = 3(4 mu + sigma^2)/8."""
    a, s, v0 = model.mu, model.sigma, model.V0
    T, h = contract.T, contract.h
    c = 3.0 * (4.0 * a + s * s) / 8.0
    return 3.0 * s * v0**1.5 * h * exprel(c * T) * exprel_dd(c * h, a * h) / exprel(c * h)


# --- constant volatility --------------------------------------------------------

def const_Kc(model: ConstVol, T: float) -> float:
    return model.V0


def const_C(model: ConstVol, contract: SwapContract) -> float:
    return contract.h * model.V0**2


def const_gamma(model: ConstVol, contract: SwapContract) -> float:
    return 0.0


_CLOSED_FORMS = {
    Heston: (heston_Kc, heston_C, heston_gamma),
    HullWhite: (hw_Kc, hw_C, hw_gamma),
    ConstVol: (const_Kc, const_C, const_gamma),
}


def closed_forms(model: ModelSpec):
    """(Kc(model, T), C(model, contract), gamma(model, contract)) for a model."""
    try:
        return _CLOSED_FORMS[type(model)]
    except KeyError:
        hint = " (use the Monte Carlo engine)" if isinstance(model, ThreeHalves) else ""
        raise UnsupportedModel(f"no closed form for {model.variant}{hint}") from None


# --- assembling the strike ------------------------------------------------------

def decomposition(Kc, C, gamma, r, rho, h) -> dict[str, float]:
    """The four addends that take Kc to Kd(h)."""
    return {
        "r2h": r * r * h,
        "minus_r_Kc_h": -r * Kc * h,
        "C_over_4": C / 4.0,
        "minus_rho_gamma_over_3": -rho * gamma / 3.0,
    }


def kd_excess(Kc, C, gamma, r, rho, h) -> float:
    """Kd(h) - Kc summed from the addends (no cancellation against Kc)."""
    terms = decomposition(Kc, C, gamma, r, rho, h)
    return ((terms["r2h"] + terms["minus_r_Kc_h"]) + terms["C_over_4"]) + terms["minus_rho_gamma_over_3"]


def kd_from_components(Kc, C, gamma, r, rho, h) -> float:
    return Kc + kd_excess(Kc, C, gamma, r, rho, h)


def critical_rho(Kc, C, gamma, r, h):
    """Correlation at which Kd(h) = Kc, or UNDEFINED when gamma == 0.

    The numerator h r^2 - h Kc r + C/4 is >= h (r - Kc/2)^2 >= 0, so the
    result has the sign of gamma.
    """
    if gamma == 0:
        return UNDEFINED
    return 3.0 * (h * r * r - h * Kc * r + C / 4.0) / gamma


@dataclass(frozen=True)
class StrikeReport:
    model: str
    T: float
    n: int
    h: float
    r: float
    rho: float
    Kc: float
    Kd: float
    C: float
    gamma: float
    c_star: Any
    decomposition: dict = field(default_factory=dict)

    @property
    def diff(self) -> float:
        return self.Kd - self.Kc

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["c_star"] = "undefined" if self.c_star is UNDEFINED else self.c_star
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StrikeReport":
        d = dict(d)
        if d.get("c_star") == "undefined":
            d["c_star"] = UNDEFINED
        d["decomposition"] = dict(d.get("decomposition", {}))
        return cls(**d)


def strike_report(model: ModelSpec, contract: SwapContract) -> StrikeReport:
    ensure_valid(model, contract)
    kc_fn, c_fn, g_fn = closed_forms(model)
    h = contract.h
    Kc = kc_fn(model, contract.T)
    C = c_fn(model, contract)
    gamma = g_fn(model, contract)
    terms = decomposition(Kc, C, gamma, contract.r, contract.rho, h)
    Kd = Kc + kd_excess(Kc, C, gamma, contract.r, contract.rho, h)
    return StrikeReport(
        model=model.variant,
        T=contract.T,
        n=int(contract.n),
        h=h,
        r=contract.r,
        rho=contract.rho,
        Kc=Kc,
        Kd=Kd,
        C=C,
        gamma=gamma,
        c_star=critical_rho(Kc, C, gamma, contract.r, h),
        decomposition=terms,
    )
