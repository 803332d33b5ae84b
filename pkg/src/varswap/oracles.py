"""Brute-force moment oracles for Kc, C(h) and gamma(h).

These never touch the closed forms in :mod:`varswap.strikes`.  They integrate
the first and second moments of the variance process, which are standard
CIR / geometric Brownian facts:

    Kc    = (1/T) int_0^T E m^2(V_s) ds
    C(h)  = (1/T) sum_i  int int_{cell i} l(s, t) ds dt,  l(s,t) = E[m^2(V_s) m^2(V_t)]
    gamma = (3/T) sum_i  int int_{u < s in cell i} x(s, u) du ds

where x(s, u) = d/dW-covariance of V_s with the martingale increment at u
(for affine-drift models, x(s,u) = E[V_s | V_u]' sigma(V_u) m(V_u)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .models import ConstVol, Heston, HullWhite, ModelSpec, SwapContract, UnsupportedModel


class QuadratureError(RuntimeError):
    def __init__(self, message: str, value: float, error: float):
        super().__init__(f"{message} (value={value!r}, error estimate={error!r})")
        self.value = value
        self.error = error


@dataclass(frozen=True)
class SecondMomentKernel:
    mean: Callable  # s -> E m^2(V_s)
    kernel: Callable  # (s, t) -> E[m^2(V_s) m^2(V_t)], symmetric
    cross: Callable  # (s, u), u <= s -> d E[m^2(V_s) M_u] / du
    model: ModelSpec

    def fourth(self, s):
        return self.kernel(s, s)


def cir_variance(model: Heston, u):
    """Var V_u for the CIR process started at V0."""
    kap, th, nu, v0 = model.kappa, model.theta, model.nu, model.V0
    x = -kap * np.asarray(u, dtype=float)
    em1 = np.expm1(x)
    # e1 - e1^2 = -e1 * expm1(-kappa u), (1 - e1)^2 = expm1(-kappa u)^2
    return (v0 * nu**2 / kap) * (-np.exp(x) * em1) + (th * nu**2 / (2 * kap)) * em1 * em1


def kernel_for(model: ModelSpec) -> SecondMomentKernel:
    if isinstance(model, Heston):
        kap, th, nu, v0 = model.kappa, model.theta, model.nu, model.V0

        def mean(s):
            return th + (v0 - th) * np.exp(-kap * np.asarray(s, dtype=float))

        def kernel(s, t):
            s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
            lo = np.minimum(s, t)
            return mean(s) * mean(t) + np.exp(-kap * np.abs(t - s)) * cir_variance(model, lo)

        def cross(s, u):
            return nu * np.exp(-kap * (np.asarray(s) - u)) * mean(u)

        return SecondMomentKernel(mean, kernel, cross, model)

    if isinstance(model, HullWhite):
        a, sg, v0 = model.mu, model.sigma, model.V0
        c = 3.0 * (4.0 * a + sg * sg) / 8.0  # E V_u^{3/2} = V0^{3/2} e^{c u}

        def mean(s):
            return v0 * np.exp(a * np.asarray(s, dtype=float))

        def kernel(s, t):
            s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
            return v0 * v0 * np.exp(a * (s + t) + sg * sg * np.minimum(s, t))

        def cross(s, u):
            return sg * v0**1.5 * np.exp(a * (np.asarray(s) - u) + c * np.asarray(u))

        return SecondMomentKernel(mean, kernel, cross, model)

    if isinstance(model, ConstVol):
        v0 = model.V0
        return SecondMomentKernel(
            mean=lambda s: np.full_like(np.asarray(s, dtype=float), v0),
            kernel=lambda s, t: np.full(np.broadcast(np.asarray(s), np.asarray(t)).shape, v0 * v0),
            cross=lambda s, u: np.zeros(np.broadcast(np.asarray(s), np.asarray(u)).shape),
            model=model,
        )

    raise UnsupportedModel(f"no second-moment kernel for {model.variant}")


def _quad_1d(func, T, epsabs, epsrel, what):
    value, err = integrate.quad(func, 0.0, T, epsabs=epsabs, epsrel=epsrel, limit=200)
    if not math.isfinite(value) or err > max(epsabs, epsrel * abs(value)) * 10:
        raise QuadratureError(f"{what} did not converge", value, err)
    return value, err


def quad_Kc(kernel: SecondMomentKernel, T: float, *, epsabs=1e-12, epsrel=1e-13,
            full_output=False):
    """(1/T) int_0^T E m^2(V_s) ds by adaptive Gauss-Kronrod."""
    value, err = _quad_1d(lambda s: float(kernel.mean(s)), T, epsabs, epsrel, "quad_Kc")
    if full_output:
        return value / T, err / T
    return value / T


def quad_m4_bound(kernel: SecondMomentKernel, T: float, *, epsabs=1e-14, epsrel=1e-13,
                  full_output=False):
    """int_0^T E m^4(V_s) ds; C(h) <= (h/T) times this."""
    value, err = _quad_1d(lambda s: float(kernel.fourth(s)), T, epsabs, epsrel, "quad_m4_bound")
    return (value, err) if full_output else value


def _gl01(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _triangle_cells(g, starts, h, nodes):
    """int_a^{a+h} int_a^t g(s, t) ds dt for every a in starts.

    Collapsed coordinates t = a + h u, s = a + h u v map the triangle onto
    the unit square with Jacobian h^2 u; the kernels are smooth there even
    though l(s, t) has a kink on the diagonal.
    """
    x, w = _gl01(nodes)
    u = x[:, None]
    v = x[None, :]
    a = np.asarray(starts, dtype=float)[:, None, None]
    t = a + h * u
    s = a + h * u * v
    vals = g(s, t) * u
    return h * h * np.einsum("i,cij,j->c", w, vals, w)


def _cells(g, contract, nodes):
    starts = contract.times[:-1]
    lo = _triangle_cells(g, starts, contract.h, nodes)
    hi = _triangle_cells(g, starts, contract.h, nodes + 16)
    return math.fsum(hi), math.fsum(np.abs(hi - lo))


def quad_C(kernel: SecondMomentKernel, contract: SwapContract, *, nodes=32, rtol=1e-10,
           full_output=False):
    """(1/T) sum over the n diagonal cells of int int l(s, t) ds dt."""
    if nodes < 32:
        raise ValueError("at least 32 nodes per axis")
    total, err = _cells(lambda s, t: kernel.kernel(s, t), contract, nodes)
    value, err = 2.0 * total / contract.T, 2.0 * err / contract.T
    if not math.isfinite(value) or err > rtol * abs(value) + 1e-300:
        raise QuadratureError("quad_C did not converge", value, err)
    return (value, err) if full_output else value


def quad_gamma(kernel: SecondMomentKernel, contract: SwapContract, *, nodes=32, rtol=1e-10,
               full_output=False):
    """(3/T) sum_i int int_{u < s in cell i} x(s, u) du ds."""
    if nodes < 32:
        raise ValueError("at least 32 nodes per axis")
    total, err = _cells(lambda u, s: kernel.cross(s, u), contract, nodes)
    value, err = 3.0 * total / contract.T, 3.0 * err / contract.T
    if not math.isfinite(value) or err > rtol * abs(value) + 1e-300:
        raise QuadratureError("quad_gamma did not converge", value, err)
    return (value, err) if full_output else value


def sample_cir_exact(model: Heston, t: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws of V_t via the scaled noncentral chi-square law.

    Test helper for validating the CIR covariance formula; the simulation
    engine deliberately uses full-truncation Euler instead.
    """
    kap, th, nu = model.kappa, model.theta, model.nu
    c = nu**2 * (-math.expm1(-kap * t)) / (4 * kap)
    df = 4 * kap * th / nu**2
    nc = model.V0 * math.exp(-kap * t) / c
    return c * rng.noncentral_chisquare(df, nc, size=size)
