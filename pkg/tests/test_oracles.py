import math

import numpy as np
import pytest
from scipy import integrate

from varswap.models import ConstVol, Heston, HullWhite, SwapContract, ThreeHalves, UnsupportedModel
from varswap.oracles import (
    QuadratureError,
    cir_variance,
    kernel_for,
    quad_C,
    quad_gamma,
    quad_Kc,
    quad_m4_bound,
    sample_cir_exact,
)
from varswap.strikes import closed_forms

HESTON = Heston(kappa=1.5, theta=0.05, nu=0.6, V0=0.02)
HW = HullWhite(mu=-0.2, sigma=0.4, V0=0.06)


@pytest.mark.parametrize("model", [HESTON, HW, ConstVol(V0=0.03)])
@pytest.mark.parametrize("n", [1, 4, 12, 52, 512])
def test_closed_forms_match_oracles(model, n):
    c = SwapContract(T=1.7, n=n)
    kc_fn, c_fn, g_fn = closed_forms(model)
    k = kernel_for(model)
    assert kc_fn(model, c.T) == pytest.approx(quad_Kc(k, c.T), rel=1e-12)
    assert c_fn(model, c) == pytest.approx(quad_C(k, c), rel=1e-11)
    assert g_fn(model, c) == pytest.approx(quad_gamma(k, c), rel=1e-11, abs=1e-300)


def test_triangle_rule_against_tensor_dblquad():
    # slower generic rule, split at the diagonal so it converges
    c = SwapContract(T=1.0, n=2)
    k = kernel_for(HESTON)
    total = 0.0
    for a in c.times[:-1]:
        val, _ = integrate.dblquad(lambda s, t: float(k.kernel(s, t)), a, a + c.h, a, lambda t: t,
                                   epsabs=1e-14, epsrel=1e-12)
        total += 2 * val
    assert quad_C(k, c) == pytest.approx(total / c.T, rel=1e-9)


def test_full_output_and_error_estimate():
    value, err = quad_C(kernel_for(HESTON), SwapContract(T=1.0, n=4), full_output=True)
    assert 0 <= err < 1e-10 * value


def test_too_few_nodes():
    with pytest.raises(ValueError):
        quad_C(kernel_for(HESTON), SwapContract(T=1.0, n=4), nodes=8)


def test_non_convergence_is_reported():
    # 48 nodes cannot resolve an exponent of 400 over one cell
    wild = HullWhite(mu=200.0, sigma=0.1, V0=1e-6)
    with pytest.raises(QuadratureError) as info:
        quad_C(kernel_for(wild), SwapContract(T=1.0, n=1))
    assert info.value.error > 1e-10 * info.value.value


def test_no_kernel_for_three_halves():
    with pytest.raises(UnsupportedModel):
        kernel_for(ThreeHalves(p=1.0, q=0.2, eps=1.0, V0=0.04))


def test_m4_bound_hw_exact():
    # E V_s^2 = V0^2 e^{(2 mu + sigma^2) s}
    b = 2 * HW.mu + HW.sigma**2
    exact = HW.V0**2 * math.expm1(b * 2.0) / b
    assert quad_m4_bound(kernel_for(HW), 2.0) == pytest.approx(exact, rel=1e-12)


def test_cir_moments_by_exact_sampling():
    rng = np.random.default_rng(3)
    t = 0.7
    x = sample_cir_exact(HESTON, t, 400_000, rng)
    k = kernel_for(HESTON)
    se_mean = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - float(k.mean(t))) < 4 * se_mean
    var = float(cir_variance(HESTON, t))
    se_var = math.sqrt(np.mean((x - x.mean()) ** 4) - var**2) / math.sqrt(x.size)
    assert abs(x.var() - var) < 4 * se_var


def test_cir_variance_small_time():
    # Var V_u ~ nu^2 V0 u as u -> 0
    u = 1e-9
    assert float(cir_variance(HESTON, u)) == pytest.approx(HESTON.nu**2 * HESTON.V0 * u, rel=1e-6)
