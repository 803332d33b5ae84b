"""
How fast does the discrete strike converge?
===========================================

Kd(T/n) - Kc and C(T/n) both vanish like 1/n.  The excess is not always
monotone, though: with positive correlation near c* it can grow between
coarse grids before it shrinks.
"""

from varswap import ConstVol, Heston, SwapContract, convergence_sweep
from varswap.analysis import draw_case, draw_seed

n_list = [4, 16, 64, 256, 512]

model = Heston(kappa=0.7, theta=0.09, nu=0.8, V0=0.03)
sweep = convergence_sweep(model, SwapContract(T=2.0, n=1, r=0.02, rho=-0.4), n_list)
print("Heston, rho = -0.4")
for row in sweep.rows:
    # n * diff settles to a constant: first-order convergence
    print(f"  n={row.n:4d}  Kd-Kc={row.diff:.3e}  n*(Kd-Kc)={row.n * row.diff:.5f}  C={row.C:.3e}")

# Black-Scholes variance gives the exact law h (r - V0/2)^2
flat = convergence_sweep(ConstVol(V0=0.04), SwapContract(T=1.0, n=1, r=0.03), n_list)
print("constant volatility:", [f"{r.diff:.2e}" for r in flat.rows])

# A random draw where |Kd - Kc| first grows
odd_model, odd_contract = draw_case("heston", draw_seed(7, "heston", 73))
odd = convergence_sweep(odd_model, odd_contract, n_list)
print(f"Heston draw with rho = {odd_contract.rho:.3f}:")
for row in odd.rows:
    print(f"  n={row.n:4d}  Kd-Kc={row.diff:+.3e}  c*={row.c_star:.3f}")
