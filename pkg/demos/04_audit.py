"""
Auditing the inequalities
=========================

Every closed-form bound is checked on random Heston and Hull-White
parameter draws.  Each ledger row stores the seed of its draw, so a failing
row can be reproduced on its own.
"""

from collections import Counter

from varswap import property_audit, sign_law_test

ledger = property_audit(200, seed=7)
print(f"{ledger.draws_passed()} of {len(ledger.draws)} draws pass every check")
print("rows per check:", dict(Counter(r.check for r in ledger.rows)))

# n = 1 makes in1 an equality, so skip exact ties
strict = [r for r in ledger.rows if r.margin > 0]
tightest = min(strict, key=lambda r: r.margin / max(abs(r.rhs), 1e-300))
print(f"tightest: {tightest.check} on {tightest.draw_id}, relative margin "
      f"{tightest.margin / abs(tightest.rhs):.2e}")

# halving C breaks Kc^2 h <= C, and the audit notices
broken = property_audit(200, seed=7, c_scale=0.5)
print("failures after halving C:", dict(Counter(r.check for r in broken.failures)))

signs = sign_law_test(200, seed=7)
print(f"sign law rows: {len(signs.rows)}, failures: {len(signs.failures)}, "
      f"draws with Kd < Kc: {signs.notes['kd_below_kc_instances']}")
