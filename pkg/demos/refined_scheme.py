"""The refined doubling scheme: Lebesgue is not liftable, and the phi = -2 root.

Level ``n`` is cut into ``2^(2^n)`` congruent pieces with inducing time
``2^n + n + 1``.  The length density gives each level a contribution
``tau_n 2^-(n+1)`` of at least 1/2, so ``Q`` grows without bound.

For the constant potential -2 the normalized-pressure root is
``log 2 - 2`` in the limit, and there the level weights are exactly
``2^-(n+1)``: the Gibbs measure is the induced Lebesgue measure, which
sits on the boundary of convergence.  That is why the refined preset's
equilibrium is refused without ``--force`` and why its weights are close
to the normalized lengths.
"""
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from thermoscheme.scheme import build_doubling_scheme
from thermoscheme.thermo import check_liftability, check_P, constant, equilibrium, induce

sch = build_doubling_scheme("refined", 5)
print("level  tau  pieces  length")
for lv, row in enumerate(sch.level_table()):
    print(f"{lv:5d} {row['tau']:4d} {row['count']:7d}  {row['length']:.5f}")

v = check_liftability(sch)
print(f"\nlength density: {v.verdict}; per-level contributions "
      f"{np.round(v.contributions, 4)}")

rep = check_P(sch, induce(sch, constant(-2.0)))
print(f"\nphi = -2: P2 sum {rep.p2_sum:.6f} (passes {rep.p2_pass}), "
      f"P_L {rep.P_L:.9f}, P3 margin eps0 {rep.p3_eps0}")

for depth in (5, 12, 30):
    m = np.arange(depth + 1)
    t = 2.0 ** m + m + 1
    root = brentq(lambda c: logsumexp(2.0 ** m * math.log(2) + (-2 - c) * t), -3, 0)
    print(f"closed-form root with levels 0..{depth:2d}: {root:.12f}")
print(f"limit log 2 - 2 = {math.log(2) - 2:.12f}")

tw = equilibrium(sch, constant(-2.0), force=True)
leb = sch.lengths / sch.lengths.sum()
levels = np.unique(sch.taus)
by_level = [(tw.symbol_mass[sch.taus == t].sum(), leb[sch.taus == t].sum()) for t in levels]
print("\nforced equilibrium, mass per level against normalized length per level")
for t, (a, b) in zip(levels, by_level):
    print(f"tau {t:3d}: {a:.6f}  {b:.6f}")
print(f"total-variation distance {0.5 * np.abs(tw.symbol_mass - leb).sum():.5f}")
