"""Doubling map end to end: scheme, pressure curve, equilibrium, sampling, statistics.

Every number printed here has a closed form: the first-return scheme on
``(2^-(n+1), 2^-n]`` with ``tau = n + 1`` turns ``phi_t`` into a constant
per element, so ``P_t = (1 - t) log 2`` and the equilibrium lift is
Lebesgue measure for every ``t``.
"""
import math

import numpy as np

from thermoscheme.acceptance import lebesgue_orbit
from thermoscheme.scheme import build_doubling_scheme, verify_scheme
from thermoscheme.stats import OBSERVABLES, clt_test, correlation_fit, lyapunov, sample_lift
from thermoscheme.thermo import equilibrium, phi_t, pressure_curve, verify_abramov_kac

LOG2 = math.log(2)

sch = build_doubling_scheme("plain", 59)
rep = verify_scheme(sch)
print(f"{len(sch)} elements, lambda1 = {rep.lambda1:.6f}, lambda3 = {rep.lambda3:.6f}, "
      f"gamma = {rep.gamma}")

curve = pressure_curve(sch, [-0.5, 0.0, 0.5, 1.0, 1.5], scheme_report=rep)
print("\n   t        P_t     (1-t)log2      Q")
for s in curve.samples:
    print(f"{s.t:5.2f} {s.P:10.6f} {(1 - s.t) * LOG2:10.6f} {s.Q:8.4f}")
print(f"monotone {curve.monotone}, convex {curve.convex}, lower bounds {curve.lower_bounds}")

tw = equilibrium(sch, phi_t(1.0), scheme_report=rep)
print(f"\nnu(I_0..I_3) = {np.round(tw.symbol_mass[:4], 6)}  (2^-(n+1))")
ak = verify_abramov_kac(tw, phi_t(1.0))
print(f"h_nu(F) = {ak.h_nu:.6f} = Q h(f) = {ak.Q:.1f} x {ak.h_lift:.6f}")

pts = sample_lift(tw, 100_000, seed=0).points
print(f"\nsample mean {pts.mean():.4f}, mass of (1/2,1] {(pts > 0.5).mean():.4f}")
print(f"Lyapunov exponent {lyapunov(pts[:5000], sch.fmap, orbit_len=20).value:.6f}"
      f" (log 2 = {LOG2:.6f})")

fit = correlation_fit(lebesgue_orbit(200_000, 0, 1), OBSERVABLES["x"], OBSERVABLES["x"], 12)
print(f"\ncorrelations of x decay at rate {fit.theta:.4f} (exact 1/2)")
clt = clt_test(lebesgue_orbit(4000, 0, 2), OBSERVABLES["x-1/2"], 2 ** 12, mean=0.0)
print(f"CLT for x - 1/2: gamma {clt.gamma:.4f} (exact 1/2), KS distance {clt.ks_distance:.4f}")
