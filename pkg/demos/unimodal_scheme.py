"""Quadratic map at a = 1.999: scheme constants, t range and the pressure curve.

The scheme is built from the regular intervals around the fixed point
``alpha``; elements are branches of first entry returning onto
``(-|alpha|, |alpha|)``.  ``P_1`` is slightly negative at any finite
truncation because uncovered mass is lost; it shrinks as the truncation
grows.
"""
import math

from thermoscheme.maps import quadratic_map
from thermoscheme.scheme import build_unimodal_scheme, compute_N0, verify_scheme
from thermoscheme.thermo import (check_liftability, compute_PL, equilibrium, induce,
                                 lyapunov_kac, phi_t, pressure_curve, t_bounds)

um = quadratic_map(1.999)
print(f"alpha {um.alpha:.9f}, N0 {compute_N0(um)}")

sch = build_unimodal_scheme(um, 12)
rep = verify_scheme(sch)
print(f"{len(sch)} elements, covered length {sch.lengths.sum() / sch.W.length:.5f} of W")
print(f"lambda1 {rep.lambda1:.4f}, lambda3 {rep.lambda3:.4f}, gamma {rep.gamma:.4f}, "
      f"H1 defect {rep.h1_max_defect:.2e}")
tb = t_bounds(rep.lambda1, rep.lambda3, rep.gamma)
print(f"t range ({tb.t0:.3f}, {tb.t1:.3f}), case {tb.case}")

for tau_max in (10, 12, 14):
    s = build_unimodal_scheme(um, tau_max)
    print(f"truncation tau <= {tau_max}: P_1 = {compute_PL(s, induce(s, phi_t(1.0))):+.5f}")

curve = pressure_curve(sch, [0.0, 0.5, 1.0, 1.5, 2.0], scheme_report=rep)
print("\n   t        P_t        Q")
for s in curve.samples:
    print(f"{s.t:5.2f} {s.P:10.6f} {s.Q:8.4f}")
print(f"monotone {curve.monotone}, convex {curve.convex}, "
      f"largest lower-bound deficit {curve.bound_deficit:.2e}")

tw = equilibrium(sch, phi_t(1.0), scheme_report=rep)
lam = lyapunov_kac(tw)
print(f"\nLyapunov exponent of the t=1 measure {lam:.4f} in "
      f"[{math.log(rep.lambda1):.4f}, {math.log(rep.lambda3):.4f}]")
print(f"length density on this scheme: {check_liftability(sch).verdict}")
