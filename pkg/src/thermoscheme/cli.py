"""``thermoscheme`` command line.

Exit status: 0 success, 2 configuration error, 3 a numerical condition
failed (the message names it), 4 an acceptance check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance
from .config import ConfigError, RunConfig, make_config
from .errors import AllNoise, ThermoError
from .scheme import scheme_from_json, scheme_to_json, verify_scheme
from .shift import (gibbs_constants, gibbs_weights, gurevich_pressure_operator,
                    gurevich_pressure_orbits, measure_from_csv, measure_to_csv)
from .stats import (OBSERVABLES, clt_test, correlation_fit, lyapunov, orbit_stepper,
                    sample_lift, substream)
from .thermo import (TowerMeasure, check_liftability, equilibrium, induce, lift,
                     pressure_curve, t_bounds, verify_abramov_kac)

log = logging.getLogger("thermoscheme")

EXIT_CONFIG, EXIT_CONDITION, EXIT_ACCEPTANCE = 2, 3, 4


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ output

class Output:
    """Writes files into the run directory, each stamped with the config hash."""

    def __init__(self, cfg: RunConfig, scheme=None):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.meta = dict(scheme.meta) if scheme is not None else {}

    def _header(self) -> list[str]:
        return [f"# config_hash={self.cfg.hash}",
                "# scheme_meta=" + json.dumps(self.meta, sort_keys=True)]

    def csv(self, name: str, columns: list[str], rows) -> Path:
        lines = self._header() + [",".join(columns)]
        lines += [",".join(_cell(v) for v in row) for row in rows]
        return self._write(name, "\n".join(lines) + "\n")

    def json(self, name: str, doc: dict) -> Path:
        body = {"config_hash": self.cfg.hash, "scheme_meta": self.meta, **doc}
        return self._write(name, json.dumps(_clean(body), indent=1, sort_keys=True) + "\n")

    def text(self, name: str, text: str) -> Path:
        return self._write(name, text)

    def _write(self, name: str, text: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        path.write_text(text)
        log.info("wrote %s", path)
        return path


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


# ----------------------------------------------------------------- helpers

def _config(args) -> RunConfig:
    text = None
    if args.config:
        p = Path(args.config)
        if not p.exists():
            raise UsageError(f"config file {p} does not exist")
        text = p.read_text()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    overrides.update({k: getattr(args, k) for k in
                      ("t", "seed", "out", "threads", "depth") if getattr(args, k, None)
                      is not None})
    if getattr(args, "trunc", None) is not None:
        overrides["truncation"] = args.trunc
    return make_config(args.preset, text, overrides)


def _scheme(args, cfg: RunConfig):
    if getattr(args, "scheme", None):
        p = Path(args.scheme)
        if not p.exists():
            raise UsageError(f"scheme file {p} does not exist")
        return scheme_from_json(p.read_text())
    return cfg.build_scheme()


def _tower(args, cfg, scheme) -> TowerMeasure:
    if getattr(args, "measure", None):
        p = Path(args.measure)
        if not p.exists():
            raise UsageError(f"measure file {p} does not exist")
        text = "\n".join(ln for ln in p.read_text().splitlines()
                         if not ln.startswith("# config_hash") and
                         not ln.startswith("# scheme_meta"))
        return lift(measure_from_csv(text), scheme)
    return equilibrium(scheme, cfg.potential_spec(), depth=cfg.depth,
                       audit_depth=cfg.audit_depth, force=getattr(args, "force", False))


# ---------------------------------------------------------------- commands

def cmd_scheme_build(args, cfg):
    sch = _scheme(args, cfg)
    doc = json.loads(scheme_to_json(sch))
    Output(cfg, sch).json("scheme.json", doc)
    print(f"{len(sch)} elements, tau in [{sch.taus.min()}, {sch.taus.max()}]")
    return 0


def cmd_scheme_verify(args, cfg):
    sch = _scheme(args, cfg)
    rep = verify_scheme(sch, seed=cfg.seed)
    doc = rep.summary()
    doc["S_counts"] = rep.S_counts
    doc["distortion"] = rep.distortion
    Output(cfg, sch).json("scheme_report.json", doc)
    for name, ok in (("H1", rep.h1_pass), ("H2", rep.h2_pass), ("H4", rep.h4_pass),
                     ("H5", rep.h5_pass)):
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    failed = [n for n, ok in (("H1", rep.h1_pass), ("H2", rep.h2_pass),
                              ("H4", rep.h4_pass), ("H5", rep.h5_pass)) if not ok]
    if failed:
        raise ThermoError(f"scheme condition {failed[0]} fails", condition=failed[0])
    return 0


def cmd_shift_pressure(args, cfg):
    sch = _scheme(args, cfg)
    pot = induce(sch, cfg.potential_spec()).to_shift(args.trunc_alphabet)
    op = gurevich_pressure_operator(pot, cfg.depth)
    n_max = args.n_max
    if pot.memory is None:
        n_max = min(n_max, max(1, int(math.log(20_000) / math.log(pot.alphabet_size))))
    orbits = gurevich_pressure_orbits(pot, n_max, base_symbol=None)
    Output(cfg, sch).json("pressure.json", {
        "operator": op, "depth": cfg.depth, "alphabet": pot.alphabet_size,
        "leakage": pot.leakage, "orbits": [[n, v] for n, v in orbits]})
    print(f"P_G operator {float(op)!r}; orbit n={orbits[-1][0]} {float(orbits[-1][1])!r}")
    return 0


def cmd_shift_gibbs(args, cfg):
    sch = _scheme(args, cfg)
    pot = induce(sch, cfg.potential_spec()).to_shift(args.trunc_alphabet)
    m = gibbs_weights(pot, cfg.depth)
    gibbs_constants(m, pot, cfg.audit_depth, max_words=2000, seed=cfg.seed)
    out = Output(cfg, sch)
    out.text("gibbs.csv", "\n".join(out._header()) + "\n" +
             measure_to_csv(m, {"config_hash": cfg.hash}))
    print(f"P_G {float(m.P_G)!r}; C1 {float(m.C1)!r}; C2 {float(m.C2)!r}")
    return 0


def cmd_pressure_curve(args, cfg):
    sch = _scheme(args, cfg)
    rep = verify_scheme(sch, seed=cfg.seed)
    ts = np.linspace(args.t_min, args.t_max, args.steps)
    curve = pressure_curve(sch, [float(t) for t in ts], rep, depth=cfg.depth,
                           threads=cfg.threads)
    Output(cfg, sch).csv("pressure_curve.csv",
                         ["t", "P_t", "Q_t", "C1", "C2", "leakage", "p4_theta"], curve.rows())
    for s in curve.samples:
        print(f"t={s.t:+.4f} P_t={s.P:.10f} Q_t={s.Q:.6f}" + ("" if s.ok else f" ({s.message})"))
    print(f"monotone {curve.monotone}; convex {curve.convex}; lower bounds "
          f"{curve.lower_bounds} (largest deficit {curve.bound_deficit:.3g})")
    return 0


def cmd_equilibrium(args, cfg):
    sch = _scheme(args, cfg)
    spec = cfg.potential_spec()
    rep = verify_scheme(sch, seed=cfg.seed)
    if spec.kind == "phi_t" and not args.force:
        tb = t_bounds(rep.lambda1, max(rep.lambda3, rep.lambda1), rep.gamma)
        if not tb.contains(spec.t):
            raise ThermoError(f"t={spec.t} outside the t_bounds range ({tb.t0:.6g}, "
                              f"{tb.t1:.6g}); (P3) not guaranteed, use --force to run anyway",
                              condition="P3")
    tw = equilibrium(sch, spec, depth=cfg.depth, audit_depth=cfg.audit_depth,
                     scheme_report=rep, force=args.force)
    out = Output(cfg, sch)
    out.text("measure.csv", "\n".join(out._header()) + "\n" +
             measure_to_csv(tw.nu, {"config_hash": cfg.hash}))
    out.csv("tower.csv", ["symbol", "k", "mass"], tw.level_rows())
    r = tw.report
    out.json("equilibrium.json", {"P_L": tw.P, "Q": tw.Q, "p3_eps0": r.p3_eps0,
                                  "p4_K": r.p4_K, "p4_theta": r.p4_theta, **tw.diagnostics})
    d = tw.diagnostics
    print(f"P_L {float(tw.P)!r}; Q {float(tw.Q)!r}; C1 {float(d['C1'])!r}; C2 {float(d['C2'])!r}")
    return 0


def cmd_liftability(args, cfg):
    sch = _scheme(args, cfg)
    dens = args.density
    if dens.startswith("point:"):
        dens = int(dens.split(":", 1)[1])
    elif dens != "length":
        raise UsageError("--density must be 'length' or 'point:<symbol>'")
    v = check_liftability(sch, dens)
    Output(cfg, sch).json("liftability.json", v.__dict__)
    print(f"verdict: {v.verdict}")
    for n, c, s in zip(v.levels, v.contributions, v.partial_sums):
        print(f"tau={n:4d} contribution={c:.6f} partial={s:.6f}")
    return 0


def cmd_abramov_kac(args, cfg):
    sch = _scheme(args, cfg)
    tw = _tower(args, cfg, sch)
    ak = verify_abramov_kac(tw, cfg.potential_spec())
    Output(cfg, sch).json("abramov_kac.json", ak.__dict__)
    ab = "unavailable" if ak.abramov_residual is None else repr(float(ak.abramov_residual))
    print(f"Abramov residual {ab}; Kac residual {float(ak.kac_residual)!r}")
    return 0


def cmd_sample(args, cfg):
    sch = _scheme(args, cfg)
    tw = _tower(args, cfg, sch)
    s = sample_lift(tw, args.n, seed=cfg.seed, depth=cfg.sample_depth, mode=args.mode)
    Output(cfg, sch).csv("samples.csv", ["x"], ((x,) for x in s.points))
    print(f"{len(s)} samples, mean {s.points.mean():.6f}")
    return 0


def cmd_lyapunov(args, cfg):
    sch = _scheme(args, cfg)
    tw = _tower(args, cfg, sch)
    rep = verify_scheme(sch, seed=cfg.seed)
    s = sample_lift(tw, args.n, seed=cfg.seed, depth=cfg.sample_depth, mode=args.mode)
    br = (math.log(rep.lambda1), math.log(max(rep.lambda3, rep.lambda1)))
    est = lyapunov(s, sch.fmap, orbit_len=args.orbit_len, seed=cfg.seed, bracket=br)
    Output(cfg, sch).json("lyapunov.json", est.__dict__)
    print(f"lyapunov {est.value:.8f} +- {est.stderr:.2e}; bracket [{br[0]:.6f}, {br[1]:.6f}] "
          f"{'holds' if est.in_bracket else 'VIOLATED'}")
    return 0


def _orbit(args, cfg, sch, n, stream):
    tw = _tower(args, cfg, sch)
    s = sample_lift(tw, n, seed=cfg.seed ^ stream, depth=cfg.sample_depth, mode=args.mode)
    return orbit_stepper(sch.fmap, s.points, substream(cfg.seed, stream))


def _observable(name):
    if name not in OBSERVABLES:
        raise UsageError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLES)}")
    return OBSERVABLES[name]


def cmd_correlations(args, cfg):
    sch = _scheme(args, cfg)
    h1, h2 = _observable(args.observable), _observable(args.observable2 or args.observable)
    out = Output(cfg, sch)
    try:
        fit = correlation_fit(_orbit(args, cfg, sch, args.n, 11), h1, h2, args.lag_max)
        verdict = {"K": fit.K, "theta": fit.theta, "fit_lags": fit.fit_lags,
                   "residual": fit.residual, "all_noise": False}
    except AllNoise as exc:
        fit = exc.fit
        verdict = {"all_noise": True}
    out.csv("correlations.csv", ["lag", "C", "stderr"], zip(fit.lags, fit.corr, fit.stderr))
    out.json("correlation_fit.json", verdict)
    print("no lag above noise" if verdict["all_noise"] else f"theta {fit.theta:.6f}")
    return 0


def cmd_clt(args, cfg):
    sch = _scheme(args, cfg)
    rep = clt_test(_orbit(args, cfg, sch, args.blocks, 21), _observable(args.observable),
                   args.block, mean=args.mean)
    Output(cfg, sch).json("clt.json", rep.__dict__)
    print(f"gamma {rep.gamma:.6f}; KS {rep.ks_distance:.6f}")
    return 0


def cmd_verify_all(args, cfg):
    ids = None
    if args.criteria:
        try:
            ids = {int(s) for s in args.criteria.split(",")}
        except ValueError:
            raise UsageError("--criteria expects comma-separated integers") from None
    chosen = acceptance.select(args.preset, ids)
    t0 = time.time()
    results = acceptance.run(chosen, seed=cfg.seed, threads=cfg.threads)
    log.info("acceptance suite took %.1f s", time.time() - t0)
    Output(cfg).csv("acceptance.csv", ["id", "criterion", "status", "summary"],
                    ((r.id, r.name, "PASS" if r.passed else "FAIL",
                      '"' + r.summary.replace('"', "'") + '"') for r in results))
    for r in results:
        print(r.line())
    failed = [r.id for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    return EXIT_ACCEPTANCE if failed else 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help="doubling-plain | doubling-refined | "
                        "unimodal-a2eps | first-return-doubling")
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key")
    common.add_argument("--scheme", help="scheme JSON written by 'scheme build'")
    common.add_argument("--measure", help="measure CSV written by 'thermo equilibrium'")
    common.add_argument("--t", type=float)
    common.add_argument("--trunc", type=int, help="scheme truncation")
    common.add_argument("--depth", type=int, help="cylinder depth of the operator")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker cap; outputs do not depend on it")
    common.add_argument("--force", action="store_true",
                        help="run equilibria even where conditions fail")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="thermoscheme",
                                description="Thermodynamic formalism via inducing schemes.")
    sub = p.add_subparsers(dest="group", required=True)

    def group(name, help_):
        g = sub.add_parser(name, help=help_)
        return g.add_subparsers(dest="action", required=True)

    sch = group("scheme", "build or verify an inducing scheme")
    sch.add_parser("build", parents=[common]).set_defaults(func=cmd_scheme_build)
    sch.add_parser("verify", parents=[common]).set_defaults(func=cmd_scheme_verify)

    sh = group("shift", "symbolic pressure and Gibbs weights")
    for name, fn in (("pressure", cmd_shift_pressure), ("gibbs", cmd_shift_gibbs)):
        q = sh.add_parser(name, parents=[common])
        q.add_argument("--trunc-alphabet", type=int, default=None,
                       help="keep only the first K elements")
        q.add_argument("--n-max", type=int, default=12)
        q.set_defaults(func=fn)

    th = group("thermo", "liftable pressure and equilibrium measures")
    q = th.add_parser("pressure-curve", parents=[common])
    q.add_argument("--t-min", type=float, default=-0.5)
    q.add_argument("--t-max", type=float, default=1.5)
    q.add_argument("--steps", type=int, default=5)
    q.set_defaults(func=cmd_pressure_curve)
    th.add_parser("equilibrium", parents=[common]).set_defaults(func=cmd_equilibrium)
    q = th.add_parser("liftability", parents=[common])
    q.add_argument("--density", default="length", help="length | point:<symbol>")
    q.set_defaults(func=cmd_liftability)
    th.add_parser("abramov-kac", parents=[common]).set_defaults(func=cmd_abramov_kac)

    st = group("stats", "sampling and ergodic statistics")
    for name, fn, n in (("sample", cmd_sample, 10_000), ("lyapunov", cmd_lyapunov, 10_000),
                        ("correlations", cmd_correlations, 100_000), ("clt", cmd_clt, None)):
        q = st.add_parser(name, parents=[common])
        # periodic representatives repeat their word and bias lagged statistics
        q.add_argument("--mode", choices=["representative", "uniform"],
                       default="uniform" if name in ("correlations", "clt")
                       else "representative")
        if n is not None:
            q.add_argument("--n", type=int, default=n)
        q.set_defaults(func=fn)
        if name == "lyapunov":
            q.add_argument("--orbit-len", type=int, default=1)
        if name in ("correlations", "clt"):
            q.add_argument("--observable", default="x" if name == "correlations" else "x-1/2")
        if name == "correlations":
            q.add_argument("--observable2")
            q.add_argument("--lag-max", type=int, default=20)
        if name == "clt":
            q.add_argument("--block", type=int, default=2 ** 14)
            q.add_argument("--blocks", type=int, default=10_000)
            q.add_argument("--mean", type=float, default=None)

    va = sub.add_parser("verify-all", parents=[common],
                        help="run the acceptance suite and print a pass/fail table")
    va.add_argument("--criteria", help="comma-separated criterion numbers")
    va.set_defaults(func=cmd_verify_all)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ThermoError as exc:
        cond = exc.condition or type(exc).__name__
        print(f"numerical condition failed ({cond}): {exc}", file=sys.stderr)
        return EXIT_CONDITION


if __name__ == "__main__":
    sys.exit(main())
