"""Command-line front end.

Subcommands::

    hitspec generate     CONFIG      stream file + sidecar metadata
    hitspec spectrum     CONFIG      exact.csv, estimated.csv, rate.csv, summary.json
    hitspec fluctuations CONFIG      clt/sa_bounds/lil/fit CSVs, summary.json
    hitspec mp           CONFIG      growth.csv, summary.json
    hitspec selftest                 acceptance suite with a pass/fail table

Exit codes: 0 success, 1 failed acceptance criteria (selftest), 2 invalid
configuration, 3 reliability warning (outputs still written), 4 degenerate
source (zero asymptotic variance).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import io, thermo
from .config import ConfigError, RunConfig, load_config
from .estimators import (DegenerateSource, EstimationPlan, clt_check, exp_law_fit, kac_check, lil_trace,
                         mp_divergence_check, sa_bound_check, sample_recurrence, spectrum_estimate_R,
                         spectrum_estimate_W)
from .sources import MarkovSpec, MPParams, SourceSpec, sample_stream

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_WARNING, EXIT_DEGENERATE = 0, 1, 2, 3, 4

log = logging.getLogger("hitspec")


def _prepare(cfg: RunConfig, command: str) -> Path:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.resolved.yaml")
    io.write_meta(out, command)
    return out


def _markov(cfg: RunConfig, command: str) -> MarkovSpec:
    if not isinstance(cfg.source.model, MarkovSpec):
        raise ConfigError(f"{command} needs a Markov source")
    return cfg.source.model


def cmd_generate(cfg: RunConfig, quiet: bool = False) -> int:
    """Write ``length`` symbols as ASCII digits plus ``stream.json``."""
    length = cfg.section("generate")["length"]
    if cfg.source.alphabet > 10:
        raise ConfigError("stream files hold one digit per symbol (alphabet <= 10)")
    out = _prepare(cfg, "generate")
    cur = sample_stream(cfg.source, 0, length)

    def chunks():
        while cur.remaining:
            yield cur.take(min(1 << 20, cur.remaining))

    n = io.write_stream(out / "stream.txt", chunks())
    io.write_json(out / "stream.json", {"source": cfg.source.to_dict(), "seed": cfg.seed, "length": n,
                                        "format": "one ASCII digit per symbol, no separators"})
    if not quiet:
        print(f"wrote {n} symbols to {out / 'stream.txt'}")
    return EXIT_OK


def _q_grid(block: dict) -> np.ndarray:
    return thermo.default_q_grid() if block["q_grid"] is None else np.asarray(block["q_grid"], dtype=float)


def cmd_spectrum(cfg: RunConfig, log2: bool = False, workers: Optional[int] = None, quiet: bool = False) -> int:
    m = _markov(cfg, "spectrum")
    block = cfg.section("spectrum")
    qs = _q_grid(block)
    out = _prepare(cfg, "spectrum")
    exact = [thermo.exact_curve(m, kind, qs) for kind in ("exact-M", "exact-W", "exact-Rhat")]
    io.write_csv(out / "exact.csv", io.SPECTRUM_COLUMNS, io.spectrum_rows(exact, log2))

    plan = EstimationPlan(cfg.source, tuple(block["n_grid"]), tuple(qs), block["n_samples"], block["budget"],
                          sampler=block["sampler"], workers=workers or block["workers"])
    kinds = ("w", "r", "r_hat") if block["return_spectra"] else ("w",)
    batches = {n: sample_recurrence(plan, n, kinds=kinds) for n in plan.n_grid}
    curves = [spectrum_estimate_W(plan, batches)]
    labels = ["estimated-W"]
    if block["return_spectra"]:
        curves += [spectrum_estimate_R(plan, "overlapping", batches),
                   spectrum_estimate_R(plan, "non-overlapping", batches)]
        labels += ["estimated-R", "estimated-Rhat"]
    for c, lab in zip(curves, labels):
        c.kind = lab
    io.write_csv(out / "estimated.csv", io.SPECTRUM_COLUMNS, io.spectrum_rows(curves, log2))

    rate_rows = []
    if asymptotic_ok(m):
        u0 = thermo.u0_bound(m)
        scale = 1.0 / io.LN2 if log2 else 1.0
        below = thermo.rate_function(m, "below", np.linspace(0.0, 0.95 * u0, 20))
        above = thermo.rate_function(m, "above", np.linspace(0.0, 0.5, 21))
        for rf in (below, above):
            rate_rows += [(u * scale, v, k, s) for u, v, k, s in rf.rows()]
    io.write_csv(out / "rate.csv", io.RATE_COLUMNS, rate_rows)

    warnings = []
    for c, lab in zip(curves, labels):
        for n, frac in c.meta["censored_fraction"].items():
            if frac > 0.10:
                warnings.append(f"{lab}: {frac:.1%} censored at n={n}")
    W_exact = exact[1]
    summary = {
        "q": qs.tolist(),
        "W_exact": W_exact.values.tolist(),
        "W_estimated": curves[0].values.tolist(),
        "W_stderr": curves[0].stderr.tolist(),
        "max_abs_dev_W": float(np.max(np.abs(curves[0].values - W_exact.values))),
        "censored_fraction": curves[0].meta["censored_fraction"],
        "warnings": warnings,
        "units": "bits" if log2 else "nats",
    }
    io.write_json(out / "summary.json", summary)
    if not quiet:
        print(f"spectrum written to {out}")
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
    return EXIT_WARNING if warnings else EXIT_OK


def asymptotic_ok(m: MarkovSpec) -> bool:
    return thermo.asymptotic_variance(m) > 1e-12


def cmd_fluctuations(cfg: RunConfig, workers: Optional[int] = None, quiet: bool = False) -> int:
    m = _markov(cfg, "fluctuations")
    fl = cfg.section("fluctuations")
    tol = fl["tolerances"]
    if not asymptotic_ok(m):
        raise DegenerateSource("zero asymptotic variance: the CLT and LIL normalizations are undefined "
                               "(measure of maximal entropy)")
    out = _prepare(cfg, "fluctuations")
    w = workers or fl["workers"]
    src = cfg.source
    plan = EstimationPlan(src, (fl["n"],), (0.0,), fl["n_samples"], fl["budget"], sampler=fl["sampler"], workers=w)
    clt = clt_check(plan)
    io.write_csv(out / "clt.csv", ("index", "z"), enumerate(clt.z.tolist()))

    sa_plan = EstimationPlan(src, tuple(fl["sa_n_grid"]), (0.0,), fl["sa_samples"], fl["budget"],
                             sampler=fl["sampler"], workers=w)
    sa_batches = {n: sample_recurrence(sa_plan, n, kinds=("w", "r")) for n in sa_plan.n_grid}
    sa = sa_bound_check(sa_plan, float(fl["eps"]), "w", sa_batches)
    sa_r = sa_bound_check(sa_plan, float(fl["eps"]), "r", sa_batches)
    io.write_csv(out / "sa_bounds.csv", ("n", "kind", "lower", "upper", "lower_se", "upper_se"),
                 [(n, rep.kind, lo, up, a, b) for rep in (sa, sa_r)
                  for n, lo, up, a, b in zip(rep.n_grid, rep.lower, rep.upper, rep.lower_se, rep.upper_se)])

    lil = lil_trace(EstimationPlan(src, (fl["lil_n_max"],), (0.0,), 100, 10**6, sampler="exact"))
    io.write_csv(out / "lil.csv", ("n", "value", "running_max"), zip(lil.n, lil.values, lil.running_max))

    kac = kac_check(src, fl["kac_pattern"], fl["kac_returns"])
    exp_pattern = fl["exp_pattern"] or "0" * 11 + "1"
    fit = exp_law_fit(src, exp_pattern, fl["exp_samples"])
    fit_d = fit.as_dict()
    io.write_csv(out / "fit.csv", ("metric", "value"),
                 [("pattern", exp_pattern)] + sorted(fit_d.items())
                 + [("kac_ratio", kac.ratio), ("kac_stderr", kac.stderr), ("zeta_hat", kac.zeta_hat)])

    warnings = []
    if clt.censored_fraction > 0.10:
        warnings.append(f"CLT sample {clt.censored_fraction:.1%} censored")
    if fit.flagged:
        warnings.append(f"exponential fit {fit.censored_fraction:.1%} censored")
    rho_lo, rho_hi = tol["exp_rho"]
    summary = {
        "clt": {**clt.as_dict(), "pass": clt.ks <= tol["clt_ks"] and clt.variance_rel_error <= tol["clt_var_rel"]},
        "sa_bounds": {**sa.as_dict(), "pass": bool(sa.lower[-1] < tol["sa_max"] and sa.upper[-1] < tol["sa_max"])},
        "sa_bounds_r": sa_r.as_dict(),
        "lil": {"max": lil.max, "pass": bool(tol["lil"][0] <= lil.max <= tol["lil"][1])},
        "kac": {"pattern": fl["kac_pattern"], "ratio": kac.ratio, "stderr": kac.stderr, "zeta_hat": kac.zeta_hat,
                "pass": abs(kac.ratio - 1) <= tol["kac"]},
        "exp_fit": {**fit_d, "pattern": exp_pattern,
                    "pass": fit.ks <= tol["exp_ks"] and rho_lo <= fit.rho_hat <= rho_hi},
        "warnings": warnings,
    }
    io.write_json(out / "summary.json", summary)
    if not quiet:
        for key in ("clt", "sa_bounds", "lil", "kac", "exp_fit"):
            print(f"{key:10s} {'PASS' if summary[key]['pass'] else 'FAIL'}")
        for wmsg in warnings:
            print(f"warning: {wmsg}", file=sys.stderr)
    return EXIT_WARNING if warnings else EXIT_OK


def cmd_mp(cfg: RunConfig, quiet: bool = False) -> int:
    if not isinstance(cfg.source.model, MPParams):
        raise ConfigError("mp needs a source with an mp block")
    p = cfg.source.model
    block = cfg.section("mp")
    tol = block["tolerances"]
    out = _prepare(cfg, "mp")
    rows, summary = [], {"alpha": p.alpha, "threshold_1_over_alpha": 1.0 / p.alpha, "variant": block["variant"]}
    for q in block["q"]:
        rep = mp_divergence_check(p, q, block["doublings"], block["budget"], cfg.seed, block["replicates"],
                                  block["variant"])
        for j, (size, mom, g) in enumerate(rep.rows()):
            rows.append((q, j, size, mom, g))
        key = f"q={q:g}"
        summary[key] = {"growth": rep.growth.tolist(), "final_rel_change": rep.final_rel_change,
                        "moments": rep.moments.tolist(),
                        "diverging_branch": q >= 1.0 / p.alpha,
                        "growth_all_above": bool(np.all(rep.growth > tol["growth_min"])),
                        "stable": rep.final_rel_change < tol["stable_max"]}
        summary["tail_exponent"] = rep.tail_exponent
        summary["n_sojourns"] = rep.n_sojourns
    io.write_csv(out / "growth.csv", ("q", "doubling", "size", "moment", "growth"), rows)
    io.write_json(out / "summary.json", summary)
    if not quiet:
        print(f"tail exponent {summary['tail_exponent']:.3f}")
        for q in block["q"]:
            s = summary[f"q={q:g}"]
            print(f"q={q:g}: growth {np.round(s['growth'], 3).tolist()}, final change {s['final_rel_change']:.3%}")
    return EXIT_OK


def cmd_selftest(profile: str = "full", seed: int = 0, outdir: Optional[Path] = None, workers: int = 1,
                 only=None, quiet: bool = False) -> int:
    from .acceptance import PROFILES, run_suite

    prof = PROFILES[profile]
    echo = None if quiet else (lambda s: print(s, flush=True))
    results = run_suite(prof, seed, workers, only=only, echo=echo)
    outdir = Path(outdir or "hitspec-selftest")
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_csv(outdir / "selftest.csv", ("criterion", "key", "value"),
                 [(c, k, _cell(v)) for r in results for c, k, v in r.payload_rows()])
    io.write_json(outdir / "summary.json", {str(r.number): {"title": r.title, "passed": r.passed,
                                                             "measured": r.measured, "tolerance": r.tolerance,
                                                             "note": r.note} for r in results})
    io.write_meta(outdir, "selftest", {"profile": profile, "seed": seed, "workers": workers,
                                       "runtimes": {str(r.number): r.runtime for r in results}})
    passed = sum(r.passed for r in results)
    if not quiet:
        print(f"{passed}/{len(results)} criteria passed ({profile} profile)")
    return EXIT_OK if passed == len(results) else EXIT_FAILED


def _cell(v):
    if isinstance(v, (list, tuple)):
        return " ".join(io.fmt(x) for x in v)
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hitspec", description="Recurrence-time spectra of symbolic sources.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("generate", "write a symbol stream"), ("spectrum", "exact and estimated spectra"),
                           ("fluctuations", "CLT, bounds, LIL trace, exponential law, Kac"),
                           ("mp", "Manneville-Pomeau heavy-tail report")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", help="YAML configuration file")
        sp.add_argument("--output-dir", help="override output_dir")
        sp.add_argument("--seed", type=int, help="override the seed")
        if name in ("spectrum", "fluctuations"):
            sp.add_argument("--workers", type=int, help="sampling processes (results do not depend on it)")
        if name == "spectrum":
            sp.add_argument("--log2", action="store_true", help="report spectra in bits")
    st = sub.add_parser("selftest", help="run the acceptance suite")
    st.add_argument("--profile", choices=("full", "quick"), default="full")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--workers", type=int, default=1)
    st.add_argument("--output-dir", default="hitspec-selftest")
    st.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "selftest":
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            return cmd_selftest(args.profile, args.seed, Path(args.output_dir), args.workers, args.only)
        overrides = {}
        if args.output_dir:
            overrides["output_dir"] = args.output_dir
        if args.seed is not None:
            overrides["seed"] = args.seed
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.config, overrides)
        if args.seed is not None and isinstance(cfg.raw["source"], dict) and "seed" in cfg.raw["source"]:
            cfg = load_config(args.config, {**overrides, "source": {"seed": args.seed}})
        if args.output_dir:
            # the flag takes precedence over the environment override
            cfg.output_dir = Path(args.output_dir)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.log2, args.workers)
        if args.command == "fluctuations":
            return cmd_fluctuations(cfg, args.workers)
        return cmd_mp(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateSource as e:
        print(f"degenerate source: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
