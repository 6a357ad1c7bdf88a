"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 estimability (including
separation), 4 convergence failure.  Data go to CSV files in the output
directory (``--out``, else ``$IPDAD_OUT``, else ``./ipdad_out``) together
with a ``manifest.json``; stdout carries a short human summary.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, sim
from .core import (
    BINARY,
    CONTINUOUS,
    ConvergenceError,
    EstimabilityError,
    InputError,
    Partition,
    StudyCollection,
    load_ad,
    load_ipd,
    summarize_ipd,
    write_ad,
)
from .glmm import (
    STRUCTURES,
    combined_estimate_glmm,
    fit_study_logistic,
    logistic_variance_combined,
    selection_weights_logistic,
)
from .lmm import (
    VarianceComponents,
    combined_estimate_lmm,
    estimate_sigma_alpha,
    estimate_sigma_j,
    pooled_sigma,
    variance_combined,
    variance_ipd_ma,
)
from .selection import EnumerationCapError, SelectionInstance, brute_force_worst, select, selection_weights_lmm

OUT_ENV = "IPDAD_OUT"
EXIT_INPUT, EXIT_ESTIMABILITY, EXIT_CONVERGENCE = 2, 3, 4
_BOOL_KEYS = {"pooled_sigma"}


# -- inputs -------------------------------------------------------------------

def _kind(args) -> str:
    return BINARY if args.model == "logistic" else CONTINUOUS


def load_inputs(args) -> StudyCollection:
    """IPD and AD files merged; a study in both is taken as IPD and keeps its
    place in the AD file's order."""
    if not args.ipd and not args.ad:
        raise InputError("no input: pass --ipd and/or --ad")
    kind = _kind(args)
    ipd = load_ipd(args.ipd, kind) if args.ipd else StudyCollection(outcome_kind=kind)
    ad = load_ad(args.ad, kind) if args.ad else StudyCollection(outcome_kind=kind)
    order = list(ad.order) + [s for s in ipd.order if s not in ad.ad]
    ads = {s: a for s, a in ad.ad.items() if s not in ipd.ipd}
    return StudyCollection(ipd.ipd, ads, kind, tuple(order))


def _ad_all(coll: StudyCollection, continuity: float) -> list:
    if coll.outcome_kind == CONTINUOUS:
        return coll.all_ad()
    out = []
    for s in coll.order:
        if s in coll.ad:
            out.append(coll.ad[s])
        else:
            st = coll.ipd[s]
            ct, cc, nt, nc = st.arm_counts()
            out.append(fit_study_logistic(st, continuity).to_ad(nt, nc, (ct, cc)))
    return out


def _sigma_sq(args, coll: StudyCollection, ads) -> float | np.ndarray:
    if args.pooled_sigma:
        s2, p = pooled_sigma(ads)
        print(f"pooled sigma^2 = {s2:.6g} (Bartlett homogeneity p = {p:.4g})")
        return s2
    return np.array([estimate_sigma_j(a) for a in ads])


def resolve_sigma_alpha(args, coll: StudyCollection, needed: bool = True) -> float | None:
    """``--sigma-alpha`` if given, else an estimate from the ``--pilot``
    studies, else an input error when the value is needed."""
    if args.sigma_alpha is not None:
        if args.sigma_alpha < 0:
            raise InputError("--sigma-alpha must be nonnegative")
        return args.sigma_alpha
    if args.pilot:
        ids = [s.strip() for s in args.pilot.split(",") if s.strip()]
        missing = [s for s in ids if s not in coll.ipd]
        if missing:
            raise InputError(f"pilot studies without IPD: {missing}")
        sa = estimate_sigma_alpha([coll.ipd[s] for s in ids], coll.outcome_kind,
                                  pooled=args.pooled_sigma, continuity=args.continuity)
        print(f"sigma_alpha^2 estimated from {len(ids)} pilot studies: {sa:.6g}")
        return sa
    if needed:
        raise InputError("sigma_alpha^2 is needed: pass --sigma-alpha or --pilot")
    return None


def _scenario_design(args):
    config, kind = sim.SCENARIOS[args.scenario]()
    if kind != "curve":
        raise InputError(f"scenario {args.scenario!r} has no fixed design; use table1 or table2")
    n = np.full(config.k, float(config.n))
    pi = sim.arm_counts(config.n, config.pi) / config.n
    sa = args.sigma_alpha if args.sigma_alpha is not None else config.sigma_alpha_sq
    return n, pi, VarianceComponents(sa, config.sigma_sq), [str(j + 1) for j in range(config.k)]


def _k1_values(spec: str | None, k: int, default) -> list[int]:
    if spec is None:
        if default is None:
            raise InputError("--k1 is required")
        return list(default)
    spec = str(spec)
    if ":" in spec:
        lo, hi = spec.split(":")
        vals = list(range(int(lo or 0), int(hi or k) + 1))
    else:
        vals = [int(x) for x in spec.split(",")]
    bad = [v for v in vals if not 0 <= v <= k]
    if bad:
        raise InputError(f"k1 values {bad} outside 0..{k}")
    return vals


class _Design:
    """Selection weights and a variance function for one input set."""

    def __init__(self, args):
        if args.scenario:
            n, pi, vc, self.ids = _scenario_design(args)
            u, v = selection_weights_lmm(n, pi, vc)
            self.variance = lambda s1: variance_combined(n, pi, vc, s1)
        else:
            coll = load_inputs(args)
            self.ids = list(coll.order)
            ads = _ad_all(coll, args.continuity)
            sa = resolve_sigma_alpha(args, coll)
            if coll.outcome_kind == CONTINUOUS:
                n, pi = coll.n_pi()
                vc = VarianceComponents(sa, _sigma_sq(args, coll, ads))
                u, v = selection_weights_lmm(n, pi, vc)
                self.variance = lambda s1: variance_combined(n, pi, vc, s1)
            else:
                mode = args.weights or ("two_by_two" if all(a.has_cases for a in ads) else "rare_disease")
                terms = selection_weights_logistic(ads, sa, mode)
                u, v = terms.u, terms.v
                self.variance = lambda s1: logistic_variance_combined(terms, s1)
        self.u, self.v = u, v
        self.k = len(u)
        self.v_ipd = self.variance(range(self.k))


# -- commands -------------------------------------------------------------------

def _row_lmm(name, est_beta, var, re):
    return {"method": name, "beta_hat": est_beta, "se": math.sqrt(var), "variance": var, "re": re}


def cmd_estimate(args) -> list[dict]:
    coll = load_inputs(args)
    s1 = [s for s in coll.order if s in coll.ipd]
    part = Partition.from_ipd(coll.order, s1)
    if args.model == "logistic":
        return _estimate_logistic(args, coll, part)
    ads = coll.all_ad()
    vc_s2 = _sigma_sq(args, coll, ads)
    sa = resolve_sigma_alpha(args, coll, needed=part.k1 > 0)
    n, pi = coll.n_pi()
    idx = [i for i, s in enumerate(coll.order) if s in part.s1]
    b = np.array([a.beta_hat for a in ads])
    w = 1 / np.array([a.var_hat for a in ads])
    ad_beta, ad_var = float(np.sum(w * b) / w.sum()), float(1 / w.sum())
    vc = VarianceComponents(sa, vc_s2) if sa is not None else None

    def re(s1):
        return variance_ipd_ma(n, pi, vc) / variance_combined(n, pi, vc, s1) if vc else None

    if part.k1 == 0:
        warnings.warn("alpha is not estimable without IPD; reporting AD-MA only", stacklevel=2)
        return [_row_lmm("ad_ma", ad_beta, ad_var, re([]))]
    est = combined_estimate_lmm(coll, part, vc)
    name = "ipd_ma" if part.k2 == 0 else "ipd_ad_ma"
    return [_row_lmm(name, est.beta_hat, est.variance_beta, re(idx)),
            _row_lmm("ad_ma", ad_beta, ad_var, re([]))]


def _estimate_logistic(args, coll, part) -> list[dict]:
    def row(name, p):
        c = combined_estimate_glmm(coll, p, structure=args.structure, continuity=args.continuity)
        if not c.converged:
            raise ConvergenceError(f"{name}: variance-component optimisation did not converge")
        if c.boundary:
            warnings.warn(f"{name}: a variance component is on the boundary", stacklevel=2)
        m = c.sigma_hat.matrix
        return {"method": name, "beta_hat": float(c.beta_hat[0]), "se": c.se,
                "variance": float(c.variance_beta[0, 0]), "re": None,
                "sigma_bb": float(m[0, 0]), "sigma_aa": float(m[1, 1]) if p.k1 else None,
                "sigma_ba": float(m[0, 1]) if p.k1 else None, "loglik": float(c.loglik)}

    if part.k1 == 0:
        warnings.warn("alpha is not estimable without IPD; reporting AD-MA only", stacklevel=2)
        return [row("ad_ma", part)]
    rows = [row("ipd_ma" if part.k2 == 0 else "ipd_ad_ma", part),
            row("ad_ma", Partition(frozenset(), frozenset(coll.order)))]
    if part.k2 == 0:
        for r in rows:
            r["re"] = rows[0]["variance"] / r["variance"]
    return rows


def cmd_select(args) -> list[dict]:
    d = _Design(args)
    rows = []
    for k1 in _k1_values(args.k1, d.k, None):
        res = select(SelectionInstance(d.u, d.v, k1), args.method)
        var = d.variance(res.chosen)
        rows.append({"k1": k1, "method": args.method, "indices": res.chosen,
                     "objective": res.objective, "variance": var, "re": d.v_ipd / var,
                     "study_ids": " ".join(d.ids[i] for i in res.chosen),
                     "indifferent": res.indifferent})
    return rows


def cmd_re_curve(args) -> list[dict]:
    d = _Design(args)
    rows = []
    for k1 in _k1_values(args.k1, d.k, range(d.k + 1)):
        inst = SelectionInstance(d.u, d.v, k1)
        best = select(inst, args.method)
        row = {"k1": k1, "max_re": d.v_ipd / d.variance(best.chosen), "argmax": best.chosen,
               "min_re": None, "argmin": None}
        if args.method == "exact":
            worst = brute_force_worst(inst)
            row["min_re"] = d.v_ipd / d.variance(worst.chosen)
            row["argmin"] = worst.chosen
        rows.append(row)
    return rows


def cmd_summarize(args):
    if not args.ipd:
        raise InputError("summarize needs --ipd")
    coll = load_ipd(args.ipd, _kind(args))
    ads = {}
    for s in coll.order:
        st = coll.ipd[s]
        if coll.outcome_kind == BINARY:
            ct, cc, nt, nc = st.arm_counts()
            ads[s] = fit_study_logistic(st, args.continuity).to_ad(nt, nc, (ct, cc))
        else:
            ads[s] = summarize_ipd(st)
    return StudyCollection(ad=ads, outcome_kind=coll.outcome_kind, order=coll.order)


def cmd_simulate(args, out: Path) -> list[Path]:
    if not args.scenario:
        raise InputError("simulate needs --scenario")
    if args.scenario == "beta_blockers":
        res = sim.run_beta_blocker_workflow(seed=args.seed if args.seed is not None else 2024)
        out.mkdir(parents=True, exist_ok=True)
        p = out / "beta_blockers_variances.csv"
        sim.write_rows(p, res.rows)
        print(f"best set {_fmt_idx(res.best)}, gap recovered {res.gap_recovered:.3f}")
        write_manifest(out, args, [p])
        return [p]
    if args.scenario not in sim.SCENARIOS:
        raise InputError(f"unknown scenario {args.scenario!r}; choose from "
                         f"{sorted(sim.SCENARIOS) + ['beta_blockers']}")
    rep = sim.run_scenario(args.scenario, args.seed, args.reps, args.workers)
    paths = rep.write(out, {"command": "simulate", "argv": sys.argv[1:], "flags": _flags(args)})
    print(f"{args.scenario}: {rep.config.replicates} replicates, seed {rep.config.seed}, "
          f"config {rep.config_hash}")
    return paths[:-1]


# -- plumbing -------------------------------------------------------------------

def _fmt_idx(idx) -> str:
    return ",".join(str(i + 1) for i in idx)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def write_manifest(out: Path, args, outputs) -> Path:
    inputs = {}
    for key in ("ipd", "ad", "config"):
        p = getattr(args, key, None)
        if p:
            inputs[key] = {"path": str(p), "sha256": _sha256(p)}
    manifest = {"command": args.command, "argv": sys.argv[1:], "flags": _flags(args), "inputs": inputs,
                "seed": getattr(args, "seed", None), "version": __version__,
                "outputs": [Path(p).name for p in outputs]}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def read_config(path) -> dict:
    """``key = value`` lines (an optional ``[section]`` header is allowed)."""
    text = Path(path).read_text(encoding="utf-8")
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[ipdad]\n" + text)
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    out = {}
    for section in cp.sections():
        for key in cp[section]:
            name = key.replace("-", "_")
            out[name] = cp[section].getboolean(key) if name in _BOOL_KEYS else cp[section][key]
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ipd", help="IPD CSV (study_id,y,x)")
    common.add_argument("--ad", help="AD CSV (study_id,beta_hat,var_hat,n_t,n_c[,cases_t,cases_c])")
    common.add_argument("--model", choices=("lmm", "logistic"), default="lmm")
    common.add_argument("--k1", help="IPD set size: an integer, a list a,b,c or a range lo:hi")
    common.add_argument("--method", choices=("exact", "ssa", "extremes"), default="exact")
    common.add_argument("--sigma-alpha", type=float, dest="sigma_alpha",
                        help="between-study variance of the intercepts")
    common.add_argument("--pooled-sigma", action="store_true", dest="pooled_sigma",
                        help="assume one error variance for every study")
    common.add_argument("--pilot", help="comma-separated IPD study ids used to estimate sigma_alpha^2")
    common.add_argument("--seed", type=int)
    common.add_argument("--reps", type=int)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./ipdad_out)")
    common.add_argument("--config", help="INI-style key=value file; flags take precedence")
    common.add_argument("--scenario", help="built-in design or simulation scenario")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--continuity", type=float, default=0.0,
                        help="cell correction for logistic fits with an empty cell")
    common.add_argument("--structure", choices=STRUCTURES, default="full")
    common.add_argument("--weights", choices=("rare_disease", "two_by_two"),
                        help="logistic selection weights (default two_by_two when case counts exist)")

    p = argparse.ArgumentParser(prog="ipdad", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"estimate": "pooled treatment effect from IPD and AD",
             "select": "choose the IPD studies that minimise the variance",
             "re-curve": "best and worst relative efficiency per IPD set size",
             "simulate": "run a seeded simulation scenario",
             "summarize": "reduce IPD to AD"}
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return p


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise InputError(f"{args.config}: unknown keys {unknown}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        out = Path(args.out or os.environ.get(OUT_ENV) or "ipdad_out")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            outputs = _dispatch(args, out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if args.command != "simulate":
            write_manifest(out, args, outputs)
        return 0
    except (InputError, EnumerationCapError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMABILITY
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


def _dispatch(args, out: Path) -> list[Path]:
    if args.command == "simulate":
        return cmd_simulate(args, out)
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "summarize":
        coll = cmd_summarize(args)
        p = out / "ad_summary.csv"
        write_ad(coll, p)
        print(f"summarised {coll.k} studies to {p}")
        return [p]
    fn, fname = {"estimate": (cmd_estimate, "estimate.csv"), "select": (cmd_select, "select.csv"),
                 "re-curve": (cmd_re_curve, "re_curve.csv")}[args.command]
    rows = fn(args)
    p = out / fname
    sim.write_rows(p, rows)
    for r in rows:
        print(_summary_line(args.command, r))
    return [p]


def _summary_line(command: str, r: dict) -> str:
    if command == "estimate":
        re = "" if r["re"] is None else f"  RE {r['re']:.4f}"
        return f"{r['method']:<10} beta {r['beta_hat']:.4f}  se {r['se']:.4f}{re}"
    if command == "select":
        return f"k1={r['k1']:<3} {r['method']:<8} studies {_fmt_idx(r['indices'])}  RE {r['re']:.4f}"
    mn = "" if r["min_re"] is None else f"  min RE {r['min_re']:.4f} ({_fmt_idx(r['argmin'])})"
    return f"k1={r['k1']:<3} max RE {r['max_re']:.4f} ({_fmt_idx(r['argmax'])}){mn}"


if __name__ == "__main__":
    sys.exit(main())
