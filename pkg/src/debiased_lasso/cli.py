"""Command line interface: ``debias {fit,infer,simulate,diagnose}``."""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import load_csv, sample_covariance
from .decorrelate import DecorrelationOptions, build_decorrelator
from .estimator import DebiasedLasso, _universal
from .exceptions import InputError, NumericError
from .lasso import lasso_fit, scaled_lasso_fit
from .simulation import SimConfig, export_diagnostics, run_configuration

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

_NOISE = {"gaussian": "gaussian", "rademacher": "rademacher", "expo": "centered_exponential"}

log = logging.getLogger("debiased_lasso")


def _auto_or_float(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}")


def _write_json(path, obj):
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2))


def cmd_fit(args):
    d = load_csv(args.data, header=args.header, standardize=args.standardize)
    s = sample_covariance(d)
    root = _universal(d.n, d.p)
    scaled = scaled_lasso_fit(d, 10 * root, sigma_hat=s)
    lam = 4 * scaled.sigma_hat * root if args.lambda_rule == "auto" else args.lambda_rule
    fit = lasso_fit(d, lam, sigma_hat=s, warm_start=scaled.theta)
    scale = d.column_scale if d.column_scale is not None else np.ones(d.p)
    _write_json(args.out, {
        "n": d.n, "p": d.p, "lambda": fit.lam, "sigma_hat": scaled.sigma_hat,
        "theta": (fit.theta / scale).tolist(), "iterations": fit.iterations,
        "converged": fit.converged, "kkt_residual": fit.kkt_residual,
    })
    print(f"lambda={fit.lam:.6g} sigma_hat={scaled.sigma_hat:.6g} "
          f"nonzero={int(np.count_nonzero(fit.theta))} converged={fit.converged}")


def cmd_infer(args):
    d = load_csv(args.data, header=args.header)
    est = DebiasedLasso(alpha=args.alpha, mu=args.mu, row_bound_beta=args.beta,
                        standardize=args.standardize).fit(d.x, d.y)
    rep = est.test()
    _write_json(args.out, rep.to_dict())
    key = rep.reject_fwer if args.fwer else rep.reject
    label = f"alpha/p={args.alpha / d.p:.3g}" if args.fwer else f"alpha={args.alpha}"
    print(f"{int(key.sum())} of {d.p} coefficients rejected at {label}")
    if est.decorrelator_.fallback_identity:
        print("warning: decorrelation infeasible, used M = I", file=sys.stderr)


def cmd_simulate(args):
    cfg = SimConfig(n=args.n, p=args.p, s0=args.s0, b=args.b, n_reps=args.reps,
                    seed=args.seed, alpha=args.alpha, noise_kind=_NOISE[args.noise],
                    beta=args.beta)
    out = run_configuration(cfg)
    export_diagnostics(out, args.out)

    def fmt(v):
        return "n/a" if v is None else f"{v:.4f}"

    print(" ".join(f"{k}={fmt(getattr(out, k))}"
                   for k in ("ell", "ell_s", "ell_sc", "cov", "cov_s", "cov_sc", "fp", "tp")))
    if out.n_failed:
        print(f"{out.n_failed} replicates failed", file=sys.stderr)


def cmd_diagnose(args):
    d = load_csv(args.data, header=args.header, standardize=args.standardize)
    s = sample_covariance(d)
    opts = DecorrelationOptions(mu=None if args.mu == "auto" else args.mu)
    dec = build_decorrelator(s, opts, x=d.x)
    sigma_hat = scaled_lasso_fit(d, 10 * _universal(d.n, d.p), sigma_hat=s).sigma_hat
    q = sigma_hat ** 2 * dec.row_variance / d.n
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "feasibility.csv").open("w") as fh:
        fh.write("index,feasible,mu,row_variance\n")
        for i in range(d.p):
            fh.write(f"{i + 1},{int(dec.row_feasible[i])},{dec.row_mu[i]!r},"
                     f"{dec.row_variance[i]!r}\n")
    summary = {
        "n": d.n, "p": d.p, "mu": dec.mu, "coherence": dec.coherence,
        "fallback_identity": dec.fallback_identity,
        "rows_feasible": int(dec.row_feasible.sum()),
        "rows_inflated": int((dec.row_mu > opts.resolve_mu(d.n, d.p)).sum()),
        "sigma_hat": sigma_hat,
        "q_diag": {"min": float(q.min()), "median": float(np.median(q)),
                   "max": float(q.max())},
    }
    _write_json(out / "diagnose.json", summary)
    print(json.dumps(summary, indent=2))


def build_parser():
    ap = argparse.ArgumentParser(prog="debias", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--data", required=True, help="CSV: response first, then covariates")
        p.add_argument("--header", action="store_true", help="CSV has a header row")
        p.add_argument("--standardize", action="store_true")

    p = sub.add_parser("fit", help="scaled-LASSO noise level and LASSO fit")
    data_args(p)
    p.add_argument("--lambda-rule", type=_auto_or_float, default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("infer", help="de-biased estimates, intervals and p-values")
    data_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mu", type=_auto_or_float, default="auto")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--fwer", action="store_true", help="summarize Bonferroni decisions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("simulate", help="run one synthetic configuration")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s0", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--noise", choices=sorted(_NOISE), default="gaussian")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="coherence, feasibility map, variance summary")
    data_args(p)
    p.add_argument("--mu", type=_auto_or_float, default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (InputError, ValueError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
