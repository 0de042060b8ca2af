"""Command line front end.

Exit codes: 0 success, 1 a precondition of the requested bound failed,
2 input data could not be read, 3 a reproduced example missed its tolerance.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import local_bounds as lb
from . import nonlocal_bounds as nb
from . import registry
from . import relative as rel
from . import svm
from . import threshold as th
from . import transductive as tr
from .errors import BoundUndefined, DomainError, IngestionError
from .report import BoundReport

EXIT_OK, EXIT_PRECONDITION, EXIT_INGESTION, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _threads():
    try:
        return max(1, int(os.environ.get("PACBOUND_THREADS", "1")))
    except ValueError:
        return 1


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise DomainError("missing required flag(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _scalar_query(args):
    _need(args, "n", "r")
    return nb.ScalarBoundQuery(args.n, args.r, d=args.d or 0.0, eps=args.eps, alpha=args.alpha or 1.1)


def _vapnik(args):
    _need(args, "n", "r1", "h")
    return tr.VapnikQuery(args.n, args.r1, args.h, eps=args.eps, alpha=args.alpha or 1.1)


def _eval_deviation(args):
    q = _scalar_query(args)
    kl = args.kl or 0.0
    if args.lam is not None:
        return nb.deviation_bound(q, kl, args.lam), {"lambda": args.lam}
    v, lam = nb.optimized_deviation_bound(q, kl)
    return v, {"lambda": lam}


def _eval_uniform(args):
    v, k = nb.uniform_deviation_bound(_scalar_query(args), args.kl or 0.0)
    return v, {"grid_index": k}


def _eval_unbiased(args):
    q = _scalar_query(args)
    if args.lam is not None:
        return nb.unbiased_bound(q, args.lam)[0], {"lambda": args.lam}
    v, lam = nb.optimized_unbiased_bound(q)
    return v, {"lambda": lam}


def _eval_sqrt(args):
    return nb.sqrt_bound(_scalar_query(args)), {}


def _eval_local(args):
    _need(args, "n", "d", "alpha", "gamma")
    nl, lin = lb.local_deviation_from_dimension(args.n, args.d, args.r or 0.0, args.eps, args.alpha, args.gamma,
                                                args.kl or 0.0)
    return nl, {"linear": lin}


def _eval_corollary(args):
    _need(args, "n", "d", "beta")
    return lb.local_corollary_from_dimension(args.n, args.d, args.r or 0.0, args.eps, args.beta, args.kl or 0.0), {}


def _eval_nonrandom(args):
    _need(args, "n", "d", "r")
    return lb.nonrandom_rate(args.d, args.r, args.eta or 0.0, args.n), {}


def _eval_relative_root(args):
    _need(args, "lam", "beta", "d")
    return rel.relative_root(args.lam, args.beta, args.d), {}


def _eval_transductive(args):
    _need(args, "k")
    v, lam = tr.transductive_bound(_vapnik(args), args.k)
    return v, {"lambda": lam, "k": args.k}


def _eval_same_size(args):
    v, lam = tr.transductive_bound_k1(_vapnik(args))
    return v, {"lambda": lam}


def _eval_exchangeable(args):
    v, lam = tr.exchangeable_bound(_vapnik(args))
    return v, {"lambda": lam}


def _eval_inductive(args):
    r = tr.inductive_bound(_vapnik(args))
    return r.bound, {"k": r.k_star, "lambda": r.lambda_star}


def _eval_inductive_gaussian(args):
    r = tr.inductive_bound_gaussian(_vapnik(args))
    return r.bound, {"k": r.k_star}


def _eval_inductive_grid(args):
    r = tr.inductive_bound_grid(_vapnik(args))
    return r.bound, {"k": r.k_star, "lambda": r.lambda_star}


def _eval_iid(args):
    exact, lam, gauss = tr.inductive_bound_k1_iid(_vapnik(args))
    return exact, {"lambda": lam, "gaussian": gauss}


def _eval_classical(args):
    return tr.vapnik_classical(_vapnik(args)), {}


EVALUATORS = {
    "deviation": _eval_deviation,
    "uniform-deviation": _eval_uniform,
    "unbiased": _eval_unbiased,
    "sqrt": _eval_sqrt,
    "local-deviation": _eval_local,
    "local-corollary": _eval_corollary,
    "nonrandom-local": _eval_nonrandom,
    "relative-root": _eval_relative_root,
    "transductive": _eval_transductive,
    "transductive-same-size": _eval_same_size,
    "exchangeable": _eval_exchangeable,
    "inductive": _eval_inductive,
    "inductive-gaussian": _eval_inductive_gaussian,
    "inductive-grid": _eval_inductive_grid,
    "iid": _eval_iid,
    "vapnik-classical": _eval_classical,
}

# Identifiers used by earlier tooling for two of the bounds above.
ALIASES = {"thm2.7": "deviation", "thm2.3.3": "inductive"}

INPUT_FLAGS = ("n", "r", "r1", "kl", "d", "h", "eps", "lam", "k", "alpha", "gamma", "beta", "eta", "seed")


def _inputs(args, extra=()):
    out = {name: getattr(args, name) for name in INPUT_FLAGS + tuple(extra) if getattr(args, name, None) is not None}
    if "lam" in out:
        out["lambda"] = out.pop("lam")
    return out


def _emit(report, args):
    print(report.line())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")


def cmd_eval(args):
    bound_id = ALIASES.get(args.bound_id, args.bound_id)
    if bound_id not in EVALUATORS:
        raise UsageError(f"unknown bound id {args.bound_id!r}; choose from {', '.join(sorted(EVALUATORS))}")
    value, opt = EVALUATORS[bound_id](args)
    _emit(BoundReport(bound_id, _inputs(args), float(value), opt), args)
    return EXIT_OK


def cmd_repro(args):
    if args.suite == "all":
        examples = list(registry.EXAMPLES)
    else:
        try:
            examples = [registry.get(args.suite)]
        except KeyError as exc:
            raise UsageError(str(exc)) from None
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda e: e.run(), examples))
    print(f"{'id':28s} {'expected':>10s} {'computed':>10s}  pass")
    for r in results:
        print(f"{r.example.id:28s} {r.example.expected:10.4f} {r.value:10.6f}  {'yes' if r.passed else 'NO'}"
              + (f"  ({r.detail})" if r.detail else ""))
    return EXIT_OK if all(r.passed for r in results) else EXIT_MISMATCH


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc.strerror}") from None


def _threshold_model(args):
    data = th.LabeledDataset.from_csv(_read(args.csv))
    return th.build(data, args.labels)


def cmd_threshold_train(args):
    model = _threshold_model(args)
    text = model.summary_json()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


def cmd_threshold_bound(args):
    model = _threshold_model(args)
    bound = ALIASES.get(args.bound, args.bound)
    opt = {}
    if bound == "deviation":
        _need(args, "lam")
        value = th.gibbs_deviation_bound(model, args.lam, args.eps)
        opt["lambda"] = args.lam
    elif bound == "local-deviation":
        _need(args, "alpha", "gamma")
        value, lin = th.gibbs_local_bound(model, args.eps, args.alpha, args.gamma)
        opt["linear"] = lin
    elif bound == "effective-temperature":
        _need(args, "lam")
        finite, _ = model.to_finite_class()
        from . import finite_model as fm
        est = rel.effective_temperature(finite, args.eps, fm.gibbs(finite, args.lam))
        value = fm.gibbs(finite, args.lam).mean(finite.risks)
        opt.update(beta_hat=est.beta_hat, gamma_star=est.gamma_star)
    else:
        raise UsageError(f"unknown threshold bound {args.bound!r}")
    report = BoundReport(f"threshold/{bound}", {**_inputs(args), "cells": model.n_cells}, float(value), opt)
    _emit(report, args)
    return EXIT_OK


def _kernel(args):
    if args.kernel == "linear":
        return svm.Linear()
    if args.kernel == "gaussian":
        if args.width is None:
            raise DomainError("gaussian kernel needs --width")
        return svm.Gaussian(args.width)
    raise UsageError(f"unknown kernel {args.kernel!r}")


def cmd_svm_train(args):
    X, y = svm.read_csv(_read(args.csv))
    kernel = _kernel(args)
    sol = svm.train(kernel, X, y, box=args.box)
    if sol.status in ("inseparable", "degenerate"):
        print(f"status: {sol.status}")
        return EXIT_PRECONDITION
    model = svm.model_json(kernel, sol)
    report = BoundReport("svm/train", {"N": len(y), "kernel": args.kernel, "box": args.box},
                         math.nan, {"margin": sol.margin, "support": int(sol.support_set.size), "bias": sol.bias})
    print(f"status: {sol.status}  margin: {sol.margin:.6g}  support vectors: {sol.support_set.size}")
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    if args.model_out:
        Path(args.model_out).write_text(model + "\n")
    return EXIT_OK


def _power_of_two_atoms(R):
    j = math.ceil(math.log2(R)) if R > 0 else 0
    return 2.0**j, 1.0 / (2 * (abs(j) + 1) * (abs(j) + 2))


def cmd_svm_bound(args):
    X, y = svm.read_csv(_read(args.csv))
    kernel = _kernel(args)
    k = args.k or 1
    if args.mode == "transductive":
        if args.shadow:
            Xs, _ = svm.read_csv(_read(args.shadow))
            Xt, yt = X, y
        else:
            if len(y) % (k + 1):
                raise DomainError("without --shadow the row count must be a multiple of k+1")
            N = len(y) // (k + 1)
            Xt, yt, Xs = X[:N], y[:N], X[N:]
        res = svm.transductive_svm_pipeline(kernel, Xt, yt, Xs, args.eps)
        report = BoundReport("svm/transductive", {**_inputs(args), "N": len(yt)}, res.bound,
                             {"lambda": res.lambda_star, "h": res.h, "margin": res.margin, "R2": res.r_squared})
    elif args.mode == "compression":
        sol = svm.train(kernel, X, y, box=args.box)
        if sol.status != "optimal":
            raise DomainError(f"training failed: {sol.status}")
        err = float(np.mean(svm.predict(kernel, sol, X, y, X) != y))
        size = int(sol.support_set.size)
        q = tr.VapnikQuery(len(y), err, size, eps=args.eps)
        value, lam = tr.transductive_bound(q, k)
        report = BoundReport("svm/compression", {**_inputs(args), "N": len(y)}, value,
                             {"lambda": lam, "compression_size": size, "training_error": err})
    elif args.mode == "inductive":
        if args.kernel != "linear":
            raise DomainError("inductive margin mode needs the linear kernel")
        sol = svm.train(kernel, X, y, box=args.box)
        if sol.status != "optimal":
            raise DomainError(f"training failed: {sol.status}")
        w = (sol.alpha * y) @ X
        R_max, nu = _power_of_two_atoms(float(np.linalg.norm(X, axis=1).max()))
        res = svm.inductive_margin_bound(X, y, w, sol.bias, R_max, {R_max: nu}, args.eps, k)
        report = BoundReport("svm/inductive-margin", {**_inputs(args), "N": len(y)}, res.bound,
                             {"h": res.h, "lambda": res.lambda_star, "R_max": R_max, "quantile_risk": res.quantile_risk})
    else:
        raise UsageError(f"unknown svm bound mode {args.mode!r}")
    _emit(report, args)
    return EXIT_OK


def _common(p):
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=float, help="empirical risk")
    p.add_argument("--r1", type=float, help="training risk")
    p.add_argument("--kl", type=float)
    p.add_argument("--d", type=float, help="complexity in nats")
    p.add_argument("--h", type=int)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)


def parser():
    p = argparse.ArgumentParser(prog="pacbound", description="PAC-Bayesian and Vapnik-type risk bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("repro", help="reproduce the registered numeric examples")
    s.add_argument("suite", nargs="?", default="all")
    s.set_defaults(func=cmd_repro)

    s = sub.add_parser("eval", help="evaluate one bound on scalar inputs")
    s.add_argument("bound_id")
    _common(s)
    s.set_defaults(func=cmd_eval)

    for name, func in (("threshold-train", cmd_threshold_train), ("threshold-bound", cmd_threshold_bound)):
        s = sub.add_parser(name)
        s.add_argument("csv")
        s.add_argument("--labels", type=int, help="number of labels (default: largest label)")
        s.add_argument("--bound", default="deviation")
        _common(s)
        s.set_defaults(func=func)

    for name, func in (("svm-train", cmd_svm_train), ("svm-bound", cmd_svm_bound)):
        s = sub.add_parser(name)
        s.add_argument("csv")
        s.add_argument("--kernel", default="linear")
        s.add_argument("--width", type=float)
        s.add_argument("--box", type=float)
        s.add_argument("--mode", default="transductive")
        s.add_argument("--shadow")
        s.add_argument("--model-out")
        _common(s)
        s.set_defaults(func=func)
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except (DomainError, BoundUndefined, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
