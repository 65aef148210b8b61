"""Command-line interface.

Exit codes: 0 verdict true or success, 1 verdict false, 2 usage or
document error, 3 numeric failure.  ``--tol`` (or ``RELAXKIT_TOL``)
sets the tolerance of every test.  Randomized commands take ``--seed``
(default 0) and print it in the report.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys

import numpy as np

from . import __version__
from .classify import ClassifyConfig, classify, modal_decomposition, symmetric_realization
from .errors import DocumentError, DomainError, NonUnique, NotModal, NumericError, RelaxkitError
from .gen import NONRELAXATION_KINDS, rc_two_port, random_nonrelaxation, random_relaxation
from .hankel import (SampledSignal, adjointness_defect, adjointness_witness, build_grid,
                     discretize_hankel, n_cyclic_test, numerical_range_arg,
                     positivity_certificate)
from .io import dump_model, load_model, load_signal, save_report
from .passivity import lemma_passivity_check, lmi_residual, signature_inertia, solve_T
from .storage import gradient_check, storage_trace

EXIT_TRUE, EXIT_FALSE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_TOL = 1e-8
TOL_ENV = "RELAXKIT_TOL"


class UsageError(Exception):
    pass


def _default_tol():
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not tol > 0:
        raise UsageError(f"{TOL_ENV} must be positive")
    return tol


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return v


def _certify(text):
    key, _, val = text.partition("=")
    if key != "n" or not val.isdigit() or int(val) < 1:
        raise argparse.ArgumentTypeError(f"expected n=N with N >= 1, got {text!r}")
    return int(val)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(_sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relaxkit", description="Relaxation-system tests and certificates.")
    p.add_argument("--version", action="version", version=f"relaxkit {__version__}")
    p.add_argument("--tol", type=_positive, default=None,
                   help=f"tolerance for every test (default {DEFAULT_TOL:g} or ${TOL_ENV})")
    p.add_argument("-o", "--output", default="-", help="report path (default stdout)")
    # -o is also accepted after the command; SUPPRESS keeps the global value otherwise
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("-o", "--output", default=argparse.SUPPRESS, help="report path")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    c = sub.add_parser("classify", parents=[out], help="run every relaxation test")
    c.add_argument("model")

    c = sub.add_parser("realize", parents=[out], help="emit the internally symmetric realization")
    c.add_argument("model")

    c = sub.add_parser("hankel", parents=[out], help="Hankel operator certificates")
    c.add_argument("model")
    c.add_argument("--panels", type=int, default=32)
    c.add_argument("--nodes", type=int, default=8)
    c.add_argument("--certify", type=_certify, metavar="n=N", default=None,
                   help="also run cycle tests up to order N")
    c.add_argument("--trials", type=int, default=20)
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("storage-trace", parents=[out], help="dissipation inequality along a trajectory")
    c.add_argument("model")
    c.add_argument("signal")
    c.add_argument("--dt", type=_positive, default=None, help="override the signal's dt")
    c.add_argument("--burn-in", type=float, default=None,
                   help="seconds before storage is evaluated (default: grid horizon)")
    c.add_argument("--hold", choices=("foh", "zoh"), default="foh")
    c.add_argument("--evaluation", choices=("quadrature", "exact"), default="quadrature",
                   help="storage by Hankel quadrature or exact held-input integration")
    c.add_argument("--residual-tol", type=_positive, default=1e-6,
                   help="residual bound relative to 1 + max|supply|")
    c.add_argument("--full", action="store_true", help="include the sampled trace")

    c = sub.add_parser("gradient-check", parents=[out], help="central-difference check of the storage gradient")
    c.add_argument("model")
    c.add_argument("--eps", type=_positive, default=1e-3)
    c.add_argument("--directions", type=int, default=10)
    c.add_argument("--threshold", type=_positive, default=1e-9)
    c.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("passivity", parents=[out], help="T-matrix certificate and LMI residual")
    c.add_argument("model")

    c = sub.add_parser("generate", parents=[out], help="write a model document")
    gsub = c.add_subparsers(dest="family", metavar="FAMILY", parser_class=_Parser)
    gsub.required = True
    g = gsub.add_parser("relaxation", parents=[out])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--modes", type=int, default=3)
    g.add_argument("--inputs", type=int, default=2)
    g.add_argument("--rank", type=int, default=1)
    g.add_argument("--with-d", action="store_true")
    g = gsub.add_parser("nonrelaxation", parents=[out])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--kind", choices=NONRELAXATION_KINDS, default="complex_pole")
    g = gsub.add_parser("rc", parents=[out])
    g.add_argument("--r1", type=_positive, default=1.0)
    g.add_argument("--cap", type=_positive, default=1.0)
    g.add_argument("--r2", type=_positive, default=1.0)
    return p


def _cmd_classify(args, tol):
    sys = load_model(args.model)
    report = classify(sys, ClassifyConfig(tol=tol))
    out = {"command": "classify", "model": args.model, "verdict": report.overall,
           "report": report.to_dict()}
    return out, report.overall


def _cmd_realize(args, tol):
    sys = load_model(args.model)
    try:
        sym = symmetric_realization(modal_decomposition(sys, tol), tol)
    except (NotModal, DomainError) as exc:
        _sys.stderr.write(f"relaxkit: no symmetric realization: {exc}\n")
        return None, False
    label = f"symmetric({sys.label})" if sys.label else "symmetric"
    return dump_model(type(sym)(sym.A, sym.B, sym.C, sym.D, label)), True


def _cmd_hankel(args, tol):
    sys = load_model(args.model)
    grid = build_grid(sys, args.panels, args.nodes)
    hd = discretize_hankel(sys, grid)
    cert = positivity_certificate(hd)
    u, w = adjointness_witness(hd)
    nr = numerical_range_arg(hd, args.samples, args.seed)
    out = {
        "command": "hankel", "model": args.model, "seed": args.seed, "tol": tol,
        "grid": {"panels": args.panels, "nodes_per_panel": args.nodes,
                 "node_count": grid.node_count, "horizon": grid.horizon,
                 "self_test_error": grid.self_test_error},
        "positivity": {"min_eig": cert.min_eig, "symmetry_defect": cert.symmetry_defect,
                       "norm": cert.norm, "certified": cert.certified(tol)},
        "adjointness_defect": adjointness_defect(hd, u, w),
        "numerical_range": {"max_abs_arg": nr.max_abs_arg, "vacuous": nr.vacuous,
                            "informative_samples": nr.informative},
    }
    verdict = cert.certified(tol)
    if args.certify is not None:
        rep = n_cyclic_test(hd, args.certify, args.trials, args.seed)
        out["cyclic"] = {"n_max": args.certify, "trials": args.trials,
                         "worst_sums": rep.worst_sums,
                         "worst_normalized": rep.worst_normalized,
                         "passed": rep.passed(tol)}
        verdict = verdict and rep.passed(tol)
    out["verdict"] = verdict
    return out, verdict


def _cmd_storage(args, tol):
    sys = load_model(args.model)
    sig = load_signal(args.signal)
    dt = args.dt or sig.dt
    if dt is None:
        raise UsageError("signal samples are not uniformly spaced; pass --dt")
    if sig.values.shape[1] != sys.m:
        raise DocumentError(f"{args.signal}: {sig.values.shape[1]} channels, model has {sys.m} inputs")
    hd = discretize_hankel(sys, build_grid(sys))
    tr = storage_trace(sys, hd, sig.values, dt, args.burn_in, args.hold, tol, args.evaluation)
    bound = tr.tolerance(args.residual_tol)
    verdict = tr.max_residual() <= bound
    out = {"command": "storage-trace", "model": args.model, "signal": args.signal,
           "dt": dt, "hold": tr.hold, "evaluation": tr.evaluation, "burn_in": tr.burn_in,
           "samples": len(tr.times),
           "max_residual": tr.max_residual(), "residual_bound": bound,
           "min_storage": float(np.min(tr.storage)), "max_storage": float(np.max(tr.storage)),
           "verdict": verdict}
    if tr.state_storage is not None:
        diff = np.max(np.abs(tr.storage - tr.state_storage))
        out["state_storage_defect"] = float(diff / max(np.max(np.abs(tr.storage)), 1e-300))
    if args.full:
        out["trace"] = {"times": tr.times, "storage": tr.storage, "supply": tr.supply,
                        "work": tr.work, "residuals": tr.residuals}
    return out, verdict


def _cmd_gradient(args, tol):
    sys = load_model(args.model)
    hd = discretize_hankel(sys, build_grid(sys))
    rng = np.random.default_rng(args.seed)
    shape = (hd.grid.node_count, sys.m)
    decay = np.exp(-hd.grid.decay_rate * hd.grid.nodes)[:, None]
    u = SampledSignal(hd.grid, rng.standard_normal(shape) * decay)
    dirs = [SampledSignal(hd.grid, rng.standard_normal(shape) * decay)
            for _ in range(args.directions)]
    defect = gradient_check(hd, u, dirs, args.eps)
    verdict = defect <= args.threshold
    out = {"command": "gradient-check", "model": args.model, "seed": args.seed,
           "eps": args.eps, "directions": args.directions, "max_defect": defect,
           "threshold": args.threshold, "verdict": verdict}
    return out, verdict


def _cmd_passivity(args, tol):
    sys = load_model(args.model)
    out = {"command": "passivity", "model": args.model, "tol": tol}
    try:
        cert = solve_T(sys, tol)
    except NonUnique as exc:
        out.update(verdict=False, reason=str(exc), nullity=exc.nullity)
        return out, False
    out["certificate"] = {
        "T": cert.T, "residual_sylvester": cert.residual_sylvester,
        "residual_output": cert.residual_output, "symmetry_defect": cert.symmetry_defect,
        "min_eig_T": cert.min_eig_T, "min_eig_TA_negated": cert.min_eig_TA_negated,
        "minimal": cert.minimal, "inertia": list(signature_inertia(cert, tol)),
    }
    if not cert.residuals_ok(tol):
        out.update(verdict=False, reason="certificate equations are inconsistent")
        return out, False
    verdict = lemma_passivity_check(sys, cert, tol)
    out["lmi_max_eig"] = lmi_residual(sys, cert.T)
    out["verdict"] = verdict
    return out, verdict


def _cmd_generate(args, tol):
    if args.family == "relaxation":
        sys = random_relaxation(args.seed, args.modes, args.inputs, args.rank, args.with_d)
    elif args.family == "nonrelaxation":
        sys = random_nonrelaxation(args.seed, args.kind)
    else:
        sys = rc_two_port(args.r1, args.cap, args.r2)
    return dump_model(sys), True


COMMANDS = {
    "classify": _cmd_classify, "realize": _cmd_realize, "hankel": _cmd_hankel,
    "storage-trace": _cmd_storage, "gradient-check": _cmd_gradient,
    "passivity": _cmd_passivity, "generate": _cmd_generate,
}


def main(argv=None) -> int:
    """Run the CLI and return the exit code."""
    try:
        default_tol = _default_tol()
        args = build_parser().parse_args(argv)
        tol = args.tol if args.tol is not None else default_tol
        out, verdict = COMMANDS[args.command](args, tol)
        if isinstance(out, str):
            if args.output == "-":
                _sys.stdout.write(out)
            else:
                with open(args.output, "w", encoding="utf-8") as fh:
                    fh.write(out)
        elif out is not None:
            save_report(out, args.output)
        return EXIT_TRUE if verdict else EXIT_FALSE
    except UsageError as exc:
        _sys.stderr.write(f"relaxkit: error: {exc}\n")
        return EXIT_USAGE
    except (DocumentError, OSError) as exc:
        _sys.stderr.write(f"relaxkit: {exc}\n")
        return EXIT_USAGE
    except (NumericError, DomainError, RelaxkitError, np.linalg.LinAlgError,
            ArithmeticError) as exc:
        _sys.stderr.write(f"relaxkit: numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    _sys.exit(main())
