"""Command-line entry point.

Usage:
    frnlab constants --n 3 --gamma 0.5          Bubble and estimate constants
    frnlab verify interaction --lambda 10,30,100 Integral estimates on a sweep
    frnlab reduce --eps 1e-3                    Reduced system: t*, Jacobian, degree
    frnlab ansatz --eps 1e-1,1e-2,1e-3          Residual, energy and positivity of the ansatz
    frnlab coercivity --basis 8,16,32           Galerkin eigenvalue evidence

Exit codes: 0 when every check passes, 1 on a failed check, 2 on a usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bubbles import ContractError, DomainError, FracParams, geometric_constants, sobolev_constant
from .kprofile import demo_profile, load_profile, validate_profile
from .quadrature import QuadratureSpec
from .reduction import HypothesisError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

LEMMAS = ("interaction", "mixed", "B8", "B9", "B10", "B11", "symmetry")

# per-row thresholds on relative_error used to decide the exit code
THRESHOLDS = {
    "interaction": 0.05,
    "B10": 0.05,
    "B11": 0.05,
    "B8": 0.5,
    "B9": 0.5,
    "symmetry": 1e-6,
}


class UsageError(ValueError):
    """Bad command-line input or configuration."""


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    return v


# --------------------------------------------------------------------------
# configuration


def _params(args) -> FracParams:
    return FracParams(args.n, args.gamma)


def _spec(args, default: QuadratureSpec | None = None) -> QuadratureSpec:
    base = default or QuadratureSpec()
    return base.with_(rel_tol=args.rel_tol) if args.rel_tol is not None else base


def _profile(args, params: FracParams):
    try:
        prof = load_profile(args.profile) if args.profile else demo_profile()
    except FileNotFoundError as exc:
        raise UsageError(f"profile file not found: {args.profile}") from exc
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"invalid profile: {exc}") from exc
    problems = validate_profile(prof, params)
    if problems:
        raise UsageError("profile violates hypotheses: " + "; ".join(problems))
    return prof


def _map(args, fun, items):
    """Order-preserving map over a worker pool of ``--threads`` workers."""
    items = list(items)
    if args.threads <= 1 or len(items) <= 1:
        return [fun(x) for x in items]
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        return list(pool.map(fun, items))


# --------------------------------------------------------------------------
# subcommands; each returns (rows, passed)


def cmd_constants(args):
    from .interaction import C_N_beta, D_N_beta, b10_constant, b11_constant, energy_constant, interaction_constant

    P = _params(args)
    g = geometric_constants(P)
    rows = [
        {"name": "C0", "value": P.C0, "note": "bubble amplitude, closed form in Gamma functions"},
        {"name": "S_gamma", "value": sobolev_constant(P), "note": "sharp fractional Sobolev constant"},
        {"name": "C1", "value": g.C1, "note": "int (1+|x|^2)^(-(N+2gamma)/2), radial quadrature"},
        {"name": "A0", "value": energy_constant(P), "note": "C0^(2*)"},
        {"name": "interaction", "value": interaction_constant(P), "note": "A0 C1"},
        {"name": "B10", "value": b10_constant(P), "note": "-(e/p) A0 C1"},
        {"name": "B11", "value": b11_constant(P), "note": "-(2e/p) A0 C1"},
    ]
    betas = args.beta or []
    for b in betas:
        gb = geometric_constants(P, b)
        rows += [
            {"name": f"moment(beta={b:g})", "value": gb.moment, "note": "int |x|^beta (1+|x|^2)^-(N+1)"},
            {"name": f"signed_moment(beta={b:g})", "value": gb.signed_moment, "note": "extra factor 1-|x|^2"},
            {"name": f"C_N_beta(beta={b:g})", "value": C_N_beta(P, b), "note": "K-term constant in dJ/dlam"},
            {"name": f"D_N_beta(beta={b:g})", "value": D_N_beta(P, b), "note": "K-term constant in dJ/dy"},
        ]
    for r in rows:
        r.update(N=P.N, gamma=P.gamma)
    return rows, all(math.isfinite(r["value"]) for r in rows)


def _verify_rows(args):
    from . import interaction as ia
    from .bubbles import Bubble
    from .functions import pairing_asymmetry, symmetry_corpus

    P = _params(args)
    spec = _spec(args)
    lemma = args.lemma_id
    if lemma == "symmetry":
        pairs = symmetry_corpus(P, size=args.pairs, seed=args.seed)
        vals = _map(args, lambda fg: pairing_asymmetry(fg[0], fg[1], P, spec), pairs)
        rows = [
            {"lemma_id": "symmetry", "pair": j, "relative_error": v, "f": type(f).__name__, "g": type(g).__name__}
            for j, (v, (f, g)) in enumerate(zip(vals, pairs))
        ]
        return rows

    needs_profile = lemma in ("B8", "B9")
    # B9 defaults to a transverse axis, along which the two-point profile is exactly even
    axis = args.i if args.i is not None else (1 if lemma == "B9" else 0)
    prof = _profile(args, P) if needs_profile else None

    def one(lam):
        if needs_profile:
            pt = prof.points[args.k]
            y = np.array(pt.z, float)
            if lemma == "B9":
                y[axis] += args.offset / lam
            other = Bubble(prof.points[1 - args.k].z, lam)
            pair = (Bubble(y, lam), other) if args.k == 0 else (other, Bubble(y, lam))
            cfg = ia.InteractionConfig(*pair, P, prof)
        else:
            cfg = ia.two_bubble_config(P, lam, args.distance)
        if lemma == "interaction":
            return ia.verify_interaction_integral(cfg, spec)
        if lemma == "mixed":
            return ia.verify_mixed_power(cfg, spec)
        if lemma == "B8":
            return ia.verify_k_weighted_dlambda(cfg, args.k, spec)
        if lemma == "B9":
            return ia.verify_k_weighted_dy(cfg, args.k, axis, spec)
        if lemma == "B10":
            return ia.verify_cross_dlambda(cfg, args.k, spec)
        return ia.verify_cross_dy(cfg, args.k, axis, spec)

    reports = _map(args, one, args.lam)
    rows = []
    for rep in reports:
        row = rep.row()
        row.update(N=P.N, gamma=P.gamma, quad_error=rep.quad_error)
        rows.append(row)
    return rows


def _verify_passed(lemma, rows, spec: QuadratureSpec, offset: float) -> bool:
    if lemma == "mixed":
        return all(np.isfinite(r["fitted_C"]) and r["fitted_C"] > 0 for r in rows)
    if lemma == "B9" and offset == 0:
        return all(abs(r["numeric"]) <= max(spec.abs_tol, 10 * r["quad_error"]) for r in rows)
    tol = THRESHOLDS[lemma]
    errs = [r["relative_error"] for r in rows]
    if lemma == "symmetry":
        return max(errs) < tol
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    return decreasing and errs[-1] < tol


def cmd_verify(args):
    if args.lemma_id not in LEMMAS:
        raise UsageError(f"unknown lemma_id {args.lemma_id!r}; choose from {', '.join(LEMMAS)}")
    rows = _verify_rows(args)
    return rows, _verify_passed(args.lemma_id, rows, _spec(args), args.offset)


def _reduced_problem(args, P, prof):
    from .interaction import C_N_beta, pair_interaction_constant, reference_constants, ReferenceConstants
    from .reduction import problem_from_profile

    m = None
    if args.m is not None:
        m = tuple(args.m) * 2 if len(args.m) == 1 else tuple(args.m)
        if len(m) != 2:
            raise UsageError("--m takes one or two values")
    if m is None and args.refs == "numeric":
        refs = reference_constants(P, prof, spec=_spec(args, QuadratureSpec(rel_tol=1e-9)))
    else:
        cb = tuple(C_N_beta(P, pt.beta) for pt in prof.points)
        refs = ReferenceConstants(pair_interaction_constant(P), cb, pair_interaction_constant(P), cb)
    return problem_from_profile(prof, P, refs, m=m, box=tuple(args.box))


def cmd_reduce(args):
    from .reduction import fd_jacobian, peak_parameters, solve_reduced, symmetric_t_star

    P = _params(args)
    prof = _profile(args, P)
    prob = _reduced_problem(args, P, prof)
    sol = solve_reduced(prob)
    fd = float(np.linalg.det(fd_jacobian(prob.g, sol.t_star)))
    jac_ok = abs(fd - sol.jacobian_det) <= 1e-6 * abs(sol.jacobian_det)
    passed = sol.residual_norm < 1e-12 and sol.degree == -1 and jac_ok
    closed = None
    if prob.beta[0] == prob.beta[1] and prob.m[0] == prob.m[1]:
        closed = symmetric_t_star(prob)
        passed = passed and all(abs(t - closed) <= 1e-10 * closed for t in sol.t_star)
    rows = []
    for eps in args.eps:
        pk = peak_parameters(prob, eps, sol)
        rows.append(
            {
                "epsilon": eps,
                "m": list(prob.m),
                "t_star": list(sol.t_star),
                "t_star_closed_form": closed,
                "jacobian_det": sol.jacobian_det,
                "jacobian_det_fd": fd,
                "degree": sol.degree,
                "residual": sol.residual_norm,
                "L": pk["L"],
                "lambda": list(pk["lambda"]),
                "y": [list(y) for y in pk["y"]],
            }
        )
    return rows, passed


def cmd_ansatz(args):
    from .ansatz import RESIDUAL_SPEC, build_ansatz, residual_norm
    from .reduction import solve_reduced

    P = _params(args)
    prof = _profile(args, P)
    prob = _reduced_problem(args, P, prof)
    sol = solve_reduced(prob, with_degree=False)
    spec = _spec(args, RESIDUAL_SPEC)
    reports = _map(args, lambda eps: residual_norm(build_ansatz(prof, prob, sol, eps), spec), args.eps)
    rows = [dict(r.row(), t_star=list(sol.t_star)) for r in reports]
    order = np.argsort([-r["epsilon"] for r in rows])
    norms = [rows[j]["residual_norm"] for j in order]
    passed = all(b < a for a, b in zip(norms, norms[1:])) and all(r["min_grid_value"] > 0 for r in rows)
    return rows, passed


def cmd_coercivity(args):
    from .ansatz import ansatz_at_scales
    from .galerkin import Configuration, build_dictionary, coercivity_sweep, min_eigen_quadratic_form

    P = _params(args)
    prof = _profile(args, P)
    ans = ansatz_at_scales(prof, P, (args.lambda_, args.lambda_), args.eps[0])
    config = Configuration.from_ansatz(ans)
    spec = _spec(args) if args.rel_tol is not None else None
    reps = coercivity_sweep(config, sizes=tuple(sorted(args.basis)), seed=args.seed, spec=spec)
    rows = [dict(r.as_dict(), control=False) for r in reps]
    mins = [r.min_eigenvalue for r in reps]
    passed = all(v > 0 for v in mins) and all(b <= a + 1e-12 for a, b in zip(mins, mins[1:]))
    if args.kernel_control:
        basis = build_dictionary(config.bubbles, min(args.basis), P, args.seed)
        ctl = min_eigen_quadratic_form(basis, config, spec, include_kernel=(1,))
        rows.append(dict(ctl.as_dict(), control=True))
        passed = passed and ctl.min_eigenvalue < 1e-3
    for r in rows:
        r.pop("eigenvalues", None)
        r.update(lambda_=args.lambda_, epsilon=args.eps[0], seed=args.seed)
    return rows, passed


# --------------------------------------------------------------------------
# output


def format_rows(rows, fmt: str) -> str:
    rows = [_clean(r) for r in rows]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=3, help="dimension N (default 3)")
    common.add_argument("--gamma", type=float, default=0.5, help="fractional order (default 0.5)")
    common.add_argument("--profile", default=None, help="K-profile JSON (default: bundled demo profile)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv")
    common.add_argument("--out", default=None, help="write the report to this path instead of stdout")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker pool size")
    common.add_argument("--rel-tol", type=float, default=None, help="quadrature relative tolerance")
    common.set_defaults(format="csv")

    parser = argparse.ArgumentParser(prog="frnlab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", parents=[common], help="closed-form and quadrature constants")
    p.add_argument("--beta", type=_floats, default=None, help="flatness orders for the moments")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("verify", parents=[common], help="integral estimates on a lambda sweep")
    p.add_argument("lemma_id", help=", ".join(LEMMAS))
    p.add_argument("--lambda", dest="lam", type=_floats, default=[10.0, 30.0, 100.0])
    p.add_argument("--distance", type=float, default=1.0, help="center distance for profile-free estimates")
    p.add_argument("--offset", type=float, default=0.25, help="B9 center offset in units of 1/lambda")
    p.add_argument("--k", type=int, default=0, choices=(0, 1), help="which bubble")
    p.add_argument("--i", type=int, default=None, help="coordinate index (default 1 for B9, else 0)")
    p.add_argument("--pairs", type=int, default=20, help="symmetry corpus size")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_verify)

    for name, func, eps_default, text in (
        ("reduce", cmd_reduce, [1e-3], "solve the two-scale reduced system"),
        ("ansatz", cmd_ansatz, [1e-1, 1e-2, 1e-3], "residual and energy of the two-peak ansatz"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--eps", type=_floats, default=eps_default)
        p.add_argument("--m", type=_floats, default=None, help="override m (one value or two)")
        p.add_argument("--refs", choices=("closed", "numeric"), default="closed", help="source of the constants in m")
        p.add_argument("--box", type=_floats, default=[0.1, 10.0])
        p.set_defaults(func=func)

    p = sub.add_parser("coercivity", parents=[common], help="Galerkin eigenvalue evidence")
    p.add_argument("--basis", type=_ints, default=[8, 16, 32])
    p.add_argument("--lambda", dest="lambda_", type=float, default=100.0)
    p.add_argument("--eps", type=_floats, default=[1e-3])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel-control", action="store_true", help="also run the injected-kernel control")
    p.set_defaults(func=cmd_coercivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        rows, passed = args.func(args)
    except (UsageError, DomainError, ContractError, HypothesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = format_rows(rows, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not passed:
        print("check failed: see report", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
