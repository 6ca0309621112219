"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line; the same lines
are collected into the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from frnlab.ansatz import RESIDUAL_SPEC, ansatz_at_scales, loglog_slope, residual_dual_norm
from frnlab.bubbles import Bubble, FracParams, frac_laplacian_exact
from frnlab.energy import functional_terms, scale_derivative_prediction, single_bubble_level
from frnlab.functions import BubbleShape, pairing_asymmetry, symmetry_corpus
from frnlab.galerkin import Configuration, assemble, build_dictionary, min_eigen_quadratic_form
from frnlab.interaction import (
    b9_secant_slope,
    k_weighted_dy_value,
    two_bubble_config,
    verify_interaction_integral,
    verify_k_weighted_dlambda,
)
from frnlab.quadrature import QuadratureSpec, pv_frac_laplacian
from frnlab.reduction import (
    ReducedProblem,
    brouwer_degree,
    fd_jacobian,
    jacobian_det,
    solve_reduced,
    symmetric_t_star,
    winding_number,
    zero_count_degree,
)


def report(n, ok, detail):
    line = f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.mark.parametrize("N,gamma", [(3, 0.5), (2, 0.5), (3, 0.75)])
def test_01_bubble_identity(N, gamma):
    P = FracParams(N, gamma)
    b = Bubble(np.linspace(0.1, 0.3, N), 1.7)
    f = BubbleShape(b, P)
    rng = np.random.default_rng(N)
    t0 = time.perf_counter()
    errs = []
    for r in (0.0, 0.2, 0.6, 1.5, 4.0, 12.0):
        d = rng.normal(size=N)
        x = np.asarray(b.center) + r * d / np.linalg.norm(d)
        num = pv_frac_laplacian(f, P, x)
        exact = float(frac_laplacian_exact(b, P, x[None])[0])
        errs.append(abs(num - exact) / abs(exact))
    dt = time.perf_counter() - t0
    ok = max(errs) < 1e-4 and len(errs) >= 5 and dt < 60
    report(1, ok, f"(N,gamma)=({N},{gamma}): max rel err {max(errs):.2e} at {len(errs)} points in {dt:.1f}s")


def test_02_pairing_symmetry(P):
    pairs = symmetry_corpus(P, size=20)
    asym = [pairing_asymmetry(f, g, P, QuadratureSpec(rel_tol=1e-10)) for f, g in pairs]
    report(2, max(asym) < 1e-6, f"max pairing asymmetry {max(asym):.2e} over {len(pairs)} pairs")


def test_03_interaction_lemma(P):
    errs = [verify_interaction_integral(two_bubble_config(P, lam, 1.0)).relative_error for lam in (10, 30, 100)]
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 0.05
    report(3, ok, "relative errors " + ", ".join(f"{e:.2e}" for e in errs) + " at lambda 10, 30, 100")


def test_04_k_weighted_scaling(P, profile):
    b8 = [verify_k_weighted_dlambda(two_bubble_config(P, lam, profile=profile), 0).extras["scaled"] for lam in (30, 100)]
    b8_change = abs(b8[1] - b8[0]) / abs(b8[1])
    b9 = [b9_secant_slope(P, profile, lam, k=0, i=1)["scaled_slope"] for lam in (30, 100)]
    b9_change = abs(b9[1] - b9[0]) / abs(b9[1])
    spec = QuadratureSpec()
    zero = []
    for lam in (30, 100):
        cfg = two_bubble_config(P, lam, profile=profile)
        zero.append(abs(float(k_weighted_dy_value(cfg, 0, 1, spec).value)))
    ok = b8_change < 0.02 and b9_change < 0.02 and max(zero) <= spec.abs_tol
    report(
        4,
        ok,
        f"B8 scaled {b8[0]:.4f} -> {b8[1]:.4f} ({b8_change:.2%}); "
        f"B9 slope {b9[0]:.4f} -> {b9[1]:.4f} ({b9_change:.2%}); zero-offset |B9| {max(zero):.1e}",
    )


def test_05_reduced_system(P):
    prob = ReducedProblem(beta=(1.5, 1.5), m=(1.0, 1.0), params=P)
    sol = solve_reduced(prob)
    t_closed = symmetric_t_star(prob)
    t_ok = all(abs(t - t_closed) <= 1e-10 * t_closed for t in sol.t_star)
    det = jacobian_det(prob, sol.t_star)
    fd = float(np.linalg.det(fd_jacobian(prob.g, sol.t_star)))
    det_ok = abs(det + 0.75) < 1e-12 and abs(fd - det) <= 1e-6 * abs(det)
    box = prob.box_2d()
    zc, _ = zero_count_degree(prob.g, box, prob.jacobian)
    wn = winding_number(prob.g, box)
    ident = brouwer_degree(lambda x: np.asarray(x) - 1.0, box)
    ok = t_ok and det_ok and zc == -1 and wn == -1 and sol.degree == -1 and ident == 1
    report(
        5,
        ok,
        f"t*={sol.t_star} (closed {t_closed}); det {det:.6f} vs FD {fd:.9f}; "
        f"degree zero-count {zc}, winding {wn}; identity degree {ident}",
    )


def test_06_gradient_consistency(P, profile):
    rng = np.random.default_rng(2024)
    h = 1e-4
    spec = QuadratureSpec(rel_tol=1e-7)
    worst = 0.0
    for _ in range(10):
        eps = rng.uniform(0.0, 0.5)
        bs = [
            Bubble(np.asarray(pt.z) + rng.uniform(-0.04, 0.04, 3), rng.uniform(2.0, 6.0), rng.uniform(0.8, 1.2))
            for pt in profile.points
        ]
        base = functional_terms(bs, P, profile, eps, spec)

        def energy_at(changed):
            return functional_terms(changed, P, profile, eps, grid=base.grid, gradients=False).energy

        def central(j, move):
            plus, minus = list(bs), list(bs)
            plus[j], minus[j] = move(bs[j], h), move(bs[j], -h)
            return (energy_at(plus) - energy_at(minus)) / (2 * h)

        j, i = int(rng.integers(2)), int(rng.integers(3))
        b = bs[j]
        checks = [
            (base.grad_alpha[j], central(j, lambda c, s: c.with_(amplitude=c.amplitude + s))),
            (base.grad_lambda[j], central(j, lambda c, s: c.with_(scale=c.scale * (1 + s))) / b.scale),
            (
                base.grad_center[j, i],
                central(j, lambda c, s: c.with_(center=np.asarray(c.center) + s * np.eye(3)[i])),
            ),
        ]
        for g, fd in checks:
            worst = max(worst, abs(g - fd) / abs(g))
    report(6, worst < 1e-5, f"worst relative gradient/FD mismatch {worst:.2e} over 10 configurations")


def test_07_scale_derivative_asymptotics(P, profile):
    eps = 1e-3
    ans = ansatz_at_scales(profile, P, (eps**-2, eps**-2), eps)
    T = functional_terms(ans.bubbles, P, profile, eps)
    errs = []
    for k in range(2):
        pred = scale_derivative_prediction(ans, k)["total"]
        errs.append(abs(T.grad_lambda[k] - pred) / abs(pred))
    report(7, max(errs) < 0.2, f"dJ/dlam {T.grad_lambda[0]:.4e} vs leading terms; relative errors {errs[0]:.3f}, {errs[1]:.3f}")


def test_08_energy_level(P, profile):
    eps = 1e-3
    ans = ansatz_at_scales(profile, P, (eps**-2, eps**-2), eps)
    ratio = functional_terms(ans.bubbles, P, profile, eps, gradients=False).energy / single_bubble_level(P)
    report(8, 1.9 <= ratio <= 2.1, f"I_eps / I_0 = {ratio:.5f}")


def test_09_residual_decay(P, profile):
    eps_list = (1e-1, 1e-2, 1e-3)
    norms = []
    for eps in eps_list:
        ans = ansatz_at_scales(profile, P, (eps**-2, eps**-2), eps)
        norms.append(residual_dual_norm(ans.bubbles, P, profile, eps, RESIDUAL_SPEC)[0])
    slope = loglog_slope(eps_list, norms)
    ok = abs(slope - 1.0) <= 0.3 and norms[0] > norms[1] > norms[2]
    report(9, ok, "norms " + ", ".join(f"{v:.4e}" for v in norms) + f"; log-log slope {slope:.4f}")


def test_10_coercivity(P, profile):
    eps, lam = 1e-3, 100.0
    config = Configuration.from_ansatz(ansatz_at_scales(profile, P, (lam, lam), eps))
    sizes = (8, 16, 32)
    full = build_dictionary(config.bubbles, max(sizes), P, seed=0)
    G, V, _ = assemble(list(full.dictionary) + list(full.kernel), config)
    kernel_idx = list(range(max(sizes), max(sizes) + len(full.kernel)))
    mins = []
    for M in sizes:
        idx = list(range(M)) + kernel_idx
        rep = min_eigen_quadratic_form(full.prefix(M), config, matrices=(G[np.ix_(idx, idx)], V[np.ix_(idx, idx)], None))
        mins.append(rep.min_eigenvalue)
    idx = list(range(8)) + kernel_idx
    control = min_eigen_quadratic_form(
        full.prefix(8), config, include_kernel=(1,), matrices=(G[np.ix_(idx, idx)], V[np.ix_(idx, idx)], None)
    ).min_eigenvalue
    ok = all(v > 0 for v in mins) and mins[0] >= mins[1] >= mins[2] and abs(control) < 1e-3
    report(10, ok, "min eigenvalues " + ", ".join(f"{v:.5f}" for v in mins) + f" (M=8,16,32); kernel control {control:.2e}")
