"""From the reduced system to a two-peak approximate solution.

1. solve the two-scale reduced system and compute its Brouwer degree,
2. place weighted bubbles at the critical points of K with the resulting scales,
3. measure the equation residual, the energy and positivity as eps shrinks,
4. look at the smallest eigenvalue of the second variation off the kernel.
"""

from frnlab.ansatz import build_ansatz, loglog_slope, residual_norm
from frnlab.bubbles import FracParams
from frnlab.galerkin import Configuration, coercivity_sweep
from frnlab.interaction import C_N_beta, ReferenceConstants, pair_interaction_constant
from frnlab.kprofile import demo_profile
from frnlab.reduction import problem_from_profile, solve_reduced

P = FracParams(3, 0.5)
prof = demo_profile()
cb = tuple(C_N_beta(P, pt.beta) for pt in prof.points)
refs = ReferenceConstants(pair_interaction_constant(P), cb, pair_interaction_constant(P), cb)

prob = problem_from_profile(prof, P, refs)
sol = solve_reduced(prob)
print(f"m = {prob.m}, t* = {sol.t_star}, det Dg(t*) = {sol.jacobian_det:.6f}, degree = {sol.degree}")

eps_list = (1e-1, 1e-2, 1e-3)
norms = []
print(f"\n{'eps':>8} {'lambda':>12} {'||R||':>12} {'I/I0':>8} {'min u':>10}")
for eps in eps_list:
    rep = residual_norm(build_ansatz(prof, prob, sol, eps))
    norms.append(rep.residual_dual_norm)
    print(f"{eps:>8.0e} {rep.lam[0]:>12.4e} {rep.residual_dual_norm:>12.4e} {rep.energy_ratio_to_single:>8.4f} {rep.min_grid_value:>10.2e}")
print(f"log-log slope of the residual: {loglog_slope(eps_list, norms):.4f}")

config = Configuration.from_ansatz(build_ansatz(prof, prob, sol, 1e-1))
print("\nGalerkin evidence for coercivity at eps = 0.1")
for r in coercivity_sweep(config, sizes=(8, 16)):
    print(f"  M={r.M:>3}: min eigenvalue {r.min_eigenvalue:.5f}, constraint residual {r.constraint_residual_max:.1e}")
