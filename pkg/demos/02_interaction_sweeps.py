"""Two-bubble integral estimates on a concentration sweep.

Each estimate is computed by adaptive quadrature and compared with its
leading term; the scaled values are then extrapolated in lambda to recover
the constants that enter the reduced system.
"""

from frnlab.bubbles import FracParams
from frnlab.interaction import (
    C_N_beta,
    b10_constant,
    extrapolate,
    two_bubble_config,
    verify_cross_dlambda,
    verify_interaction_integral,
    verify_k_weighted_dlambda,
)
from frnlab.kprofile import demo_profile

P = FracParams(3, 0.5)
prof = demo_profile()
lams = (10.0, 30.0, 100.0)

print("int U_i^p U_j against its leading term, |y_i - y_j| = 1")
for lam in lams:
    r = verify_interaction_integral(two_bubble_config(P, lam))
    print(f"  lambda={lam:>5}: numeric {r.numeric:.6e} predicted {r.predicted_leading:.6e} rel {r.relative_error:.2e}")

print("\nK-weighted scale derivative, scaled by lambda^(beta+1)/sum(a)")
scaled = []
for lam in lams + (300.0,):
    r = verify_k_weighted_dlambda(two_bubble_config(P, lam, profile=prof), 0)
    scaled.append(r.extras["scaled"])
    print(f"  lambda={lam:>5}: {scaled[-1]:.5f}")
limit = extrapolate(lams + (300.0,), scaled, P.N - 1.5)
print(f"  extrapolated {limit:.5f}, closed form {-C_N_beta(P, 1.5):.5f}")

print("\ncross term int U_k^(p-1) dU_k/dlam U_l, scaled")
scaled = [verify_cross_dlambda(two_bubble_config(P, lam, distance=2.0), 0).extras["scaled"] for lam in lams]
print("  " + ", ".join(f"{v:.4f}" for v in scaled))
print(f"  extrapolated {extrapolate(lams, scaled, 2 * P.gamma):.4f}, closed form {b10_constant(P):.4f}")
