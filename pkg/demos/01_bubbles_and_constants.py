"""Bubbles, their constants and the fractional Laplacian identity.

Run with ``python3 demos/01_bubbles_and_constants.py``.  Prints the closed-form
constants at a few (N, gamma) and checks ``(-Delta)^gamma U = U^p`` by direct
principal-value quadrature at points near and far from the peak.
"""

import numpy as np

from frnlab.bubbles import Bubble, FracParams, frac_laplacian_exact, geometric_constants, sobolev_constant
from frnlab.functions import BubbleShape
from frnlab.quadrature import pv_frac_laplacian

print(f"{'N':>2} {'gamma':>6} {'2*':>8} {'C0':>10} {'C1':>10} {'S_gamma':>10}")
for N, g in [(3, 0.5), (2, 0.5), (3, 0.75), (4, 0.25)]:
    P = FracParams(N, g)
    print(f"{N:>2} {g:>6} {P.two_star:>8.4f} {P.C0:>10.6f} {geometric_constants(P).C1:>10.6f} {sobolev_constant(P):>10.6f}")

print("\nprincipal value against the closed form, bubble at 0 with scale 3")
for N, g in [(3, 0.5), (2, 0.5), (3, 0.75)]:
    P = FracParams(N, g)
    b = Bubble(np.zeros(N), 3.0)
    f = BubbleShape(b, P)
    for r in (0.0, 0.1, 1.0, 10.0):
        x = np.zeros(N)
        x[0] = r
        num = pv_frac_laplacian(f, P, x)
        exact = float(frac_laplacian_exact(b, P, x[None])[0])
        print(f"  (N,gamma)=({N},{g}) |x|={r:<5} numeric {num:.10e}  exact {exact:.10e}  rel {abs(num - exact) / exact:.1e}")
