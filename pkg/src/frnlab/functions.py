"""Radial test functions with declared decay and, where known, exact Laplacians.

These are the objects handed to the quadrature layer: vectorised callables
that also carry ``center``, ``features`` and ``decay``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .bubbles import Bubble, FracParams, bubble_dcenter, bubble_dlambda, eval_bubble
from .quadrature import Feature


class RadialShape:
    """Base class: radial about ``center`` with length scale ``scale``."""

    decay: float = math.inf

    def __init__(self, center, scale: float):
        self.center = tuple(float(v) for v in np.ravel(center))
        self.scale = float(scale)

    @property
    def features(self):
        return [Feature(self.center, self.scale)]

    def _r2(self, X):
        d = np.asarray(X, dtype=float) - np.asarray(self.center)
        return np.einsum("...i,...i->...", d, d)


class BubbleShape(RadialShape):
    """A bubble as a quadrature-ready function."""

    def __init__(self, bubble: Bubble, params: FracParams):
        super().__init__(bubble.center, 1.0 / bubble.scale)
        self.bubble, self.params = bubble, params
        self.decay = 2.0 * params.e

    def __call__(self, X):
        return eval_bubble(self.bubble, self.params, X)

    @property
    def frac_laplacian(self):
        if self.bubble.amplitude != 1.0:
            return None
        b, P = self.bubble, self.params

        def lap(X, params=None):
            return eval_bubble(b, P, X) ** P.p

        return lap


class BubbleDLambda(RadialShape):
    """Scale derivative of a normalised bubble; its Laplacian is ``p U^(p-1) dU``."""

    def __init__(self, bubble: Bubble, params: FracParams):
        super().__init__(bubble.center, 1.0 / bubble.scale)
        self.bubble, self.params = bubble, params
        self.decay = 2.0 * params.e

    def __call__(self, X):
        return bubble_dlambda(self.bubble, self.params, X)

    def frac_laplacian(self, X, params=None):
        P = self.params
        u = eval_bubble(self.bubble, P, X)
        return P.p * u ** (P.p - 1.0) * bubble_dlambda(self.bubble, P, X)


class BubbleDCenter:
    """Center derivative of a normalised bubble (not radial)."""

    def __init__(self, bubble: Bubble, params: FracParams, i: int):
        self.bubble, self.params, self.i = bubble, params, i
        self.scale = 1.0 / bubble.scale
        self.decay = 2.0 * params.e + 1.0
        self.center = None

    @property
    def features(self):
        return [Feature(self.bubble.center, self.scale)]

    def __call__(self, X):
        return bubble_dcenter(self.bubble, self.params, X, self.i)

    def frac_laplacian(self, X, params=None):
        P = self.params
        u = eval_bubble(self.bubble, P, X)
        return P.p * u ** (P.p - 1.0) * bubble_dcenter(self.bubble, P, X, self.i)


class Gaussian(RadialShape):
    """``amplitude * exp(-|x - c|^2 / width^2)``.

    The Laplacian is the confluent hypergeometric closed form
    ``4^g Gamma(N/2+g)/Gamma(N/2) 1F1(N/2+g; N/2; -r^2)`` in units of the width,
    evaluated through Kummer's transformation for stability.
    """

    def __init__(self, center, width: float, amplitude: float = 1.0):
        super().__init__(center, width)
        self.amplitude = float(amplitude)
        self.decay = 60.0

    def __call__(self, X):
        return self.amplitude * np.exp(-self._r2(X) / self.scale**2)

    def frac_laplacian(self, X, params: FracParams):
        N, g = params.N, params.gamma
        z = self._r2(X) / self.scale**2
        a, b = 0.5 * N + g, 0.5 * N
        # 1F1(a; b; -z) = e^-z 1F1(b - a; b; z) is accurate for moderate z;
        # for large z use the algebraic asymptotic series
        val = np.empty_like(z)
        small = z < 40.0
        val[small] = np.exp(-z[small]) * special.hyp1f1(b - a, b, z[small])
        zb = z[~small]
        if zb.size:
            # Gamma(b)/Gamma(b-a) z^-a sum_k (a)_k (a-b+1)_k / k! z^-k
            term = np.ones_like(zb)
            tot = np.ones_like(zb)
            for k in range(30):
                term = term * (a + k) * (a - b + 1 + k) / ((k + 1) * zb)
                tot = tot + term
            val[~small] = math.gamma(b) / math.gamma(b - a) * zb ** (-a) * tot
        c = 4.0**g * math.gamma(a) / math.gamma(b)
        return self.amplitude * c * val * self.scale ** (-2.0 * g)


class RationalBump(RadialShape):
    """``amplitude * (1 + |x - c|^2 / scale^2)^(-power)``.

    Its Laplacian is a Gauss hypergeometric function of ``-r^2``, evaluated
    after the Pfaff transformation so the argument lies in ``[0, 1)``.
    """

    def __init__(self, center, scale: float, power: float, amplitude: float = 1.0):
        super().__init__(center, scale)
        self.power = float(power)
        self.amplitude = float(amplitude)
        self.decay = 2.0 * self.power

    def __call__(self, X):
        return self.amplitude * (1.0 + self._r2(X) / self.scale**2) ** (-self.power)

    def frac_laplacian(self, X, params: FracParams):
        N, g = params.N, params.gamma
        a, b, c = self.power + g, 0.5 * N + g, 0.5 * N
        z = self._r2(X) / self.scale**2
        w = z / (1.0 + z)
        # Pfaff: 2F1(a, b; c; -z) = (1+z)^-a 2F1(a, c - b; c; z/(1+z))
        val = (1.0 + z) ** (-a) * special.hyp2f1(a, c - b, c, w)
        const = 4.0**g * math.gamma(a) * math.gamma(b) / (math.gamma(self.power) * math.gamma(c))
        return self.amplitude * const * val * self.scale ** (-2.0 * g)


def symmetry_corpus(params: FracParams, size: int = 20, seed: int = 7) -> list:
    """Pairs of test functions with exact Laplacians at assorted centers and widths."""
    rng = np.random.default_rng(seed)
    N = params.N

    def pick():
        kind = rng.integers(3)
        c = rng.uniform(-1.5, 1.5, size=N) * (rng.uniform() < 0.7)
        s = float(np.exp(rng.uniform(-0.7, 0.7)))
        if kind == 0:
            return Gaussian(c, s, rng.uniform(0.5, 2.0))
        if kind == 1:
            return RationalBump(c, s, rng.uniform(params.N / 2 + 0.2, params.N + 1.0), rng.uniform(0.5, 2.0))
        return BubbleShape(Bubble(c, 1.0 / s), params)

    return [(pick(), pick()) for _ in range(size)]


def pairing_asymmetry(f, g, params: FracParams, spec=None) -> float:
    """``|<Lf, g> - <f, Lg>| / |<f, Lg>|`` with ``L`` the fractional Laplacian."""
    from .quadrature import hgamma_inner

    a = hgamma_inner(f, g, params, spec)
    b = hgamma_inner(g, f, params, spec)
    return abs(a - b) / abs(b)
