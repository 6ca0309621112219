"""Bubble profiles for the critical fractional equation.

A bubble is the positive solution

    U(x) = alpha * C0 * (lam / (1 + lam^2 |x - y|^2)) ** ((N - 2 gamma) / 2)

of ``(-Delta)^gamma U = U^p`` (for ``alpha = 1``).  Everything here is a pure
numpy function of its inputs, vectorised over the trailing axis of ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special


class DomainError(ValueError):
    """Parameters outside the admissible range."""


class ContractError(ValueError):
    """An operation was called outside its stated contract."""


@dataclass(frozen=True)
class FracParams:
    """Dimension ``N`` and fractional order ``gamma`` with derived exponents."""

    N: int
    gamma: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N!r}")
        if not (0.0 < self.gamma < 1.0):
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if not 2.0 * self.gamma < self.N:
            raise DomainError("need 2*gamma < N")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def two_star(self) -> float:
        return 2.0 * self.N / (self.N - 2.0 * self.gamma)

    @property
    def p(self) -> float:
        # defined through two_star so that p == two_star - 1 holds bit for bit
        return self.two_star - 1.0

    @property
    def e(self) -> float:
        """Decay exponent (N - 2 gamma) / 2 of a bubble."""
        return 0.5 * (self.N - 2.0 * self.gamma)

    @cached_property
    def C0(self) -> float:
        return bubble_amplitude_C0(self)

    @cached_property
    def sphere_area(self) -> float:
        return sphere_area(self.N)


@dataclass(frozen=True)
class Bubble:
    """A bubble with center ``y``, concentration ``lam`` and amplitude ``alpha``."""

    center: tuple
    scale: float
    amplitude: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(np.asarray(self.center, dtype=float)))
        object.__setattr__(self, "center", c)
        if not self.scale > 0:
            raise DomainError("bubble scale must be positive")
        if not self.amplitude > 0:
            raise DomainError("bubble amplitude must be positive")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.center)

    def with_(self, **changes) -> "Bubble":
        data = {"center": self.center, "scale": self.scale, "amplitude": self.amplitude}
        data.update(changes)
        return Bubble(**data)


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def _c0_formula(N: int, gamma: float) -> float:
    # also valid at gamma = 1, which recovers the classical amplitude
    e = 0.5 * (N - 2.0 * gamma)
    ratio = math.exp(special.gammaln(0.5 * (N + 2 * gamma)) - special.gammaln(e))
    return 2.0**e * ratio ** ((N - 2.0 * gamma) / (4.0 * gamma))


def bubble_amplitude_C0(params: FracParams) -> float:
    """Amplitude C0 for which the normalised bubble solves the equation."""
    return _c0_formula(params.N, params.gamma)


def sobolev_constant(params: FracParams) -> float:
    """Sharp fractional Sobolev constant in the form quoted by Lieb's theorem."""
    N, g = params.N, params.gamma
    base = (
        2.0 ** (-2 * g)
        * math.pi ** (-g)
        * math.gamma(0.5 * (N - 2 * g))
        / math.gamma(0.5 * (N + 2 * g))
        * (math.gamma(N) / math.gamma(0.5 * N)) ** (2 * g / N)
    )
    return base ** (-params.two_star / 2.0)


def fractional_constant(params: FracParams) -> float:
    """Positive kernel constant C_{N,gamma} for the principal-value operator.

    With this constant the Fourier symbol of the operator is |xi|^(2 gamma).
    """
    N, g = params.N, params.gamma
    return g * 4.0**g * math.gamma(0.5 * N + g) / (math.pi ** (0.5 * N) * math.gamma(1.0 - g))


def _split(b: Bubble, x):
    x = np.asarray(x, dtype=float)
    d = x - b.y
    r2 = np.einsum("...i,...i->...", d, d)
    return d, r2


def eval_bubble(b: Bubble, params: FracParams, x) -> np.ndarray:
    """Evaluate ``alpha * U_{y, lam}`` at points ``x`` (shape ``(..., N)``)."""
    _, r2 = _split(b, x)
    lam = b.scale
    return b.amplitude * params.C0 * (lam / (1.0 + lam * lam * r2)) ** params.e


def bubble_dlambda(b: Bubble, params: FracParams, x) -> np.ndarray:
    """Partial derivative of the bubble with respect to its scale."""
    _, r2 = _split(b, x)
    lam = b.scale
    q = lam * lam * r2
    u = b.amplitude * params.C0 * (lam / (1.0 + q)) ** params.e
    return u * (params.e / lam) * (1.0 - q) / (1.0 + q)


def bubble_dcenter(b: Bubble, params: FracParams, x, i: int) -> np.ndarray:
    """Partial derivative with respect to the ``i``-th center coordinate (0-based)."""
    if not 0 <= i < params.N:
        raise DomainError(f"coordinate index {i} outside 0..{params.N - 1}")
    d, r2 = _split(b, x)
    lam = b.scale
    q = lam * lam * r2
    u = b.amplitude * params.C0 * (lam / (1.0 + q)) ** params.e
    return u * 2.0 * params.e * lam * lam * d[..., i] / (1.0 + q)


def frac_laplacian_exact(b: Bubble, params: FracParams, x) -> np.ndarray:
    """Exact fractional Laplacian ``U^p`` of a normalised bubble."""
    if b.amplitude != 1.0:
        raise ContractError("the exact identity is only available for amplitude 1")
    return eval_bubble(b, params, x) ** params.p


@dataclass(frozen=True)
class GeometricConstants:
    C1: float
    beta: float | None = None
    moment: float | None = None
    signed_moment: float | None = None
    extras: dict = field(default_factory=dict)


def _radial_quad(g, N: int) -> float:
    """Integrate a radial function over R^N by splitting [0, 1] and [1, inf)."""
    inner, _ = integrate.quad(lambda r: g(r) * r ** (N - 1), 0.0, 1.0, epsabs=0, epsrel=1e-13, limit=200)
    # substitute r = 1/s on the unbounded part
    outer, _ = integrate.quad(
        lambda s: g(1.0 / s) * s ** (-N - 1) if s > 0 else 0.0, 0.0, 1.0, epsabs=0, epsrel=1e-13, limit=200
    )
    return sphere_area(N) * (inner + outer)


def geometric_constants(params: FracParams, beta: float | None = None) -> GeometricConstants:
    """Constants entering the interaction and K-weighted estimates.

    ``C1 = int (1+|x|^2)^(-(N+2 gamma)/2)``; for ``beta`` in ``(1, N - 2 gamma)`` also
    the moments ``int |x|^beta (1+|x|^2)^(-(N+1))`` and its signed variant with the
    extra factor ``1 - |x|^2``.  Each is computed by 1-D radial quadrature.
    """
    N, g = params.N, params.gamma
    C1 = _radial_quad(lambda r: (1.0 + r * r) ** (-(N + 2 * g) / 2.0), N)
    if beta is None:
        return GeometricConstants(C1=C1)
    if not (1.0 < beta < N - 2 * g):
        raise DomainError(f"beta must lie in (1, N - 2 gamma) = (1, {N - 2 * g}), got {beta}")
    moment = _radial_quad(lambda r: r**beta * (1.0 + r * r) ** (-(N + 1)), N)
    signed = _radial_quad(lambda r: r**beta * (1.0 - r * r) * (1.0 + r * r) ** (-(N + 1)), N)
    return GeometricConstants(C1=C1, beta=beta, moment=moment, signed_moment=signed)


def axis_moment_factor(N: int, beta: float) -> float:
    """Average of ``|omega_1|^beta`` over the unit sphere of R^N."""
    return math.exp(
        special.gammaln(N / 2.0)
        + special.gammaln((beta + 1) / 2.0)
        - 0.5 * math.log(math.pi)
        - special.gammaln((N + beta) / 2.0)
    )


def bubble_energy_integral(params: FracParams) -> float:
    """Closed form of ``int U^{2*}`` for a normalised bubble (any center and scale)."""
    N = params.N
    return params.C0**params.two_star * math.pi ** (N / 2.0) * math.gamma(N / 2.0) / math.gamma(N)
