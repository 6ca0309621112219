"""The two-peak approximate solution: assembly, equation residual, positivity.

The approximate solution is ``u = alpha_1 U_1 + alpha_2 U_2`` with scales
from the reduced system and amplitudes ``alpha_hat``.  Its equation residual

    R = (-Delta)^gamma u - (1 + eps K) u^p = sum_j alpha_j U_j^p - (1 + eps K) u^p

is available pointwise in closed form and is measured in the dual critical
norm ``L^(2N/(N+2gamma))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bubbles import Bubble, FracParams, eval_bubble
from .energy import PeakAnsatz, alpha_hat, functional_terms, single_bubble_level
from .kprofile import KProfile, eval_K
from .quadrature import Feature, QuadratureSpec, integrate_rn
from .reduction import ReducedProblem, ReducedSolution, peak_parameters

RESIDUAL_SPEC = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-300, strict=False)


@dataclass(frozen=True)
class ResidualReport:
    epsilon: float
    lam: tuple
    residual_dual_norm: float
    energy: float
    energy_ratio_to_single: float
    min_grid_value: float
    quad_error: float = 0.0

    def row(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "lambda1": self.lam[0],
            "lambda2": self.lam[1],
            "residual_norm": self.residual_dual_norm,
            "energy": self.energy,
            "energy_ratio": self.energy_ratio_to_single,
            "min_grid_value": self.min_grid_value,
        }


@dataclass(frozen=True)
class GridSpec:
    """Diagnostic grid: a cube of half-width ``extent`` with ``n`` points per
    axis, radial shells around each peak, and far-field points."""

    n: int = 21
    extent: float = 3.0
    shells: int = 12
    directions: int = 26
    far_radii: tuple = (1e1, 1e2, 1e3)

    def refined(self) -> "GridSpec":
        return GridSpec(2 * self.n - 1, self.extent, 2 * self.shells, self.directions, self.far_radii)


def build_ansatz(profile: KProfile, prob: ReducedProblem, solution: ReducedSolution, epsilon: float) -> PeakAnsatz:
    """Bubbles at the critical points with scales ``t_k L_eps^(1/beta_k)`` and amplitudes ``alpha_hat``."""
    P = prob.params
    pk = peak_parameters(prob, epsilon, solution)
    amps = alpha_hat(profile, epsilon, P)
    bubbles = [Bubble(pt.z, lam, a) for pt, lam, a in zip(profile.points, pk["lambda"], amps)]
    return PeakAnsatz(bubbles, profile, epsilon, P)


def ansatz_at_scales(profile: KProfile, params: FracParams, lambdas, epsilon: float) -> PeakAnsatz:
    """Same construction with explicitly given scales."""
    amps = alpha_hat(profile, epsilon, params)
    return PeakAnsatz([Bubble(pt.z, lam, a) for pt, lam, a in zip(profile.points, lambdas, amps)], profile, epsilon, params)


def residual(bubbles, params: FracParams, profile: KProfile | None, epsilon: float, X) -> np.ndarray:
    """Pointwise equation residual of a weighted sum of bubbles."""
    X = np.asarray(X, dtype=float)
    parts = [b.amplitude * eval_bubble(b.with_(amplitude=1.0), params, X) for b in bubbles]
    u = sum(parts)
    lap = sum(b.amplitude * (pt / b.amplitude) ** params.p for b, pt in zip(bubbles, parts))
    weight = 1.0 + (epsilon * eval_K(profile, X) if profile is not None and epsilon else 0.0)
    return lap - weight * u**params.p


def _features(bubbles, profile):
    feats = []
    r0 = profile.cutoff_radius if profile is not None else None
    for b in bubbles:
        center, bps = b.center, ()
        if profile is not None:
            d = [np.linalg.norm(np.subtract(b.center, pt.z)) for pt in profile.points]
            k = int(np.argmin(d))
            if d[k] < r0:
                bps = (r0, 2 * r0)
                if d[k] <= 0.5 / b.scale:
                    center = profile.points[k].z
        feats.append(Feature(center, 1.0 / b.scale, bps))
    return feats


def residual_dual_norm(bubbles, params: FracParams, profile=None, epsilon=0.0, spec=None):
    """``||R||`` in ``L^(2N/(N+2gamma))``; returns ``(norm, quadrature error of the norm)``."""
    spec = spec or RESIDUAL_SPEC
    bubbles = list(bubbles)
    s = 2.0 * params.N / (params.N + 2.0 * params.gamma)
    res = integrate_rn(
        lambda X: np.abs(residual(bubbles, params, profile, epsilon, X)) ** s,
        spec,
        dim=params.N,
        features=_features(bubbles, profile),
        decay=2.0 * params.N,
    )
    val = max(float(res.value), 0.0)
    norm = val ** (1.0 / s)
    err = norm * res.error_estimate / (s * val) if val > 0 else res.error_estimate
    return norm, err


def positivity_check(ansatz: PeakAnsatz, grid: GridSpec | None = None) -> float:
    """Minimum of the ansatz over a grid covering both patches and the far field."""
    g = grid or GridSpec()
    P = ansatz.params
    N = P.N
    pts = []
    ax = np.linspace(-g.extent, g.extent, g.n)
    pts.append(np.stack(np.meshgrid(*([ax] * N), indexing="ij"), axis=-1).reshape(-1, N))
    dirs = np.random.default_rng(0).normal(size=(g.directions, N))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for b in ansatz.bubbles:
        radii = np.geomspace(1e-2 / b.scale, 2.0 * ansatz.profile.cutoff_radius, g.shells)
        pts.append((np.asarray(b.center) + radii[:, None, None] * dirs[None]).reshape(-1, N))
        pts.append(np.asarray(b.center)[None])
    pts.append((np.asarray(g.far_radii)[:, None, None] * dirs[None]).reshape(-1, N))
    X = np.concatenate(pts)
    u = sum(eval_bubble(b, P, X) for b in ansatz.bubbles)
    return float(np.min(u))


def residual_norm(ansatz: PeakAnsatz, spec: QuadratureSpec | None = None, grid: GridSpec | None = None) -> ResidualReport:
    """Residual norm, energy level and positivity of a two-peak ansatz."""
    P = ansatz.params
    norm, err = residual_dual_norm(ansatz.bubbles, P, ansatz.profile, ansatz.epsilon, spec)
    en = functional_terms(ansatz.bubbles, P, ansatz.profile, ansatz.epsilon, gradients=False).energy
    return ResidualReport(
        epsilon=ansatz.epsilon,
        lam=tuple(b.scale for b in ansatz.bubbles),
        residual_dual_norm=norm,
        energy=en,
        energy_ratio_to_single=en / single_bubble_level(P),
        min_grid_value=positivity_check(ansatz, grid),
        quad_error=err,
    )


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
