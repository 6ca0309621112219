"""The perturbed energy on sums of bubbles and its parameter gradients.

For ``u = sum_j alpha_j U_j`` (no correction term) the functional

    I(u) = 1/2 <u, u> - (1/2*) int (1 + eps K) |u|^(2*)

is evaluated without any fractional quadrature: the quadratic part expands
as ``sum_jk alpha_j alpha_k int U_j^p U_k`` by the bubble identity.  The
self-interactions ``int U_j^(2*)`` are closed forms and the nonlinear
integrand is written as a stable difference against the single-bubble
powers, so every term that is integrated numerically is genuinely small or
genuinely interacting.  All numeric pieces are components of a single
vector integral, which keeps energies and gradients mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bubbles import FracParams, bubble_energy_integral
from .interaction import C_N_beta, eps12_abbrev, eps_ij, pair_interaction_constant
from .kprofile import KProfile, eval_K
from .quadrature import Feature, QuadratureSpec, integrate_rn

DEFAULT_SPEC = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-30)


def alpha_hat(profile: KProfile, epsilon: float, params: FracParams) -> tuple:
    """Amplitudes ``(1 + eps K(z^k))^(-(N - 2 gamma)/4)`` used as the reference point."""
    expo = -(params.N - 2.0 * params.gamma) / 4.0
    return tuple((1.0 + epsilon * pt.K_value) ** expo for pt in profile.points)


@dataclass(frozen=True)
class PeakAnsatz:
    """Two weighted bubbles in the patches of two distinct critical points."""

    bubbles: tuple
    profile: KProfile
    epsilon: float
    params: FracParams

    def __post_init__(self):
        object.__setattr__(self, "bubbles", tuple(self.bubbles))
        if len(self.bubbles) != 2:
            raise ValueError("a peak ansatz has exactly two bubbles")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        ah = alpha_hat(self.profile, self.epsilon, self.params)
        r0 = self.profile.cutoff_radius
        owners = []
        for j, b in enumerate(self.bubbles):
            if abs(b.amplitude - ah[j]) > 0.5:
                out.append(f"bubble {j}: amplitude {b.amplitude:g} too far from {ah[j]:g}")
            dists = [np.linalg.norm(np.subtract(b.center, pt.z)) for pt in self.profile.points]
            k = int(np.argmin(dists))
            if dists[k] >= r0:
                out.append(f"bubble {j}: center outside every patch")
            owners.append(k)
        if len(set(owners)) != len(owners):
            out.append("bubbles must sit in distinct patches")
        return out

    def with_bubble(self, j: int, **changes) -> "PeakAnsatz":
        bs = list(self.bubbles)
        bs[j] = bs[j].with_(**changes)
        return PeakAnsatz(bs, self.profile, self.epsilon, self.params)


def _layout(bubbles, profile: KProfile | None):
    """Quadrature features: one per bubble, plus empty K patches.

    A bubble whose center is within half a width of a critical point is
    gridded around that point, so that the seams and kink planes of K are
    aligned with the cell boundaries while the peak stays well resolved.
    """
    feats = []
    r0 = profile.cutoff_radius if profile is not None else None
    used = set()
    for b in bubbles:
        center, bps = b.center, ()
        if profile is not None:
            d = [np.linalg.norm(np.subtract(b.center, pt.z)) for pt in profile.points]
            k = int(np.argmin(d))
            if d[k] < r0:
                bps = (r0, 2 * r0)
                used.add(k)
                if d[k] <= 0.5 / b.scale:
                    center = profile.points[k].z
        feats.append(Feature(center, 1.0 / b.scale, bps))
    if profile is not None:
        for k, pt in enumerate(profile.points):
            if k not in used:
                feats.append(Feature(pt.z, r0, (r0, 2 * r0)))
    return feats


def _nearest_point(profile: KProfile, y):
    d = [np.linalg.norm(np.subtract(y, pt.z)) for pt in profile.points]
    return profile.points[int(np.argmin(d))]


def _nearest_beta(profile: KProfile | None, y) -> float:
    return 0.0 if profile is None else _nearest_point(profile, y).beta


def _diff_pow(u, a, q):
    """``u^q - a^q`` for ``u >= a > 0`` without cancellation."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a**q * np.expm1(q * np.log1p((u - a) / a))
    return np.where(a > 0, out, u**q)


@dataclass
class FunctionalTerms:
    """Energy and exact gradients of the functional at a bubble configuration."""

    energy: float
    grad_alpha: np.ndarray
    grad_lambda: np.ndarray
    grad_center: np.ndarray  # shape (n_bubbles, N)
    quad_error: float
    grid: object = field(default=None, repr=False)
    pieces: dict = field(default_factory=dict)


def functional_terms(
    bubbles,
    params: FracParams,
    profile: KProfile | None = None,
    epsilon: float = 0.0,
    spec: QuadratureSpec | None = None,
    grid=None,
    gradients: bool = True,
) -> FunctionalTerms:
    """Energy and all first derivatives for an arbitrary list of bubbles.

    With ``grid`` (the ``grid`` of an earlier result) the integrals reuse that
    fixed rule instead of adapting, which is what finite-difference checks need.
    """
    spec = spec or DEFAULT_SPEC
    bubbles = list(bubbles)
    n, N, p, e = len(bubbles), params.N, params.p, params.e
    q = params.two_star
    alpha = np.array([b.amplitude for b in bubbles])
    lam = np.array([b.scale for b in bubbles])
    Y = np.array([b.center for b in bubbles])
    C0 = params.C0
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    use_K = profile is not None and epsilon != 0.0
    Kc = [_nearest_point(profile, y).K_value if use_K else 0.0 for y in Y]

    # Components: pair interactions, the numeric part of the nonlinear term,
    # then per bubble the numeric part of dJ/dalpha, dJ/dlam and dJ/dy_i.
    def reducer(X, w):
        out = []
        U, dU, dY = [], [], []
        for j in range(n):
            d = X - Y[j]
            qq = lam[j] ** 2 * np.einsum("ij,ij->i", d, d)
            u = C0 * (lam[j] / (1.0 + qq)) ** e
            U.append(u)
            dU.append(u * (e / lam[j]) * (1.0 - qq) / (1.0 + qq))
            dY.append((u * 2.0 * e * lam[j] ** 2 / (1.0 + qq))[:, None] * d)
        parts = [alpha[j] * U[j] for j in range(n)]
        u = sum(parts)
        Kx = eval_K(profile, X) if use_K else None
        for j, k in pairs:
            out.append(w @ (U[j] ** p * U[k]))
        # u^q - sum (alpha_j U_j)^q, split against the dominant part
        dom = np.max(parts, axis=0)
        nl = _diff_pow(u, dom, q) - sum(pt**q for pt in parts) + dom**q
        if use_K:
            nl = nl + epsilon * Kx * u**q
        out.append(w @ nl)
        if not gradients:
            return np.asarray(out)
        up = u**p if use_K else None
        for j in range(n):
            # (1 + eps K) u^p minus its single-bubble part (1 + eps K_j)(alpha_j U_j)^p,
            # K_j = K at the nearest critical point; the removed part pairs
            # with U_j in closed form and with dU_j to exactly zero
            h = (1.0 + epsilon * Kc[j]) * _diff_pow(u, parts[j], p)
            if use_K:
                h = h + epsilon * (Kx - Kc[j]) * up
            out.append(w @ (h * U[j]))
            # the pairing <u, dU_j> reduces to the cross terms int U_l^p dU_j
            g = sum((alpha[l] * U[l] ** p for l in range(n) if l != j), 0.0 * u) - h
            wg = w * g
            out.append(wg @ dU[j])
            out.extend(wg @ dY[j])
        return np.asarray(out)

    # absolute tolerances follow the expected size of each component, so that
    # components vanishing by symmetry cannot stall the refinement
    A = bubble_energy_integral(params)
    inter = max((eps_ij(lam[j], lam[k], Y[j], Y[k], params) for j, k in pairs), default=0.0)
    sizes = [A * max(inter, 1e-300)] * len(pairs)
    kscale = epsilon * (profile.global_bound if profile is not None else 0.0)
    sizes.append(A * (inter + kscale))
    for j in range(n if gradients else 0):
        beta = _nearest_beta(profile, Y[j])
        force = inter + kscale * lam[j] ** (-beta)
        sizes += [A * (inter + kscale), A * force / lam[j]] + [A * force * lam[j]] * N
    abs_tol = np.maximum(spec.abs_tol, spec.rel_tol * np.maximum(np.asarray(sizes), 1e-300))
    if grid is None:
        res = integrate_rn(
            None,
            spec.with_(abs_tol=abs_tol),
            dim=N,
            features=_layout(bubbles, profile),
            decay=2.0 * N,
            reducer=reducer,
        )
        v, qerr, grid = res.value, res.error_estimate, res.grid
    else:
        v, qerr = grid.integrate(reducer=reducer), float("nan")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    it = iter(v)
    cross_pair = {pr: next(it) for pr in pairs}
    nl_num = next(it)

    quad = float(np.sum(alpha**2) * A)
    for (j, k), val in cross_pair.items():
        quad += 2.0 * alpha[j] * alpha[k] * val
    nonlin = float(np.sum(alpha**q) * A + nl_num)
    energy = 0.5 * quad - nonlin / q

    ga, gl, gc = np.zeros(n), np.zeros(n), np.zeros((n, N))
    for j in range(n if gradients else 0):
        hU = next(it)
        lin = alpha[j] * A + sum(alpha[k] * cross_pair[tuple(sorted((j, k)))] for k in range(n) if k != j)
        ga[j] = lin - (1.0 + epsilon * Kc[j]) * alpha[j] ** p * A - hU
        gl[j] = alpha[j] * next(it)
        for i in range(N):
            gc[j, i] = alpha[j] * next(it)
    return FunctionalTerms(
        energy=float(energy),
        grad_alpha=ga,
        grad_lambda=gl,
        grad_center=gc,
        quad_error=float(qerr),
        grid=grid,
        pieces={"quadratic": quad, "nonlinear": nonlin, "cross": cross_pair},
    )


# --------------------------------------------------------------------------
# ansatz-level interface


def energy(ansatz: PeakAnsatz, spec: QuadratureSpec | None = None) -> float:
    return functional_terms(ansatz.bubbles, ansatz.params, ansatz.profile, ansatz.epsilon, spec).energy


def grad_alpha(ansatz: PeakAnsatz, j: int, spec: QuadratureSpec | None = None) -> float:
    return float(functional_terms(ansatz.bubbles, ansatz.params, ansatz.profile, ansatz.epsilon, spec).grad_alpha[j])


def grad_lambda(ansatz: PeakAnsatz, k: int, spec: QuadratureSpec | None = None) -> float:
    return float(functional_terms(ansatz.bubbles, ansatz.params, ansatz.profile, ansatz.epsilon, spec).grad_lambda[k])


def grad_center(ansatz: PeakAnsatz, k: int, i: int, spec: QuadratureSpec | None = None) -> float:
    return float(
        functional_terms(ansatz.bubbles, ansatz.params, ansatz.profile, ansatz.epsilon, spec).grad_center[k, i]
    )


def single_bubble_level(params: FracParams) -> float:
    """``I_0(U) = (gamma/N) int U^(2*)``, the same for every center and scale."""
    return params.gamma / params.N * bubble_energy_integral(params)


def scale_derivative_prediction(ansatz: PeakAnsatz, k: int) -> dict:
    """The two leading terms of dJ/dlam_k: the K-term and the interaction term."""
    P, prof = ansatz.params, ansatz.profile
    pt = prof.points[k]
    lam = ansatz.bubbles[k].scale
    d = float(np.linalg.norm(np.subtract(prof.points[0].z, prof.points[1].z)))
    e12 = eps12_abbrev(ansatz.bubbles[0].scale, ansatz.bubbles[1].scale, P)
    k_term = C_N_beta(P, pt.beta) * ansatz.epsilon * lam ** (-pt.beta - 1.0) * pt.sum_a
    i_term = pair_interaction_constant(P) * e12 / (lam * d ** (P.N - 2 * P.gamma))
    return {"K_term": k_term, "interaction_term": i_term, "total": k_term + i_term}


def lagrange_multiplier_estimates(ansatz: PeakAnsatz) -> dict:
    """Right-hand sides of the multiplier bounds with unit constants.

    Returns ``B`` (one bound per bubble, for the lambda multipliers) and ``C``
    (for the center multipliers), using each point's ``sigma``.
    """
    P, prof, eps = ansatz.params, ansatz.profile, ansatz.epsilon
    bs = ansatz.bubbles
    e12 = eps12_abbrev(bs[0].scale, bs[1].scale, P)
    offs = [float(np.linalg.norm(np.subtract(b.center, pt.z))) for b, pt in zip(bs, prof.points)]
    B, C = [], []
    for k, b in enumerate(bs):
        lam, pt = b.scale, prof.points[k]
        sB = sum(
            eps / bj.scale ** (ptj.beta + 1) + eps * oj ** (ptj.beta + 1) for bj, ptj, oj in zip(bs, prof.points, offs)
        )
        B.append(lam * e12 + lam**2 * sB)
        sC = sum(
            eps / bj.scale ** (ptj.beta - 1 + ptj.sigma) + eps * bj.scale * oj ** (ptj.beta + ptj.sigma)
            for bj, ptj, oj in zip(bs, prof.points, offs)
        )
        C.append((eps / lam ** (pt.beta - 1) * lam * offs[k] + e12) / lam**2 + sC / lam)
    return {"B": tuple(B), "C": tuple(C), "eps12": e12}


def energy_record(ansatz: PeakAnsatz, spec: QuadratureSpec | None = None) -> dict:
    """JSON-ready summary of energy, gradients and the leading-term comparison."""
    t = functional_terms(ansatz.bubbles, ansatz.params, ansatz.profile, ansatz.epsilon, spec)
    preds = [scale_derivative_prediction(ansatz, k) for k in range(2)]
    rel = [abs(t.grad_lambda[k] - preds[k]["total"]) / abs(preds[k]["total"]) for k in range(2)]
    return {
        "params": {"N": ansatz.params.N, "gamma": ansatz.params.gamma, "epsilon": ansatz.epsilon},
        "lambda": [b.scale for b in ansatz.bubbles],
        "energy": t.energy,
        "energy_ratio_to_single": t.energy / single_bubble_level(ansatz.params),
        "grads": {
            "alpha": t.grad_alpha.tolist(),
            "lambda": t.grad_lambda.tolist(),
            "center": t.grad_center.tolist(),
        },
        "lemma_predictions": preds,
        "relative_errors": rel,
    }
