"""Galerkin evidence for coercivity of the second variation on the orthogonal space.

The trial space is spanned by bubbles at jittered parameters (the
dictionary) together with the kernel functions ``U_k``, ``dU_k/dlam`` and
``dU_k/dy_i``.  Every dictionary function is projected, in the H^gamma inner
product, onto the orthogonal complement of the kernel span.  All inner
products are single integrals because each function has a closed-form
fractional Laplacian:

    (-Delta)^gamma U = U^p,   (-Delta)^gamma dU = p U^(p-1) dU.

On the projected space the form

    Q(v) = <v, v> - p int (1 + eps K) W^(p-1) v^2,   W = sum alpha_k U_k,

is compared with ``<v, v>`` through a generalised symmetric eigenproblem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .bubbles import Bubble, FracParams, _radial_quad, bubble_energy_integral
from .kprofile import KProfile, eval_K
from .quadrature import Feature, QuadratureSpec, integrate_rn

DEFAULT_SPEC = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-300)
COND_LIMIT = 1e10


class BasisError(RuntimeError):
    """The dictionary is numerically dependent or the Gram matrix is not positive."""


@dataclass(frozen=True)
class BasisFunction:
    """A bubble (``kind='U'``) or one of its derivatives (``'dlam'``, ``'dy'`` with ``axis``)."""

    bubble: Bubble
    kind: str = "U"
    axis: int = -1


@dataclass(frozen=True)
class GalerkinBasis:
    dictionary: tuple
    kernel: tuple
    params: FracParams

    @property
    def size(self) -> int:
        return len(self.dictionary)

    def prefix(self, M: int) -> "GalerkinBasis":
        return GalerkinBasis(self.dictionary[:M], self.kernel, self.params)


@dataclass
class Configuration:
    """Bubbles (with amplitudes) defining W, plus the perturbation."""

    bubbles: tuple
    params: FracParams
    profile: KProfile | None = None
    epsilon: float = 0.0

    @classmethod
    def from_ansatz(cls, ansatz) -> "Configuration":
        return cls(tuple(ansatz.bubbles), ansatz.params, ansatz.profile, ansatz.epsilon)


@dataclass
class GalerkinReport:
    M: int
    min_eigenvalue: float
    eigenvalues: np.ndarray
    constraint_residual_max: float
    dimension: int
    gram_condition: float
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "min_eigenvalue": self.min_eigenvalue,
            "constraint_residual_max": self.constraint_residual_max,
            "dimension": self.dimension,
            "gram_condition": self.gram_condition,
        }


def kernel_functions(bubbles, params: FracParams) -> tuple:
    """The ``2 (N + 2)`` functions spanning the kernel directions of two bubbles."""
    out = []
    for b in bubbles:
        u = b.with_(amplitude=1.0)
        out.append(BasisFunction(u, "U"))
        out.append(BasisFunction(u, "dlam"))
        out.extend(BasisFunction(u, "dy", i) for i in range(params.N))
    return tuple(out)


def build_dictionary(bubbles, M: int, params: FracParams, seed: int = 0, jitter: float = 0.6) -> GalerkinBasis:
    """``M`` unit bubbles near the given ones, alternating between peaks.

    Scales are multiplied by ``exp(u)`` with ``u`` uniform in ``[-jitter, jitter]``
    and centers moved by up to ``jitter / lam``.  The list for a given seed is
    fixed, so smaller bases are prefixes of larger ones (nested subspaces).
    """
    rng = np.random.default_rng(seed)
    bubbles = list(bubbles)
    N = params.N
    dic = []
    for a in range(M):
        b = bubbles[a % len(bubbles)]
        lam = b.scale * float(np.exp(rng.uniform(-jitter, jitter)))
        off = rng.normal(size=N)
        off *= jitter / b.scale * rng.uniform(0.2, 1.0) / np.linalg.norm(off)
        dic.append(BasisFunction(Bubble(np.asarray(b.center) + off, lam), "U"))
    return GalerkinBasis(tuple(dic), kernel_functions(bubbles, params), params)


# --------------------------------------------------------------------------
# evaluation of basis functions and their fractional Laplacians


def _eval_all(funcs, params: FracParams, X):
    """Values and fractional Laplacians, both of shape ``(len(funcs), n)``."""
    e, p, C0 = params.e, params.p, params.C0
    F = np.empty((len(funcs), X.shape[0]))
    L = np.empty_like(F)
    cache = {}
    for a, f in enumerate(funcs):
        b = f.bubble
        key = (b.center, b.scale)
        if key not in cache:
            d = X - np.asarray(b.center)
            q = b.scale**2 * np.einsum("ij,ij->i", d, d)
            u = C0 * (b.scale / (1.0 + q)) ** e
            cache[key] = (d, q, u)
        d, q, u = cache[key]
        if f.kind == "U":
            F[a] = u
            L[a] = u**p
            continue
        if f.kind == "dlam":
            F[a] = u * (e / b.scale) * (1.0 - q) / (1.0 + q)
        else:
            F[a] = u * 2.0 * e * b.scale**2 * d[:, f.axis] / (1.0 + q)
        L[a] = p * u ** (p - 1.0) * F[a]
    return F, L


def _norm_scale(f: BasisFunction, params: FracParams, unit: dict) -> float:
    """Approximate ``<f, f>`` from its value for a unit-scale bubble."""
    s = f.bubble.scale
    if f.kind == "U":
        return unit["U"]
    if f.kind == "dlam":
        return unit["dlam"] / s**2
    return unit["dy"] * s**2


def _unit_norms(params: FracParams) -> dict:
    p, e, N = params.p, params.e, params.N
    C0 = params.C0
    # radial integrals for a unit bubble at the origin
    u = lambda r: C0 * (1.0 + r * r) ** (-e)  # noqa: E731
    dl = _radial_quad(lambda r: p * u(r) ** (p + 1) * (e * (1 - r * r) / (1 + r * r)) ** 2, N)
    dy = _radial_quad(lambda r: p * u(r) ** (p + 1) * (2 * e * r / (1 + r * r)) ** 2 / N, N)
    return {"U": bubble_energy_integral(params), "dlam": dl, "dy": dy}


def assemble(funcs, config: Configuration, spec: QuadratureSpec | None = None):
    """Gram matrix ``<f_a, f_b>`` and potential matrix ``p int (1+eps K) W^(p-1) f_a f_b``."""
    spec = spec or DEFAULT_SPEC
    P = config.params
    n = len(funcs)
    alpha = np.array([b.amplitude for b in config.bubbles])
    units = [b.with_(amplitude=1.0) for b in config.bubbles]
    prof, eps = config.profile, config.epsilon
    use_K = prof is not None and eps != 0.0

    def reducer(X, w):
        F, L = _eval_all(funcs, P, X)
        Wsum = sum(a * P.C0 * (b.scale / (1.0 + b.scale**2 * np.sum((X - np.asarray(b.center)) ** 2, axis=1))) ** P.e
                   for a, b in zip(alpha, units))
        pot = P.p * Wsum ** (P.p - 1.0)
        if use_K:
            pot = pot * (1.0 + eps * eval_K(prof, X))
        G = (L * w) @ F.T
        V = (F * (w * pot)) @ F.T
        return np.concatenate([G.ravel(), V.ravel()])

    unit = _unit_norms(P)
    s = np.sqrt([_norm_scale(f, P, unit) for f in funcs])
    scale = np.outer(s, s).ravel()
    abs_tol = np.maximum(spec.abs_tol, spec.rel_tol * np.concatenate([scale, scale]))
    feats = _features(config)
    res = integrate_rn(None, spec.with_(abs_tol=abs_tol), dim=P.N, features=feats, decay=2.0 * P.N, reducer=reducer)
    v = np.asarray(res.value)
    G = v[: n * n].reshape(n, n)
    V = v[n * n :].reshape(n, n)
    return 0.5 * (G + G.T), 0.5 * (V + V.T), res


def _features(config: Configuration):
    prof = config.profile
    feats = []
    used = set()
    for b in config.bubbles:
        bps, center = (), b.center
        if prof is not None:
            d = [np.linalg.norm(np.subtract(b.center, pt.z)) for pt in prof.points]
            k = int(np.argmin(d))
            if d[k] < prof.cutoff_radius:
                used.add(k)
                bps = (prof.cutoff_radius, 2 * prof.cutoff_radius)
                if d[k] <= 0.5 / b.scale:
                    center = prof.points[k].z
        feats.append(Feature(center, 0.25 / b.scale, bps))
    if prof is not None:
        for k, pt in enumerate(prof.points):
            if k not in used:
                feats.append(Feature(pt.z, prof.cutoff_radius, (prof.cutoff_radius, 2 * prof.cutoff_radius)))
    return feats


# --------------------------------------------------------------------------
# projection and eigenvalues


@dataclass
class Projection:
    """Coefficients ``T`` (augmented coordinates x projected functions)."""

    T: np.ndarray
    G_full: np.ndarray
    V_full: np.ndarray
    n_dict: int
    n_kernel: int
    constraint_residual_max: float
    projected_norms: np.ndarray
    dimension: int


def project_to_E2(
    basis: GalerkinBasis,
    config: Configuration,
    spec: QuadratureSpec | None = None,
    keep_in_trial: tuple = (),
    matrices=None,
) -> Projection:
    """Project every dictionary function off the kernel span.

    Kernel functions whose index is in ``keep_in_trial`` are not projected
    out; they are appended unchanged to the trial space instead (used by the
    kernel-detection control).
    """
    funcs = list(basis.dictionary) + list(basis.kernel)
    M, nk = basis.size, len(basis.kernel)
    G, V, _ = matrices if matrices is not None else assemble(funcs, config, spec)
    d = np.sqrt(np.diag(G))
    if np.any(~(d > 0)):
        raise BasisError("non-positive diagonal in the Gram matrix")
    cons = [i for i in range(nk) if i not in set(keep_in_trial)]
    Kidx = [M + i for i in cons]
    Gkk = G[np.ix_(Kidx, Kidx)]
    Gkd = G[np.ix_(Kidx, range(M))]
    coef = linalg.solve(Gkk, Gkd, assume_a="pos")
    T = np.zeros((M + nk, M + len(keep_in_trial)))
    T[:M, :M] = np.eye(M)
    T[np.ix_(Kidx, range(M))] = -coef
    for c, i in enumerate(keep_in_trial):
        T[M + i, M + c] = 1.0
    # residual pairings of projected dictionary functions with the constraints,
    # relative to the norms of the two functions
    R = G[Kidx, :] @ T[:, :M]
    pn = np.sqrt(np.maximum(np.einsum("ia,ij,ja->a", T[:, :M], G, T[:, :M]), 0.0))
    denom = np.outer(d[Kidx], np.maximum(pn, 1e-300))
    res = float(np.max(np.abs(R) / denom)) if R.size else 0.0
    return Projection(
        T=T,
        G_full=G,
        V_full=V,
        n_dict=M,
        n_kernel=nk,
        constraint_residual_max=res,
        projected_norms=pn / d[:M],
        dimension=T.shape[1],
    )


def min_eigen_quadratic_form(
    basis: GalerkinBasis,
    config: Configuration,
    spec: QuadratureSpec | None = None,
    include_kernel: tuple = (),
    matrices=None,
    drop_tol: float = 1e-10,
) -> GalerkinReport:
    """Smallest generalised eigenvalue of ``(Q, G)`` on the projected space."""
    if not isinstance(config, Configuration):
        config = Configuration.from_ansatz(config)
    pr = project_to_E2(basis, config, spec, keep_in_trial=include_kernel, matrices=matrices)
    T = pr.T
    G = T.T @ pr.G_full @ T
    Q = G - T.T @ pr.V_full @ T
    # normalise, then drop numerically null directions (e.g. a dictionary
    # function that coincided with a kernel function)
    dn = np.sqrt(np.abs(np.diag(G)))
    live = dn > drop_tol * max(1.0, float(np.max(dn)))
    if not np.all(live):
        G, Q, dn = G[np.ix_(live, live)], Q[np.ix_(live, live)], dn[live]
    G = G / np.outer(dn, dn)
    Q = Q / np.outer(dn, dn)
    ev_g = linalg.eigvalsh(G)
    if ev_g[0] <= 0:
        raise BasisError("projected Gram matrix is not positive definite")
    cond = float(ev_g[-1] / ev_g[0])
    if cond > COND_LIMIT:
        raise BasisError(f"Gram condition number {cond:.2e} exceeds {COND_LIMIT:.0e}; rebuild the dictionary")
    ev = linalg.eigh(Q, G, eigvals_only=True)
    return GalerkinReport(
        M=basis.size,
        min_eigenvalue=float(ev[0]),
        eigenvalues=ev,
        constraint_residual_max=pr.constraint_residual_max,
        dimension=int(G.shape[0]),
        gram_condition=cond,
    )


def coercivity_sweep(config: Configuration, sizes=(8, 16, 32), seed: int = 0, spec=None) -> list[GalerkinReport]:
    """Reports for nested dictionaries; a single assembly serves all sizes."""
    Mmax = max(sizes)
    full = build_dictionary(config.bubbles, Mmax, config.params, seed)
    funcs = list(full.dictionary) + list(full.kernel)
    G, V, _ = assemble(funcs, config, spec)
    out = []
    for M in sizes:
        idx = list(range(M)) + list(range(Mmax, Mmax + len(full.kernel)))
        sub = (G[np.ix_(idx, idx)], V[np.ix_(idx, idx)], None)
        out.append(min_eigen_quadratic_form(full.prefix(M), config, matrices=sub))
    return out
