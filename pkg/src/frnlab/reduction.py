"""The two-scale reduced system, its unique zero and its Brouwer degree.

After the finite-dimensional reduction, the scales of the two peaks are
``lam_k = t_k L_eps^(1/beta_k)`` where ``t = (t_1, t_2)`` solves

    g_k(t) = t_k^(-beta_k) - m_k (t_1 t_2)^(-(N - 2 gamma)/2) = 0,   k = 1, 2.

This module solves that system, evaluates its Jacobian determinant and
computes the degree of ``g`` on a box by two independent methods.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bubbles import FracParams
from .kprofile import KProfile


class SolverError(RuntimeError):
    """Newton iteration failed; ``trace`` holds the iterates."""

    def __init__(self, message: str, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class HypothesisError(ValueError):
    """Structural assumptions of the reduced problem are violated."""


class DegreeError(RuntimeError):
    """The degree is not defined (zero on the boundary, degenerate zero)."""


class DegreeInconsistencyError(DegreeError):
    """The zero count and the boundary winding number disagree."""


@dataclass(frozen=True)
class ReducedProblem:
    beta: tuple
    m: tuple
    params: FracParams
    box: tuple = (0.1, 10.0)
    center_distance: float = 2.0
    centers: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "m", tuple(float(v) for v in self.m))
        object.__setattr__(self, "box", tuple(float(v) for v in self.box))
        b1, b2 = self.beta
        e = self.params.e
        if not e * (b1 + b2) > b1 * b2:
            raise HypothesisError(
                f"need (N-2gamma)/2 (beta_1 + beta_2) > beta_1 beta_2, got {e * (b1 + b2):g} <= {b1 * b2:g}"
            )
        if not all(v > 0 for v in self.m):
            raise HypothesisError("m_k must be positive")
        lo, hi = self.box
        if not 0 < lo < hi:
            raise HypothesisError("box must satisfy 0 < lower < upper")

    @property
    def e(self) -> float:
        return self.params.e

    def g(self, t) -> np.ndarray:
        t1, t2 = float(t[0]), float(t[1])
        P = (t1 * t2) ** (-self.e)
        return np.array([t1 ** (-self.beta[0]) - self.m[0] * P, t2 ** (-self.beta[1]) - self.m[1] * P])

    def jacobian(self, t) -> np.ndarray:
        t1, t2 = float(t[0]), float(t[1])
        e, (b1, b2), (m1, m2) = self.e, self.beta, self.m
        P = (t1 * t2) ** (-e)
        return np.array(
            [
                [-b1 * t1 ** (-b1 - 1) + m1 * e * P / t1, m1 * e * P / t2],
                [m2 * e * P / t1, -b2 * t2 ** (-b2 - 1) + m2 * e * P / t2],
            ]
        )

    def scaled(self, t) -> np.ndarray:
        """``t_k^beta_k g_k(t) = 1 - m_k t_k^beta_k (t_1 t_2)^-e``: same zeros as ``g``
        but bounded away from 0 as ``t`` grows, so Newton cannot drift to infinity."""
        t1, t2 = float(t[0]), float(t[1])
        P = (t1 * t2) ** (-self.e)
        return np.array([1.0 - self.m[0] * t1 ** self.beta[0] * P, 1.0 - self.m[1] * t2 ** self.beta[1] * P])

    def scaled_jacobian(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        q = 1.0 - self.scaled(t)
        b = np.asarray(self.beta)
        return -q[:, None] * (np.diag(b) - self.e) / t[None, :]

    def box_2d(self):
        return (self.box, self.box)


@dataclass(frozen=True)
class ReducedSolution:
    t_star: tuple
    jacobian_det: float
    degree: int
    residual_norm: float
    iterations: int = 0


def scale_exponent(beta1: float, beta2: float, params: FracParams) -> float:
    """Exponent ``kappa`` with ``L_eps = eps^(-kappa)``."""
    den = params.e * (beta1 + beta2) - beta1 * beta2
    if not den > 0:
        raise HypothesisError("the scale-law denominator (N-2gamma)/2 (beta_1+beta_2) - beta_1 beta_2 must be positive")
    return beta1 * beta2 / den


def scale_L(epsilon: float, beta1: float, beta2: float, params: FracParams) -> float:
    """Magnification ``L_eps`` balancing the K-force against the interaction."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return epsilon ** (-scale_exponent(beta1, beta2, params))


def derive_m(profile: KProfile, refs, params: FracParams) -> tuple:
    """``m_k = -d_k / sum(a^k)`` with ``d_k = C_int / (C_{N,beta_k} |z^1 - z^2|^(N-2gamma))``.

    ``refs`` is a :class:`frnlab.interaction.ReferenceConstants`.
    """
    pts = profile.points
    if len(pts) != 2:
        raise HypothesisError("the reduced system needs exactly two critical points")
    d = float(np.linalg.norm(np.subtract(pts[0].z, pts[1].z)))
    out = []
    for k, pt in enumerate(pts):
        if not pt.sum_a < 0:
            raise HypothesisError(f"point {k}: sum of a_i must be negative")
        dk = refs.interaction / (refs.C_beta[k] * d ** (params.N - 2 * params.gamma))
        out.append(-dk / pt.sum_a)
    return tuple(out)


def problem_from_profile(profile: KProfile, params: FracParams, refs, m=None, box=(0.1, 10.0)) -> ReducedProblem:
    """Reduced problem of a two-point profile; ``m`` overrides the derived values."""
    pts = profile.points
    d = float(np.linalg.norm(np.subtract(pts[0].z, pts[1].z)))
    mm = derive_m(profile, refs, params) if m is None else tuple(m)
    return ReducedProblem(
        beta=(pts[0].beta, pts[1].beta),
        m=mm,
        params=params,
        box=box,
        center_distance=d,
        centers=(pts[0].z, pts[1].z),
    )


def symmetric_t_star(prob: ReducedProblem) -> float:
    """Closed-form zero ``m^(1/(N - 2gamma - beta))`` when both points agree."""
    if prob.beta[0] != prob.beta[1] or prob.m[0] != prob.m[1]:
        raise ValueError("closed form needs beta_1 = beta_2 and m_1 = m_2")
    return prob.m[0] ** (1.0 / (2.0 * prob.e - prob.beta[0]))


def log_linear_t_star(prob: ReducedProblem) -> tuple:
    """Exact zero: in ``s = log t`` the system reads ``e (s_1 + s_2) - beta_k s_k = log m_k``."""
    b1, b2 = prob.beta
    e = prob.e
    A = np.array([[e - b1, e], [e, e - b2]])
    s = np.linalg.solve(A, np.log(prob.m))
    return float(np.exp(s[0])), float(np.exp(s[1]))


def jacobian_det(prob: ReducedProblem, t_star) -> float:
    """Closed form ``(beta_1 beta_2 - e(beta_1+beta_2)) m_1 m_2 / (t_1 t_2)^(N-2gamma+1)`` at a zero."""
    t1, t2 = float(t_star[0]), float(t_star[1])
    if not (t1 > 0 and t2 > 0):
        raise ValueError("t_star must be positive")
    b1, b2 = prob.beta
    return (b1 * b2 - prob.e * (b1 + b2)) * prob.m[0] * prob.m[1] / (t1 * t2) ** (2.0 * prob.e + 1.0)


def fd_jacobian(F, x, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian with steps relative to ``|x|``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        s = h * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += s
        xm[i] -= s
        cols.append((np.asarray(F(xp)) - np.asarray(F(xm))) / (2 * s))
    return np.stack(cols, axis=1)


def newton(F, x0, jac=None, tol: float = 1e-13, max_iter: int = 100, lower=None, upper=None):
    """Damped Newton with backtracking on ``|F|``; iterates are kept inside the bounds.

    Returns ``(x, residual, iterations, trace)``; raises :class:`SolverError`.
    """
    x = np.asarray(x0, dtype=float).copy()
    jac = jac or (lambda z: fd_jacobian(F, z))
    fx = np.asarray(F(x), dtype=float)
    r = float(np.linalg.norm(fx))
    trace = [(x.copy(), r)]
    for it in range(1, max_iter + 1):
        if r < tol:
            return x, r, it - 1, trace
        try:
            step = np.linalg.solve(jac(x), -fx)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Jacobian at {x}", trace) from exc
        damp = 1.0
        while True:
            xn = x + damp * step
            if lower is not None:
                # projection that keeps positive variables strictly positive
                xn = np.maximum(xn, np.where(lower > 0, np.maximum(lower * 0.5, x * 0.1), lower))
            if upper is not None:
                xn = np.minimum(xn, upper)
            fn = np.asarray(F(xn), dtype=float)
            rn = float(np.linalg.norm(fn))
            if np.all(np.isfinite(fn)) and (rn < (1 - 1e-4 * damp) * r or damp < 1e-10):
                break
            damp *= 0.5
        if damp < 1e-10 and not rn < r:
            raise SolverError("line search failed", trace)
        x, fx, r = xn, fn, rn
        trace.append((x.copy(), r))
    if r < tol:
        return x, r, max_iter, trace
    raise SolverError(f"no convergence in {max_iter} iterations (residual {r:.3e})", trace)


def solve_reduced(prob: ReducedProblem, tol: float = 1e-12, start=(1.0, 1.0), with_degree: bool = True) -> ReducedSolution:
    """Zero of ``g`` by damped Newton from ``start`` (default ``(1, 1)``).

    Newton runs on the scaled map (see :meth:`ReducedProblem.scaled`); the
    reported residual is ``|g(t*)|``.
    """
    x, _, its, _ = newton(prob.scaled, start, prob.scaled_jacobian, tol=tol, lower=np.array([1e-12, 1e-12]))
    r = float(np.linalg.norm(prob.g(x)))
    deg = brouwer_degree(prob.g, prob.box_2d(), jac=prob.jacobian) if with_degree else 0
    return ReducedSolution(
        t_star=(float(x[0]), float(x[1])),
        jacobian_det=jacobian_det(prob, x),
        degree=int(deg),
        residual_norm=r,
        iterations=its,
    )


def peak_parameters(prob: ReducedProblem, epsilon: float, solution: ReducedSolution | None = None) -> dict:
    """Scales ``lam_k = t_k L_eps^(1/beta_k)`` and centers ``y^k = z^k``."""
    sol = solution or solve_reduced(prob, with_degree=False)
    L = scale_L(epsilon, prob.beta[0], prob.beta[1], prob.params)
    lam = tuple(t * L ** (1.0 / b) for t, b in zip(sol.t_star, prob.beta))
    y = tuple(tuple(c) for c in prob.centers) if prob.centers is not None else None
    return {"lambda": lam, "y": y, "L": L, "t_star": sol.t_star}


# --------------------------------------------------------------------------
# Brouwer degree


def _boundary_points(box, n: int):
    """Points on the boundary of an axis-aligned box, ``n`` per edge direction."""
    box = [tuple(map(float, b)) for b in box]
    dim = len(box)
    grids = [np.linspace(lo, hi, n) for lo, hi in box]
    pts = []
    for k in range(dim):
        for side in box[k]:
            others = [grids[j] if j != k else np.array([side]) for j in range(dim)]
            pts.append(np.stack(np.meshgrid(*others, indexing="ij"), axis=-1).reshape(-1, dim))
    return np.concatenate(pts)


def _boundary_loop(box, n: int) -> np.ndarray:
    """Counter-clockwise closed polygon on the boundary of a 2-D box."""
    (a, b), (c, d) = box
    s = np.linspace(0.0, 1.0, n, endpoint=False)
    edges = [
        np.stack([a + (b - a) * s, np.full(n, c)], axis=1),
        np.stack([np.full(n, b), c + (d - c) * s], axis=1),
        np.stack([b - (b - a) * s, np.full(n, d)], axis=1),
        np.stack([np.full(n, a), d - (d - c) * s], axis=1),
    ]
    return np.concatenate(edges)


def winding_number(F, box, n: int = 64, max_angle: float = math.pi / 8, max_points: int = 200000) -> int:
    """Winding number of ``F`` around 0 along the boundary of a 2-D box.

    The polygon is refined until consecutive image directions differ by less
    than ``max_angle``.
    """
    pts = list(_boundary_loop(box, n))
    vals = [np.asarray(F(p), dtype=float) for p in pts]
    i = 0
    while i < len(pts):
        j = (i + 1) % len(pts)
        a0, a1 = math.atan2(vals[i][1], vals[i][0]), math.atan2(vals[j][1], vals[j][0])
        da = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
        if abs(da) > max_angle and len(pts) < max_points:
            mid = 0.5 * (pts[i] + pts[j])
            pts.insert(i + 1, mid)
            vals.insert(i + 1, np.asarray(F(mid), dtype=float))
            continue
        i += 1
    total = 0.0
    for i in range(len(pts)):
        j = (i + 1) % len(pts)
        a0, a1 = math.atan2(vals[i][1], vals[i][0]), math.atan2(vals[j][1], vals[j][0])
        total += (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
    w = total / (2 * math.pi)
    if abs(w - round(w)) > 0.1:
        raise DegreeError(f"winding number {w:.3f} is not close to an integer")
    return int(round(w))


def _starts(box, per_dim: int):
    axes = []
    for lo, hi in box:
        if lo > 0 and hi / lo > 20:
            axes.append(np.geomspace(lo, hi, per_dim))
        else:
            axes.append(np.linspace(lo, hi, per_dim))
    return [np.array(p) for p in itertools.product(*axes)]


def find_zeros(F, box, jac=None, per_dim: int = 8, tol: float = 1e-12, dedupe: float = 1e-7):
    """Distinct zeros of ``F`` inside ``box`` from a grid of Newton starts (sorted)."""
    lower = np.array([b[0] for b in box], dtype=float)
    upper = np.array([b[1] for b in box], dtype=float)
    zeros = []
    for x0 in _starts(box, per_dim):
        try:
            x, r, _, _ = newton(F, x0, jac, tol=tol, max_iter=60, lower=lower, upper=upper)
        except SolverError:
            continue
        if np.any(x < lower) or np.any(x > upper):
            continue
        scale = 1.0 + np.abs(x)
        if not any(np.all(np.abs(x - z) < dedupe * scale) for z in zeros):
            zeros.append(x)
    zeros.sort(key=lambda z: tuple(z))
    return zeros


def zero_count_degree(F, box, jac=None, per_dim: int = 8, tol: float = 1e-12) -> tuple[int, list]:
    """Sum of Jacobian signs over the regular zeros found in ``box``."""
    jac = jac or (lambda z: fd_jacobian(F, z))
    zeros = find_zeros(F, box, jac, per_dim, tol)
    deg = 0
    for z in zeros:
        det = float(np.linalg.det(jac(z)))
        if det == 0.0 or not math.isfinite(det):
            raise DegreeError(f"degenerate zero at {z}")
        deg += 1 if det > 0 else -1
    return deg, zeros


def brouwer_degree(F, box, zero_tol: float = 1e-8, jac=None, per_dim: int = 8, boundary_mesh: int = 41) -> int:
    """Degree of ``F`` on an axis-aligned box at 0.

    Zeros are located by multistart Newton and their Jacobian signs summed.
    In two dimensions the result must agree with the boundary winding number.
    """
    box = tuple(tuple(map(float, b)) for b in box)
    bpts = _boundary_points(box, boundary_mesh)
    bmin = min(float(np.linalg.norm(F(p))) for p in bpts)
    if bmin < zero_tol:
        raise DegreeError(f"map vanishes on the boundary (min |F| = {bmin:.3e})")
    deg, _ = zero_count_degree(F, box, jac, per_dim)
    if len(box) == 2:
        w = winding_number(F, box)
        if w != deg:
            raise DegreeInconsistencyError(f"zero count gives {deg} but the winding number is {w}")
    return deg


def product_map(F, G, nf: int):
    """``(x, y) -> (F(x), G(y))`` for ``x`` of length ``nf``."""

    def H(z):
        z = np.asarray(z, dtype=float)
        return np.concatenate([np.atleast_1d(F(z[:nf])), np.atleast_1d(G(z[nf:]))])

    return H
