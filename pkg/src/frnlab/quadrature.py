"""Deterministic quadrature over R^N with peak splitting.

The whole space is covered by spherical grids.  The first *feature* (the
primary center) carries a grid that extends to infinity; every further
feature gets a ball whose contribution is cut out of the primary grid by a
smooth partition of unity.  Each spherical grid is split into radial cells
(geometric panels in ``log r``, an inner disc and a power-law tail) and each
cell carries a tensor Gauss rule whose order is raised adaptively until the
change between consecutive orders meets the requested tolerance.

Only fixed rules and a fixed refinement order are used, so repeated calls
with the same inputs give bit-identical results.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .bubbles import FracParams, fractional_constant, sphere_area

DEFAULT_BUDGET = 4000
_ORDERS = (6, 9, 13, 18, 25, 34, 46, 62)
_CHUNK = 1 << 16


class QuadratureError(RuntimeError):
    """The tolerance was not met within the subdivision budget."""

    def __init__(self, message: str, result: "IntegralResult"):
        super().__init__(message)
        self.result = result


def _env_budget() -> int:
    raw = os.environ.get("FRNLAB_QUAD_BUDGET")
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    value = int(raw)
    if value < 1:
        raise ValueError("FRNLAB_QUAD_BUDGET must be a positive integer")
    return value


@dataclass(frozen=True)
class Feature:
    """A point where the integrand concentrates, with its length scale.

    ``breakpoints`` are radii (measured from ``center``) across which the
    integrand is not smooth; radial panels are aligned with them.
    """

    center: tuple
    scale: float = 1.0
    breakpoints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.ravel(self.center)))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12  # a scalar or one value per integrand component
    max_subdivisions: int = field(default_factory=_env_budget)
    far_field_radius: float | None = None
    split_centers: tuple | None = None
    strict: bool = True

    def __post_init__(self):
        if not (self.rel_tol > 0 and np.all(np.asarray(self.abs_tol) > 0)):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.far_field_radius is not None and not self.far_field_radius > 0:
            raise ValueError("far_field_radius must be positive")

    def with_(self, **changes) -> "QuadratureSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class IntegralResult:
    value: object
    error_estimate: float
    subdivisions_used: int
    tail_correction: object = 0.0
    grid: object = field(default=None, repr=False, compare=False)

    def __float__(self):
        return float(self.value)


class FrozenGrid:
    """The converged cell layout of one adaptive run, reusable as a fixed rule.

    Applying it to a nearby integrand (for instance after a small parameter
    change) gives values whose differences are free of remeshing noise.
    """

    def __init__(self, integrator: "_Integrator"):
        self._integ = integrator
        self._cells = [(c, c.level) for c in integrator.cells]

    def integrate(self, integrand=None, reducer=None):
        if reducer is None:
            reducer = _chunked(integrand)
        self._integ.reducer = reducer
        total = None
        for c, level in self._cells:
            v = self._integ._eval_cell(c, level)
            if v is not None:
                total = v if total is None else total + v
        return total if np.ndim(total) else float(total)


# --------------------------------------------------------------------------
# one-dimensional rules


@lru_cache(maxsize=None)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _gauss_smoothed(n: int):
    """Gauss rule on [0, 1] composed with a quintic smoothstep.

    The substitution flattens the integrand at both panel ends, which turns
    algebraic endpoint singularities (kinks on coordinate planes) into very
    high order zeros.
    """
    u, w = _gauss(n)
    s = u**3 * (10.0 - 15.0 * u + 6.0 * u * u)
    ds = 30.0 * u * u * (1.0 - u) ** 2
    return s, w * ds


@lru_cache(maxsize=None)
def _jacobi_left(n: int, b: float):
    """Rule for int_0^1 t^b h(t) dt; returns nodes and weights for h."""
    x, w = special.roots_jacobi(n, 0.0, b)
    return 0.5 * (x + 1.0), w * 0.5 ** (b + 1.0)


def _bump(t):
    """Smooth cutoff: 1 for t <= 1/2, 0 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.clip(1.0 - t, 0.0, None)
    b = np.clip(t - 0.5, 0.0, None)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ha = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
        hb = np.where(b > 0, np.exp(-1.0 / np.where(b > 0, b, 1.0)), 0.0)
    return ha / (ha + hb)


# --------------------------------------------------------------------------
# angular rules


def _orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Rows: ``axis`` followed by an orthonormal completion."""
    N = axis.size
    a = axis / np.linalg.norm(axis)
    frame = [a]
    for k in range(N):
        v = np.zeros(N)
        v[k] = 1.0
        for u in frame:
            v = v - (v @ u) * u
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            frame.append(v / nv)
        if len(frame) == N:
            break
    return np.array(frame)


_AXIAL_BREAKS = tuple(math.pi * v for v in (0, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 3 / 4, 7 / 8, 15 / 16, 1))
_POLAR_BREAKS = tuple(math.pi * v for v in (0, 1 / 8, 1 / 4, 1 / 2, 3 / 4, 7 / 8, 1))


def _panel_rule(breaks, u, w):
    """Composite rule on consecutive panels given a rule on [0, 1]."""
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        nodes.append(a + (b - a) * u)
        weights.append((b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _merge_breaks(base, extra, min_gap=0.02):
    """Sorted union of panel breaks, dropping extras too close to another break."""
    out = list(base)
    for b in sorted(extra):
        if 0.0 < b < math.pi and min(abs(b - c) for c in out) > min_gap:
            out.append(b)
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def _angular_rule(N: int, mode: str, n: int, axis_key: tuple, extra: tuple = ()):
    """Directions and weights on the unit sphere of R^N.

    ``extra`` adds panel breaks in the angle measured from the axis (axial
    mode) or from the first coordinate axis (full mode).
    """
    axis = np.array(axis_key)
    if mode == "radial":
        return axis[None, :].copy(), np.array([sphere_area(N)])
    if mode == "axial":
        frame = _orthonormal_frame(axis)
        th, wt = _panel_rule(_merge_breaks(_AXIAL_BREAKS, extra), *_gauss(n))
        wt = wt * np.sin(th) ** (N - 2) * sphere_area(N - 1)
        dirs = np.cos(th)[:, None] * frame[0] + np.sin(th)[:, None] * frame[1]
        return dirs, wt
    if mode != "full":
        raise ValueError(f"unknown symmetry mode {mode!r}")
    s, w = _gauss_smoothed(n)
    # azimuth: four quarter panels, aligned with the coordinate planes
    phi = np.concatenate([0.5 * math.pi * (k + s) for k in range(4)])
    wphi = np.tile(w, 4) * 0.5 * math.pi
    dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = wphi
    # polar angles: two half panels each; the first (measured from the x_1
    # axis, where other features usually sit) is graded towards both poles
    for k in range(N - 2):
        breaks = _merge_breaks(_POLAR_BREAKS, extra) if k == N - 3 else (0.0, 0.5 * math.pi, math.pi)
        th, wth = _panel_rule(breaks, s, w)
        # prepend one coordinate: x_first = cos(th), rest scaled by sin(th)
        c, sn = np.cos(th), np.sin(th)
        new = np.concatenate(
            [np.repeat(c, len(dirs))[:, None], (sn[:, None, None] * dirs[None, :, :]).reshape(-1, dirs.shape[1])],
            axis=1,
        )
        wts = (wth * sn ** (k + 1))[:, None] * wts[None, :]
        dirs, wts = new, wts.ravel()
    return dirs, wts


# --------------------------------------------------------------------------
# cells


class _Cell:
    __slots__ = ("kind", "a", "b", "level", "value", "err", "owner")

    def __init__(self, kind, a, b, owner):
        self.kind, self.a, self.b, self.owner = kind, a, b, owner
        self.level = 0
        self.value = None
        self.err = None


@dataclass
class _Grid:
    center: np.ndarray
    radius: float  # math.inf for the primary grid
    rho: float  # radius of the partition ball (secondaries)
    is_primary: bool


class _Integrator:
    def __init__(self, reducer, dim, features, spec, decay, symmetry, axis, hole):
        self.reducer = reducer
        self.N = dim
        self.spec = spec
        self.decay = decay
        self.mode = symmetry
        self.hole = float(hole)
        feats = list(features)
        if not feats:
            feats = [Feature(np.zeros(dim))]
        self.features = feats
        centers = np.array([f.center for f in feats], dtype=float)
        if centers.shape[1] != dim:
            raise ValueError("feature centers must have the integrand dimension")
        c0 = centers[0]
        if axis is None:
            axis = np.zeros(dim)
            axis[0] = 1.0
            for c in centers[1:]:
                if np.linalg.norm(c - c0) > 0:
                    axis = c - c0
                    break
        axis = np.asarray(axis, dtype=float)
        self.axis = axis / np.linalg.norm(axis)
        if self.mode in ("radial", "axial"):
            for c in centers[1:]:
                off = (c - c0) - ((c - c0) @ self.axis) * self.axis
                if np.linalg.norm(off) > 1e-12 * (1 + np.linalg.norm(c - c0)):
                    raise ValueError("axial symmetry needs all features on the axis")
        self._build(centers)

    # layout ---------------------------------------------------------------
    def _build(self, centers):
        feats = self.features
        c0 = centers[0]
        secondaries = []
        for k in range(1, len(feats)):
            dists = [np.linalg.norm(centers[k] - centers[j]) for j in range(len(feats)) if j != k]
            rho = 0.5 * min(dists)
            rho = min(rho, np.linalg.norm(centers[k] - c0) - self.hole)
            if rho >= feats[k].scale:
                secondaries.append((k, rho))
        self.secondaries = secondaries
        smax = max(f.scale for f in feats)
        spread = max(float(np.linalg.norm(c - c0)) for c in centers)
        R = self.spec.far_field_radius
        if R is None:
            R = 1e3 * max(1.0, smax)
        R = max(R, 8.0 * (spread + smax))
        self.R = R
        self.sec_centers = np.array([centers[k] for k, _ in secondaries]).reshape(-1, self.N)
        self.sec_rho = np.array([rho for _, rho in secondaries])

        cells = []
        # primary grid
        prim = feats[0]
        bps = [b for b in prim.breakpoints if b > 0]
        dropped = [k for k in range(1, len(feats)) if k not in {s for s, _ in secondaries}]
        for k in dropped:
            d = float(np.linalg.norm(centers[k] - c0))
            s = feats[k].scale
            bps += [d - s, d, d + s]
        for (k, rho) in secondaries:
            d = float(np.linalg.norm(centers[k] - c0))
            bps += [d - rho, d - 0.5 * rho, d, d + 0.5 * rho, d + rho]
        smin0 = min([prim.scale] + [feats[k].scale for k in dropped])
        cells += self._radial_cells(0, smin0, self.hole, R, bps, tail=True)
        for gi, (k, rho) in enumerate(secondaries):
            f = feats[k]
            bps = [b for b in f.breakpoints if b > 0]
            cells += self._radial_cells(gi + 1, f.scale, 0.0, rho, bps + [0.5 * rho], tail=False)
        self.cells = cells

    def _radial_cells(self, owner, scale, r_lo, r_hi, breakpoints, tail):
        cells = []
        if r_lo <= 0.0:
            r_in = min(1e-3 * scale, 0.5 * r_hi)
            cells.append(_Cell("disc", 0.0, r_in, owner))
            r_lo = r_in
        pts = sorted({r_lo, r_hi, *[b for b in breakpoints if r_lo < b < r_hi]})
        ratio = math.log(2.0)
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a * (1 + 1e-12):
                continue
            m = max(1, math.ceil(math.log(b / a) / ratio - 1e-9))
            edges = np.exp(np.linspace(math.log(a), math.log(b), m + 1))
            edges[0], edges[-1] = a, b
            for u, v in zip(edges[:-1], edges[1:]):
                cells.append(_Cell("log", float(u), float(v), owner))
        if tail and self.decay is not None:
            if self.decay <= self.N:
                raise ValueError("declared decay exponent must exceed the dimension")
            cells.append(_Cell("tail", r_hi, math.inf, owner))
        return cells

    def _cap_breaks(self, cell):
        """Polar angles at which partition bumps of on-axis secondaries switch.

        Seen from the primary center, the ball ``|x - c| < t rho`` around a
        secondary at signed distance ``D`` along the reference axis occupies
        polar angles up to ``acos((r^2 + D^2 - t^2 rho^2) / (2 r |D|))``.
        """
        if self.mode == "radial" or not len(self.sec_rho):
            return ()
        ref = self.axis if self.mode == "axial" else np.eye(self.N)[0]
        c0 = np.asarray(self.features[0].center)
        out = set()
        for c, rho in zip(self.sec_centers, self.sec_rho):
            v = c - c0
            D = float(v @ ref)
            if np.linalg.norm(v - D * ref) > 1e-9 * (1.0 + abs(D)):
                continue
            for r in (cell.a, math.sqrt(cell.a * cell.b), cell.b):
                for t in (0.5, 1.0):
                    cs = (r * r + D * D - (t * rho) ** 2) / (2.0 * r * abs(D))
                    if -1.0 < cs < 1.0:
                        th = math.acos(cs)
                        out.add(round(th if D > 0 else math.pi - th, 12))
        return tuple(sorted(out))

    # evaluation -----------------------------------------------------------
    def _weights_partition(self, X, owner):
        if owner == 0:
            if not len(self.sec_rho):
                return None
            w = np.ones(X.shape[0])
            for c, rho in zip(self.sec_centers, self.sec_rho):
                t = np.linalg.norm(X - c, axis=1) / rho
                near = t < 1.0
                if np.any(near):
                    w[near] -= _bump(t[near])
            return w
        c = self.sec_centers[owner - 1]
        rho = self.sec_rho[owner - 1]
        return _bump(np.linalg.norm(X - c, axis=1) / rho)

    def _eval_cell(self, cell, level):
        n = _ORDERS[level]
        N = self.N
        if cell.kind == "disc":
            u, w = _gauss(n)
            r = cell.b * u
            wr = w * cell.b * r ** (N - 1)
        elif cell.kind == "log":
            u, w = _gauss(n)
            la, lb = math.log(cell.a), math.log(cell.b)
            r = np.exp(la + (lb - la) * u)
            wr = w * (lb - la) * r**N
        else:  # tail, t = R / r with weight t^(q - N - 1)
            q = self.decay
            t, w = _jacobi_left(n, q - N - 1.0)
            r = cell.a / t
            wr = w * cell.a**N * t ** (-q)
        extra = self._cap_breaks(cell) if cell.owner == 0 and cell.kind == "log" else ()
        dirs, wa = _angular_rule(N, self.mode, n, tuple(self.axis), extra)
        center = self.features[0].center if cell.owner == 0 else self.sec_centers[cell.owner - 1]
        X = np.asarray(center)[None, None, :] + r[:, None, None] * dirs[None, :, :]
        X = X.reshape(-1, N)
        W = (wr[:, None] * wa[None, :]).ravel()
        part = self._weights_partition(X, cell.owner)
        if part is not None:
            keep = part != 0.0
            if not np.all(keep):
                X, W, part = X[keep], W[keep], part[keep]
            W = W * part
        if X.shape[0] == 0:
            return None
        return np.asarray(self.reducer(X, W), dtype=float)

    def run(self) -> IntegralResult:
        spec = self.spec
        cells = self.cells
        for c in cells:
            v0 = self._eval_cell(c, 0)
            v1 = self._eval_cell(c, 1)
            c.level = 1
            c.value = v1
            c.err = None if v0 is None and v1 is None else np.abs(_z(v1, v0) - _z(v0, v1))
        used = 0
        while True:
            vals = [c.value for c in cells if c.value is not None]
            total = np.sum(vals, axis=0) if vals else np.zeros(())
            errs = [c.err for c in cells if c.err is not None]
            etot = np.sum(errs, axis=0) if errs else np.zeros_like(total)
            tol = np.maximum(spec.rel_tol * np.abs(total), spec.abs_tol)
            ratio = etot / tol
            if np.all(ratio <= 1.0):
                break
            if used >= spec.max_subdivisions:
                res = self._result(total, etot, used)
                if spec.strict:
                    raise QuadratureError(
                        f"quadrature tolerance not met after {used} refinements "
                        f"(error {float(np.max(etot)):.3e})",
                        res,
                    )
                return res
            scores = [float(np.max(c.err / tol)) if c.err is not None else -1.0 for c in cells]
            i = int(np.argmax(scores))
            c = cells[i]
            if c.level + 1 < len(_ORDERS):
                v = self._eval_cell(c, c.level + 1)
                c.err = np.abs(_z(v, c.value) - _z(c.value, v))
                c.level += 1
                c.value = v
            elif c.kind == "log":
                mid = math.sqrt(c.a * c.b)
                new = [_Cell("log", c.a, mid, c.owner), _Cell("log", mid, c.b, c.owner)]
                for nc in new:
                    v0 = self._eval_cell(nc, 2)
                    v1 = self._eval_cell(nc, 3)
                    nc.level, nc.value = 3, v1
                    nc.err = None if v0 is None and v1 is None else np.abs(_z(v1, v0) - _z(v0, v1))
                cells[i : i + 1] = new
            else:
                # cannot refine further; accept its error
                c.err = c.err * 0.0 if c.err is not None else None
                c.err = None
                if all(cc.err is None for cc in cells):
                    break
            used += 1
        return self._result(total, etot, used)

    def _result(self, total, etot, used):
        tail = [c.value for c in self.cells if c.kind == "tail" and c.value is not None]
        tail_val = np.sum(tail, axis=0) if tail else 0.0 * np.asarray(total)
        value = total if np.ndim(total) else float(total)
        err = float(np.max(etot)) if np.ndim(etot) else float(etot)
        tc = tail_val if np.ndim(tail_val) else float(tail_val)
        return IntegralResult(
            value=value, error_estimate=err, subdivisions_used=used, tail_correction=tc, grid=FrozenGrid(self)
        )


def _chunked(integrand):
    def reducer(X, w):
        # chunked so that large product cells do not exhaust memory
        out = None
        for s in range(0, X.shape[0], _CHUNK):
            part = w[s : s + _CHUNK] @ np.asarray(integrand(X[s : s + _CHUNK]), dtype=float)
            out = part if out is None else out + part
        return out

    return reducer


def _z(a, b):
    """``a`` or zeros shaped like ``b`` when ``a`` is empty."""
    if a is None:
        return np.zeros_like(b)
    return a


def _features_from(spec: QuadratureSpec, dim: int, features):
    if features:
        return [f if isinstance(f, Feature) else Feature(f) for f in features]
    if spec.split_centers:
        return [Feature(c) for c in spec.split_centers]
    return [Feature(np.zeros(dim))]


def integrate_rn(
    integrand: Callable | None,
    spec: QuadratureSpec | None = None,
    *,
    dim: int,
    features: Sequence[Feature] | None = None,
    decay: float | None = None,
    symmetry: str = "full",
    axis=None,
    hole: float = 0.0,
    reducer: Callable | None = None,
) -> IntegralResult:
    """Integrate over R^N (or R^N minus a ball around the first feature).

    ``integrand(X)`` receives points of shape ``(n, N)`` and returns ``(n,)``
    or ``(n, m)`` values.  Alternatively ``reducer(X, w)`` may return the
    weighted sum directly, which lets callers assemble matrices without
    materialising per-node outer products.

    ``decay`` is the exponent q with ``|f(x)| ~ |x|^-q`` at infinity; with it,
    the region beyond the far-field radius is integrated by a Gauss-Jacobi rule
    in ``R/|x|`` and reported as ``tail_correction``.  ``symmetry`` is
    ``"full"``, ``"axial"`` (function of distance to the axis through the
    features and position along it) or ``"radial"``.  ``hole`` removes the ball
    of that radius around the first feature.
    """
    spec = spec or QuadratureSpec()
    if reducer is None:
        if integrand is None:
            raise ValueError("need an integrand or a reducer")

        reducer = _chunked(integrand)

    feats = _features_from(spec, dim, features)
    return _Integrator(reducer, dim, feats, spec, decay, symmetry, axis, hole).run()


# --------------------------------------------------------------------------
# fractional Laplacian and pairings


def _shape_features(f, features):
    if features is not None:
        return [ft if isinstance(ft, Feature) else Feature(ft) for ft in features]
    return list(getattr(f, "features", ()))


def _pv_layout(f, x, feats):
    """Symmetry mode and axis for a PV evaluation at ``x``."""
    center = getattr(f, "center", None)
    N = x.size
    if center is not None:
        d = x - np.asarray(center, dtype=float)
        nd = float(np.linalg.norm(d))
        if nd == 0.0:
            return "radial", None, nd
        return "axial", -d / nd, nd
    return "full", None, None


def pv_frac_laplacian(
    f,
    params: FracParams,
    x,
    spec: QuadratureSpec | None = None,
    *,
    features=None,
    decay: float | None = None,
) -> float:
    """Principal-value fractional Laplacian of ``f`` at a single point ``x``.

    ``f`` is a vectorised callable.  Its concentration points are read from
    ``f.features`` (or passed explicitly) and its decay exponent from
    ``f.decay``.  Functions exposing ``center`` are treated as radial about it,
    which reduces every integral to two dimensions.
    """
    spec = spec or QuadratureSpec()
    x = np.asarray(x, dtype=float).ravel()
    N, g = params.N, params.gamma
    if x.size != N:
        raise ValueError("point dimension mismatch")
    feats = _shape_features(f, features)
    q = getattr(f, "decay", None) if decay is None else decay
    if q is None:
        raise ValueError("f must declare its decay exponent")
    mode, axis, dist = _pv_layout(f, x, feats)
    smin = min([ft.scale for ft in feats] or [1.0])
    # the inner ball follows the local length scale: the feature width near a
    # peak, a fraction of the distance to the nearest peak farther out
    dnear = min([float(np.linalg.norm(x - np.asarray(ft.center))) for ft in feats] or [0.0])
    delta = 0.1 * max(smin, 0.5 * dnear)
    fx = float(np.asarray(f(x[None, :])).ravel()[0])

    # inner ball: symmetrised second difference, weight r^(1 - 2 gamma)
    ax = tuple(axis) if axis is not None else tuple(np.eye(N)[0])
    inner_mode = "axial" if mode == "radial" else mode

    def inner(level):
        n = _ORDERS[level]
        t, w = _jacobi_left(n, 1.0 - 2.0 * g)
        r = delta * t
        wr = w * delta ** (2.0 - 2.0 * g)
        dirs, wa = _angular_rule(N, inner_mode, n, ax)
        # second differences lose digits for tiny r: there, extrapolate
        # D / r^2 (even in r) from four samples as a cubic in r^2
        r_c = 0.05 * delta
        small = r < r_c
        rs = r_c * np.array([1.0, 1.5, 2.0, 2.5])
        rr = np.concatenate([r[~small], rs])
        H = rr[:, None, None] * dirs[None, :, :]
        Xp = (x + H).reshape(-1, N)
        Xm = (x - H).reshape(-1, N)
        D = 2.0 * fx - np.asarray(f(Xp)).reshape(len(rr), -1) - np.asarray(f(Xm)).reshape(len(rr), -1)
        D = D / (rr * rr)[:, None]
        G = np.empty((len(r), D.shape[1]))
        G[~small] = D[: len(rr) - 4]
        if np.any(small):
            G[small] = _lagrange(rs**2, r[small] ** 2) @ D[len(rr) - 4 :]
        return 0.5 * float(wr @ G @ wa)

    ring = fx * sphere_area(N) * delta ** (-2.0 * g) / (2.0 * g)
    vals = [inner(0), inner(1)]
    lev = 1
    while abs(vals[-1] - vals[-2]) > 0.1 * max(spec.rel_tol * (abs(vals[-1]) + abs(ring)), spec.abs_tol):
        lev += 1
        if lev >= len(_ORDERS):
            if spec.strict:
                raise QuadratureError("inner ball did not converge", IntegralResult(vals[-1], abs(vals[-1] - vals[-2]), lev))
            break
        vals.append(inner(lev))
    inner_val = vals[-1]

    primary = Feature(x, scale=smin)
    if mode == "full":
        sym, axis_arg = "full", None
    else:
        sym, axis_arg = ("axial" if mode == "axial" else "radial"), axis
    s = 2.0 * g + N

    def outer(Z):
        dz = Z - x
        return np.asarray(f(Z), dtype=float) * np.einsum("ij,ij->i", dz, dz) ** (-0.5 * s)

    sub = spec.with_(rel_tol=0.2 * spec.rel_tol, abs_tol=0.2 * spec.abs_tol)
    far = integrate_rn(
        outer,
        sub,
        dim=N,
        features=[primary] + [ft for ft in feats],
        decay=q + s,
        symmetry=sym,
        axis=axis_arg,
        hole=delta,
    )
    return fractional_constant(params) * (inner_val + ring - float(far.value))


def _lagrange(xs, x):
    """Matrix of Lagrange basis values: row i gives weights for point x[i]."""
    L = np.ones((len(x), len(xs)))
    for j, xj in enumerate(xs):
        for m, xm in enumerate(xs):
            if m != j:
                L[:, j] *= (x - xm) / (xj - xm)
    return L


def _laplacian_decay(f, params):
    return getattr(f, "laplacian_decay", params.N + 2.0 * params.gamma)


def _pair_layout(f, g, N):
    cf, cg = getattr(f, "center", None), getattr(g, "center", None)
    if cf is not None and cg is not None:
        d = np.asarray(cg, float) - np.asarray(cf, float)
        if np.linalg.norm(d) == 0:
            return "radial", None
        return "axial", d / np.linalg.norm(d)
    return "full", None


def hgamma_inner(f, g, params: FracParams, spec: QuadratureSpec | None = None, *, numeric: bool = False) -> float:
    """Pairing ``<f, g>`` in the homogeneous space of order gamma.

    When ``f`` exposes an exact ``frac_laplacian`` (and ``numeric`` is false)
    this is ``int (-Delta)^gamma f * g``.  Otherwise the double integral
    ``int g(x) PV int (f(x) - f(z)) K(x - z) dz dx`` is evaluated with the
    inner principal value computed numerically; this requires ``f`` radial.
    """
    spec = spec or QuadratureSpec()
    N = params.N
    feats = _shape_features(f, None) + _shape_features(g, None)
    mode, axis = _pair_layout(f, g, N)
    decay = _laplacian_decay(f, params) + getattr(g, "decay")
    exact = getattr(f, "frac_laplacian", None) if not numeric else None
    if exact is not None:
        def integrand(X):
            return np.asarray(exact(X, params)) * np.asarray(g(X))
    else:
        if getattr(f, "center", None) is None:
            raise NotImplementedError("numeric pairing needs a radial first argument")
        profile = RadialLaplacianProfile(f, params, spec)
        c = np.asarray(f.center, dtype=float)

        def integrand(X):
            return profile(np.linalg.norm(X - c, axis=1)) * np.asarray(g(X))

    res = integrate_rn(integrand, spec, dim=N, features=feats, decay=decay, symmetry=mode, axis=axis)
    return float(res.value)


class RadialLaplacianProfile:
    """Fractional Laplacian of a radial function as a function of the radius.

    Values come from ``pv_frac_laplacian`` at Chebyshev nodes of geometric
    panels in ``log r`` and are interpolated inside each panel; panels are
    filled lazily.  Beyond the outermost panel the profile continues as
    ``c r^-(N + 2 gamma)``.
    """

    def __init__(self, f, params: FracParams, spec: QuadratureSpec | None = None, nodes: int = 16):
        self.f, self.params = f, params
        self.spec = (spec or QuadratureSpec()).with_(rel_tol=1e-10, abs_tol=1e-14)
        self.center = np.asarray(f.center, dtype=float)
        s = min(ft.scale for ft in f.features)
        self.r_min = 1e-3 * s
        self.r_max = 1e3 * max(1.0, s)
        self.ratio = 2.0
        self.n = nodes
        k = np.arange(nodes)
        self._cheb = np.cos(np.pi * (2 * k + 1) / (2 * nodes))  # on [-1, 1]
        self._bw = (-1.0) ** k * np.sin(np.pi * (2 * k + 1) / (2 * nodes))
        self._panels: dict[int, np.ndarray] = {}
        self._edge = None
        self._zero = None

    def _value(self, r: float) -> float:
        x = self.center.copy()
        x[0] += r
        return pv_frac_laplacian(self.f, self.params, x, self.spec)

    def _panel(self, k):
        if k not in self._panels:
            la = math.log(self.r_min) + k * math.log(self.ratio)
            lr = la + 0.5 * math.log(self.ratio) * (self._cheb + 1.0)
            self._panels[k] = np.array([self._value(math.exp(v)) for v in lr])
        return self._panels[k]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        lr = np.log(np.maximum(r, 1e-300))
        lmin, h = math.log(self.r_min), math.log(self.ratio)
        kmax = int(math.ceil((math.log(self.r_max) - lmin) / h))
        small = r <= self.r_min
        if np.any(small):
            if self._zero is None:
                self._zero = self._value(0.0)
            # the profile is flat to second order at the origin
            out[small] = self._zero
        big = lr >= lmin + kmax * h
        if np.any(big):
            if self._edge is None:
                re = math.exp(lmin + kmax * h)
                self._edge = self._value(re) * re ** (self.params.N + 2 * self.params.gamma)
            out[big] = self._edge * r[big] ** (-(self.params.N + 2 * self.params.gamma))
        mid = ~(small | big)
        if np.any(mid):
            k = np.floor((lr[mid] - lmin) / h).astype(int)
            xs = 2.0 * (lr[mid] - lmin - k * h) / h - 1.0
            res = np.empty(xs.size)
            for kk in np.unique(k):
                sel = k == kk
                vals = self._panel(int(kk))
                res[sel] = _bary(self._cheb, self._bw, vals, xs[sel])
            out[mid] = res
        return out


def _bary(nodes, bw, vals, x):
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0
    diff[exact] = 1.0
    q = bw[None, :] / diff
    y = (q @ vals) / q.sum(axis=1)
    hit = exact.any(axis=1)
    if np.any(hit):
        y[hit] = vals[np.argmax(exact[hit], axis=1)]
    return y
