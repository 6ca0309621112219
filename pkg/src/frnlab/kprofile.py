"""Perturbation profiles K with prescribed behaviour at their critical points.

Near each critical point ``z`` the model is

    K(x) = K(z) + sum_i a_i |x_i - z_i|^beta   (+ c |x - z|^(beta + sigma) optionally)

inside the radius ``r0``; between ``r0`` and ``2 r0`` it is blended to zero
with a C^2 quintic smoothstep, and it vanishes outside all patches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bubbles import FracParams
from .quadrature import Feature

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CriticalPoint:
    z: tuple
    K_value: float
    a: tuple
    beta: float
    sigma: float = 0.5
    remainder: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        for name in ("K_value", "beta", "sigma", "remainder"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def sum_a(self) -> float:
        return float(sum(self.a))


@dataclass(frozen=True)
class KProfile:
    points: tuple
    cutoff_radius: float
    global_bound: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "cutoff_radius", float(self.cutoff_radius))
        object.__setattr__(self, "global_bound", float(self.global_bound))

    @property
    def dim(self) -> int:
        return len(self.points[0].z)

    def features(self, scale: float | None = None):
        """Quadrature features aligned with the patch seams of every point."""
        r0 = self.cutoff_radius
        return [Feature(pt.z, r0 if scale is None else scale, (r0, 2 * r0)) for pt in self.points]


def smoothstep(u):
    """Quintic smoothstep, C^2 on the real line, 0 below 0 and 1 above 1."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def local_model(pt: CriticalPoint, x) -> np.ndarray:
    """Un-blended local expansion at ``pt``."""
    d = np.asarray(x, dtype=float) - np.asarray(pt.z)
    val = pt.K_value + np.abs(d) ** pt.beta @ np.asarray(pt.a)
    if pt.remainder:
        r = np.sqrt(np.einsum("...i,...i->...", d, d))
        val = val + pt.remainder * r ** (pt.beta + pt.sigma)
    return val


def cutoff(profile: KProfile, r):
    r0 = profile.cutoff_radius
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - r0) / r0)


def eval_K(profile: KProfile, x) -> np.ndarray:
    """Evaluate K at points ``x`` of shape ``(..., N)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    r0 = profile.cutoff_radius
    for pt in profile.points:
        d = x - np.asarray(pt.z)
        r = np.sqrt(np.einsum("...i,...i->...", d, d))
        inside = r < 2.0 * r0
        if np.any(inside):
            out[inside] += cutoff(profile, r[inside]) * local_model(pt, x[inside])
    return out


def validate_profile(profile: KProfile, params: FracParams | None = None) -> list[str]:
    """All violated hypotheses, as human-readable strings (empty when valid)."""
    problems = []
    if not profile.points:
        return ["profile has no critical points"]
    N = len(profile.points[0].z)
    upper = params.N - 2 * params.gamma if params is not None else None
    if params is not None and params.N != N:
        problems.append(f"profile dimension {N} does not match N = {params.N}")
    if not profile.cutoff_radius > 0:
        problems.append("cutoff radius must be positive")
    for j, pt in enumerate(profile.points):
        tag = f"point {j}"
        if len(pt.z) != N or len(pt.a) != N:
            problems.append(f"{tag}: z and a must have {N} components")
        if any(v == 0.0 for v in pt.a):
            problems.append(f"{tag}: every a_i must be nonzero")
        if not pt.sum_a < 0:
            problems.append(f"{tag}: sum of a_i must be negative (got {pt.sum_a:g})")
        if not pt.beta > 1:
            problems.append(f"{tag}: beta <= 1")
        if upper is not None and not pt.beta < upper:
            problems.append(f"{tag}: beta >= N-2gamma ({pt.beta:g} >= {upper:g})")
        if not 0 < pt.sigma < 1:
            problems.append(f"{tag}: sigma must lie in (0, 1)")
    for j in range(len(profile.points)):
        for k in range(j + 1, len(profile.points)):
            d = np.linalg.norm(np.subtract(profile.points[j].z, profile.points[k].z))
            if not d > 4 * profile.cutoff_radius:
                problems.append(f"points {j} and {k}: patches overlap (distance {d:g} <= 4 r0)")
    if bound_estimate(profile) > profile.global_bound:
        problems.append(f"global_bound {profile.global_bound:g} is below sup|K| estimate {bound_estimate(profile):g}")
    return problems


def bound_estimate(profile: KProfile) -> float:
    """Upper bound for sup|K| from the patch formulas."""
    r = 2.0 * profile.cutoff_radius
    best = 0.0
    for pt in profile.points:
        amp = abs(pt.K_value) + sum(abs(a) for a in pt.a) * r**pt.beta
        amp += abs(pt.remainder) * r ** (pt.beta + pt.sigma)
        best = max(best, amp)
    return best


def profile_to_dict(profile: KProfile) -> dict:
    points = []
    for pt in profile.points:
        entry = {"z": list(pt.z), "K_value": pt.K_value, "a": list(pt.a), "beta": pt.beta, "sigma": pt.sigma}
        if pt.remainder:
            entry["remainder"] = pt.remainder
        points.append(entry)
    out = {"version": SCHEMA_VERSION, "points": points, "cutoff_radius": profile.cutoff_radius}
    out["global_bound"] = profile.global_bound
    return out


def profile_from_dict(data: dict) -> KProfile:
    version = data.get("version", SCHEMA_VERSION)
    if int(version) > SCHEMA_VERSION:
        raise ValueError(f"profile schema version {version} is newer than supported {SCHEMA_VERSION}")
    pts = [
        CriticalPoint(
            z=p["z"],
            K_value=p["K_value"],
            a=p["a"],
            beta=p["beta"],
            sigma=p.get("sigma", 0.5),
            remainder=p.get("remainder", 0.0),
        )
        for p in data["points"]
    ]
    return KProfile(points=pts, cutoff_radius=data["cutoff_radius"], global_bound=data["global_bound"])


def load_profile(path) -> KProfile:
    return profile_from_dict(json.loads(Path(path).read_text()))


def save_profile(profile: KProfile, path) -> None:
    Path(path).write_text(json.dumps(profile_to_dict(profile), indent=2) + "\n")


def demo_profile() -> KProfile:
    """The bundled symmetric two-point profile in R^3."""
    text = resources.files("frnlab").joinpath("data/demo_profile.json").read_text()
    return profile_from_dict(json.loads(text))
