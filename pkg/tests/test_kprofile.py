import dataclasses
import json

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frnlab.bubbles import FracParams
from frnlab.kprofile import (
    CriticalPoint,
    KProfile,
    bound_estimate,
    eval_K,
    load_profile,
    local_model,
    profile_from_dict,
    profile_to_dict,
    save_profile,
    smoothstep,
    validate_profile,
)


def test_demo_profile_is_valid(profile, P):
    assert validate_profile(profile, P) == []
    assert profile.dim == 3
    assert [pt.sum_a for pt in profile.points] == [-3.0, -3.0]
    assert bound_estimate(profile) <= profile.global_bound


def test_value_at_critical_points(profile):
    npt.assert_array_equal(eval_K(profile, np.array([pt.z for pt in profile.points])), [1.0, 1.0])


def test_single_coordinate_offset(profile):
    pt = profile.points[0]
    t = 0.3 * profile.cutoff_radius
    x = np.asarray(pt.z) + np.array([t, 0, 0])
    npt.assert_allclose(eval_K(profile, x[None])[0], pt.K_value + pt.a[0] * t**pt.beta, rtol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.integers(0, 1))
def test_local_model_is_exact_inside_half_radius(d, j):
    from frnlab.kprofile import demo_profile

    prof = demo_profile()
    d = np.asarray(d)
    n = np.linalg.norm(d)
    if n == 0:
        return
    pt = prof.points[j]
    x = np.asarray(pt.z) + d / n * 0.5 * prof.cutoff_radius * min(n, 0.999)
    assert eval_K(prof, x[None])[0] == local_model(pt, x[None])[0]


def test_zero_outside_patches(profile):
    X = np.array([[0.0, 0.0, 0.0], [5.0, 5.0, 5.0], [-1.0, 2 * profile.cutoff_radius + 1e-9, 0.0]])
    npt.assert_array_equal(eval_K(profile, X), 0.0)


def test_blend_is_continuous_and_bounded(profile):
    pt = profile.points[1]
    r0 = profile.cutoff_radius
    r = np.linspace(0.5 * r0, 2.5 * r0, 4001)
    X = np.asarray(pt.z) + r[:, None] * np.array([0.0, 0.6, 0.8])
    k = eval_K(profile, X)
    assert np.max(np.abs(np.diff(k))) < 1e-2
    local = local_model(pt, X)
    mid = (r > r0) & (r < 2 * r0)
    assert np.all((k[mid] - 0) * (local[mid] - k[mid]) >= -1e-15)


def test_smoothstep_is_c2():
    u = np.array([0.0, 1.0])
    npt.assert_array_equal(smoothstep(u), [0.0, 1.0])
    h = 1e-4
    for u0 in (0.0, 1.0):
        d1 = (smoothstep(u0 + h) - smoothstep(u0 - h)) / (2 * h)
        d2 = (smoothstep(u0 + h) - 2 * smoothstep(u0) + smoothstep(u0 - h)) / h**2
        assert abs(d1) < 1e-6 and abs(d2) < 1e-2


def test_json_round_trip(profile, tmp_path):
    path = tmp_path / "p.json"
    save_profile(profile, path)
    assert load_profile(path) == profile
    assert profile_from_dict(json.loads(path.read_text())) == profile
    assert profile_to_dict(profile)["version"] == 1


def test_newer_schema_rejected(profile):
    data = profile_to_dict(profile)
    data["version"] = 99
    with pytest.raises(ValueError):
        profile_from_dict(data)


def test_validation_reports_every_problem():
    bad = KProfile(
        points=[
            CriticalPoint(z=(0, 0, 0), K_value=1, a=(1, 1, 0), beta=2.5, sigma=1.5),
            CriticalPoint(z=(0.5, 0, 0), K_value=1, a=(-1, -1, -1), beta=0.9),
        ],
        cutoff_radius=0.25,
        global_bound=0.1,
    )
    msgs = " | ".join(validate_profile(bad, FracParams(3, 0.5)))
    for frag in ("nonzero", "negative", "beta >= N-2gamma", "sigma", "beta <= 1", "overlap", "global_bound"):
        assert frag in msgs


def test_dimension_mismatch(profile):
    assert any("dimension" in m for m in validate_profile(profile, FracParams(2, 0.5)))


def test_remainder_hook_changes_values(profile):
    pt = dataclasses.replace(profile.points[0], remainder=0.5)
    x = np.asarray(pt.z) + np.array([[0.1, 0.1, 0.0]])
    r = np.sqrt(0.02)
    npt.assert_allclose(local_model(pt, x) - local_model(profile.points[0], x), 0.5 * r ** (pt.beta + pt.sigma))
