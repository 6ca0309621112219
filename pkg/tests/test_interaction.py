import math

import numpy as np
import numpy.testing as npt
import pytest

from frnlab.bubbles import Bubble, FracParams
from frnlab.interaction import (
    C_N_beta,
    D_N_beta,
    D_N_beta_printed,
    InteractionConfig,
    b10_constant,
    b11_constant,
    eps12_abbrev,
    eps_ij,
    extrapolate,
    interaction_constant,
    k_weighted_dy_value,
    pair_interaction_constant,
    sweep,
    two_bubble_config,
    verify_cross_dlambda,
    verify_cross_dy,
    verify_interaction_integral,
    verify_k_weighted_dlambda,
    verify_k_weighted_dy,
    verify_mixed_power,
)


def test_closed_form_constants(P):
    npt.assert_allclose(interaction_constant(P), 8 * math.pi**2, rtol=1e-12)
    npt.assert_allclose(pair_interaction_constant(P), 8 * math.pi**2, rtol=1e-12)
    npt.assert_allclose(b10_constant(P), -4 * math.pi**2, rtol=1e-12)
    npt.assert_allclose(b11_constant(P), -8 * math.pi**2, rtol=1e-12)
    # frozen values of the K-weighted constants at beta = 1.5
    npt.assert_allclose(C_N_beta(P, 1.5), 6.978864199638882, rtol=1e-10)
    npt.assert_allclose(D_N_beta(P, 1.5), 10.468296299458322, rtol=1e-10)
    assert D_N_beta_printed(P, 1.5) > 0


def test_interaction_parameters(P):
    assert eps_ij(2.0, 2.0, (0, 0, 0), (1, 0, 0), P) == pytest.approx(1 / 6)
    assert eps12_abbrev(10.0, 10.0, P) == pytest.approx(0.01)
    assert eps_ij(3.0, 5.0, (0, 0, 0), (0, 0, 0), P) == eps_ij(5.0, 3.0, (0, 0, 0), (0, 0, 0), P)


def test_interaction_sweep_converges(P):
    reps = sweep(verify_interaction_integral, P, (10, 30, 100))
    errs = [r.relative_error for r in reps]
    assert errs[0] > errs[1] > errs[2]
    npt.assert_allclose(errs, [0.01923, 0.002212, 0.0001999], rtol=2e-3)
    assert all(r.eps_kind == "full" for r in reps)


def test_interaction_with_unequal_scales(P):
    cfg = InteractionConfig(Bubble((0, 0, 0), 40.0), Bubble((1, 0, 0), 90.0), P)
    assert verify_interaction_integral(cfg).relative_error < 2e-3


def test_mixed_power_is_bounded(P):
    reps = [verify_mixed_power(two_bubble_config(P, lam)) for lam in (10, 100)]
    c = [r.extras["fitted_C"] for r in reps]
    assert all(50 < v < 150 for v in c)


def test_b8_scaled_value_approaches_constant(P, profile):
    rep = verify_k_weighted_dlambda(two_bubble_config(P, 100.0, profile=profile), 0)
    npt.assert_allclose(rep.extras["scaled"], -C_N_beta(P, 1.5), rtol=0.01)
    assert rep.eps_kind == "none"


def test_b9_zero_offset_vanishes_transversally(P, profile):
    cfg = two_bubble_config(P, 30.0, profile=profile)
    assert abs(float(k_weighted_dy_value(cfg, 0, 1).value)) < 1e-12
    assert abs(float(k_weighted_dy_value(cfg, 0, 2).value)) < 1e-12


def test_b9_leading_term_with_offset(P, profile):
    lam = 100.0
    y = np.asarray(profile.points[0].z) + np.array([0, 0.1 / lam, 0])
    cfg = InteractionConfig(Bubble(y, lam), Bubble(profile.points[1].z, lam), P, profile)
    rep = verify_k_weighted_dy(cfg, 0, 1)
    assert rep.relative_error < 0.01
    assert np.sign(rep.numeric) == np.sign(rep.predicted_leading)


def test_b10_and_b11(P):
    cfg = two_bubble_config(P, 100.0, distance=2.0)
    assert verify_cross_dlambda(cfg, 0).relative_error < 2e-3
    assert verify_cross_dy(cfg, 0, 0).relative_error < 1e-3
    assert abs(verify_cross_dy(cfg, 0, 1).numeric) < 1e-12


def test_requires_profile(P):
    with pytest.raises(ValueError):
        verify_k_weighted_dlambda(two_bubble_config(P, 10.0), 0)


def test_extrapolate_recovers_limit():
    lam = np.array([10.0, 30.0, 100.0])
    vals = 3.0 + 7.0 * lam**-1.5
    assert extrapolate(lam, vals, 1.5) == pytest.approx(3.0, rel=1e-12)


def test_report_rows_are_flat(P):
    row = verify_interaction_integral(two_bubble_config(P, 10.0)).row()
    assert {"lemma_id", "lambda", "numeric", "predicted", "relative_error"} <= set(row)
    assert all(np.isscalar(v) for v in row.values())


def test_other_parameters():
    P = FracParams(2, 0.5)
    rep = verify_interaction_integral(two_bubble_config(P, 100.0))
    assert rep.relative_error < 0.05
