import math

import numpy as np
import numpy.testing as npt
import pytest

from frnlab.bubbles import Bubble, FracParams, bubble_energy_integral, eval_bubble, frac_laplacian_exact
from frnlab.functions import BubbleShape, Gaussian, RationalBump, pairing_asymmetry
from frnlab.quadrature import (
    Feature,
    QuadratureError,
    QuadratureSpec,
    hgamma_inner,
    integrate_rn,
    pv_frac_laplacian,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=np.array([1e-8, -1.0]))
    with pytest.raises(ValueError):
        QuadratureSpec(far_field_radius=-1.0)


def test_env_budget(monkeypatch):
    monkeypatch.setenv("FRNLAB_QUAD_BUDGET", "123")
    assert QuadratureSpec().max_subdivisions == 123
    monkeypatch.setenv("FRNLAB_QUAD_BUDGET", "0")
    with pytest.raises(ValueError):
        QuadratureSpec()


@pytest.mark.parametrize("N", [2, 3, 4])
def test_gaussian_integral(N):
    res = integrate_rn(lambda X: np.exp(-np.sum(X**2, axis=1)), dim=N, features=[Feature(np.zeros(N))], decay=60)
    npt.assert_allclose(res.value, math.pi ** (N / 2), rtol=1e-10)


def test_critical_norm_of_a_sharp_bubble(P):
    b = Bubble((0.3, 0.0, -0.2), 250.0)
    res = integrate_rn(
        lambda X: eval_bubble(b, P, X) ** P.two_star,
        dim=3,
        features=[Feature(b.center, 1 / b.scale)],
        decay=2 * P.N,
    )
    npt.assert_allclose(res.value, bubble_energy_integral(P), rtol=1e-8)


def test_vector_valued_integrand_and_frozen_grid(P):
    b1, b2 = Bubble((-0.5, 0, 0), 3.0), Bubble((0.5, 0, 0), 3.0)

    def f(X):
        u, v = eval_bubble(b1, P, X), eval_bubble(b2, P, X)
        return np.stack([u**P.two_star, u**P.p * v], axis=1)

    feats = [Feature(b1.center, 1 / 3), Feature(b2.center, 1 / 3)]
    res = integrate_rn(f, QuadratureSpec(rel_tol=1e-9), dim=3, features=feats, decay=2 * P.N)
    npt.assert_allclose(res.value[0], bubble_energy_integral(P), rtol=1e-8)
    again = res.grid.integrate(f)
    # the frozen rule reproduces the adaptive value within the requested tolerance
    npt.assert_allclose(again, res.value - res.tail_correction, rtol=1e-9)


def test_strict_budget_raises(P):
    b = Bubble((0, 0, 0), 1e3)
    with pytest.raises(QuadratureError):
        integrate_rn(
            lambda X: eval_bubble(b, P, X) ** P.two_star,
            QuadratureSpec(rel_tol=1e-12, max_subdivisions=2),
            dim=3,
            features=[Feature((0.7, 0.1, 0), 1.0)],
            decay=2 * P.N,
        )


@pytest.mark.parametrize(
    "f",
    [
        Gaussian((0.2, 0.0, 0.1), 0.7),
        RationalBump((0.0, 0.3, 0.0), 1.3, 2.4),
    ],
    ids=["gaussian", "rational"],
)
def test_pv_matches_closed_forms(P, f):
    for x in ([0, 0, 0], [0.4, -0.2, 0.9], [3.0, 1.0, -2.0]):
        num = pv_frac_laplacian(f, P, x)
        npt.assert_allclose(num, f.frac_laplacian(np.asarray(x, float)[None], P)[0], rtol=1e-6)


def test_pv_bubble_identity_small_gamma():
    P = FracParams(3, 0.2)
    b = Bubble((0, 0, 0), 2.0)
    for r in (0.0, 0.5, 5.0):
        x = np.array([r, 0.0, 0.0])
        npt.assert_allclose(pv_frac_laplacian(BubbleShape(b, P), P, x), frac_laplacian_exact(b, P, x[None])[0], rtol=1e-6)


def test_hgamma_inner_of_bubbles_is_interaction(P):
    b1, b2 = Bubble((0, 0, 0), 1.0), Bubble((1, 0, 0), 1.0)
    f, g = BubbleShape(b1, P), BubbleShape(b2, P)
    direct = integrate_rn(
        lambda X: eval_bubble(b1, P, X) ** P.p * eval_bubble(b2, P, X),
        dim=3,
        features=[Feature(b1.center), Feature(b2.center)],
        decay=2 * P.N,
    ).value
    npt.assert_allclose(hgamma_inner(f, g, P), direct, rtol=1e-9)
    assert pairing_asymmetry(f, g, P) < 1e-8


def test_numeric_pairing_route_agrees(P):
    f = Gaussian((0.0, 0.0, 0.0), 0.8)
    g = RationalBump((0.5, 0.0, 0.0), 1.0, 2.2)
    npt.assert_allclose(hgamma_inner(f, g, P, numeric=True), hgamma_inner(f, g, P), rtol=1e-6)
