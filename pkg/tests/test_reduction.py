import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frnlab.bubbles import FracParams
from frnlab.interaction import ReferenceConstants, C_N_beta, pair_interaction_constant
from frnlab.reduction import (
    DegreeError,
    HypothesisError,
    ReducedProblem,
    SolverError,
    brouwer_degree,
    derive_m,
    fd_jacobian,
    find_zeros,
    jacobian_det,
    log_linear_t_star,
    newton,
    peak_parameters,
    problem_from_profile,
    product_map,
    scale_exponent,
    scale_L,
    solve_reduced,
    symmetric_t_star,
    winding_number,
)


@pytest.fixture
def sym(P):
    return ReducedProblem(beta=(1.5, 1.5), m=(1.0, 1.0), params=P)


def test_symmetric_solution(sym):
    sol = solve_reduced(sym)
    npt.assert_allclose(sol.t_star, (1.0, 1.0), rtol=1e-12)
    assert sol.residual_norm < 1e-12
    assert sol.degree == -1
    npt.assert_allclose(sol.jacobian_det, -0.75, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    b1=st.floats(1.05, 1.95),
    b2=st.floats(1.05, 1.95),
    m1=st.floats(0.3, 3.0),
    m2=st.floats(0.3, 3.0),
)
def test_jacobian_closed_form_matches_fd(b1, b2, m1, m2):
    P = FracParams(3, 0.5)
    prob = ReducedProblem(beta=(b1, b2), m=(m1, m2), params=P, box=(1e-3, 1e3))
    sol = solve_reduced(prob, with_degree=False)
    assert sol.residual_norm < 1e-12
    fd = np.linalg.det(fd_jacobian(prob.g, sol.t_star))
    npt.assert_allclose(fd, jacobian_det(prob, sol.t_star), rtol=1e-6)
    assert jacobian_det(prob, sol.t_star) < 0


def test_closed_form_symmetric_t_star(P):
    prob = ReducedProblem(beta=(1.5, 1.5), m=(0.7, 0.7), params=P)
    t = symmetric_t_star(prob)
    npt.assert_allclose(solve_reduced(prob, with_degree=False).t_star, (t, t), rtol=1e-10)
    with pytest.raises(ValueError):
        symmetric_t_star(ReducedProblem(beta=(1.5, 1.4), m=(1, 1), params=P))


def test_uniqueness_from_random_starts(sym):
    rng = np.random.default_rng(3)
    starts = np.exp(rng.uniform(np.log(0.1), np.log(10), size=(100, 2)))
    sols = [solve_reduced(sym, start=s, with_degree=False) for s in starts]
    npt.assert_allclose(np.array([s.t_star for s in sols]), 1.0, rtol=1e-10)
    assert max(s.residual_norm for s in sols) < 1e-12


@settings(max_examples=30, deadline=None)
@given(b1=st.floats(1.05, 1.95), b2=st.floats(1.05, 1.95), m1=st.floats(0.2, 5.0), m2=st.floats(0.2, 5.0))
def test_newton_matches_log_linear_solution(b1, b2, m1, m2):
    prob = ReducedProblem(beta=(b1, b2), m=(m1, m2), params=FracParams(3, 0.5))
    npt.assert_allclose(solve_reduced(prob, with_degree=False).t_star, log_linear_t_star(prob), rtol=1e-10)


def test_spurious_zero_at_infinity_avoided(P):
    # g itself tends to 0 for large t; the solver must not stop there
    prob = ReducedProblem(beta=(1.5, 1.5), m=(0.7, 0.7), params=P)
    assert np.linalg.norm(prob.g((1e8, 1e8))) < 1e-11
    npt.assert_allclose(solve_reduced(prob, with_degree=False).t_star, (0.49, 0.49), rtol=1e-10)


def test_asymmetric_instance(P):
    prob = ReducedProblem(beta=(1.2, 1.8), m=(2.0, 3.0), params=P, box=(0.1, 20.0))
    sol = solve_reduced(prob)
    assert np.linalg.norm(prob.g(sol.t_star)) < 1e-12
    assert sol.degree == -1


def test_hypothesis_violations(P):
    with pytest.raises(HypothesisError):
        ReducedProblem(beta=(1.9, 1.9), m=(1, 1), params=FracParams(3, 0.9))
    with pytest.raises(HypothesisError):
        ReducedProblem(beta=(1.5, 1.5), m=(1, -1), params=P)
    with pytest.raises(HypothesisError):
        scale_exponent(2.0, 2.0, P)


def test_scale_law(P):
    assert scale_exponent(1.5, 1.5, P) == pytest.approx(3.0)
    npt.assert_allclose(scale_L(1e-3, 1.5, 1.5, P), 1e9, rtol=1e-12)
    prob = ReducedProblem(beta=(1.5, 1.5), m=(1.0, 1.0), params=P)
    sol = solve_reduced(prob, with_degree=False)
    lam = peak_parameters(prob, 1e-3, sol)["lambda"]
    npt.assert_allclose(lam, (1e6, 1e6), rtol=1e-12)
    halved = peak_parameters(prob, 5e-4, sol)["lambda"]
    # lam ~ eps^(-kappa / beta) with kappa = 3, beta = 1.5
    npt.assert_allclose(halved[0] / lam[0], 4.0, rtol=1e-12)


def test_profile_problem_uses_critical_points(P, profile):
    cb = tuple(C_N_beta(P, pt.beta) for pt in profile.points)
    refs = ReferenceConstants(pair_interaction_constant(P), cb, pair_interaction_constant(P), cb)
    prob = problem_from_profile(profile, P, refs)
    npt.assert_allclose(prob.m, derive_m(profile, refs, P))
    npt.assert_allclose(prob.m[0], 0.9428090415820631, rtol=1e-12)
    pk = peak_parameters(prob, 1e-3)
    assert pk["y"] == tuple(pt.z for pt in profile.points)
    assert problem_from_profile(profile, P, refs, m=(1, 1)).m == (1.0, 1.0)


def test_identity_and_constant_degrees():
    box = ((-1.0, 1.0), (-1.0, 1.0))
    assert brouwer_degree(lambda x: np.asarray(x), box) == 1
    assert brouwer_degree(lambda x: np.array([1.0, 2.0]), box) == 0
    assert brouwer_degree(lambda x: np.array([x[0], -x[1]]), box) == -1


def test_winding_of_z_squared():
    def f(x):
        z = complex(x[0], x[1]) ** 2
        return np.array([z.real, z.imag])

    assert winding_number(f, ((-1, 1), (-1, 1))) == 2


def test_boundary_zero_is_rejected():
    with pytest.raises(DegreeError):
        brouwer_degree(lambda x: np.asarray(x) - np.array([1.0, 0.0]), ((-1, 1), (-1, 1)))


def test_degree_invariant_under_box_enlargement(sym):
    assert brouwer_degree(sym.g, ((0.1, 10), (0.1, 10)), jac=sym.jacobian) == -1
    assert brouwer_degree(sym.g, ((0.05, 40), (0.05, 40)), jac=sym.jacobian) == -1


def test_product_degree_is_multiplicative(sym):
    H = product_map(sym.g, lambda x: np.asarray(x) - 0.5, 2)
    box = sym.box_2d() + ((0.0, 1.0), (0.0, 1.0))
    assert brouwer_degree(H, box, per_dim=4) == -1


def test_find_zeros_deduplicates(sym):
    zeros = find_zeros(sym.g, sym.box_2d(), sym.jacobian, per_dim=5)
    assert len(zeros) == 1


def test_newton_failure_reports_trace():
    with pytest.raises(SolverError) as info:
        newton(lambda x: np.array([x[0] ** 2 + 1.0]), np.array([0.5]), max_iter=5)
    assert len(info.value.trace) > 0
