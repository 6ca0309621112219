import numpy as np
import numpy.testing as npt
import pytest

from frnlab.bubbles import Bubble
from frnlab.galerkin import (
    Configuration,
    assemble,
    build_dictionary,
    kernel_functions,
    min_eigen_quadratic_form,
    project_to_E2,
)


@pytest.fixture
def single(P):
    return Configuration((Bubble((0, 0, 0), 2.0),), P)


def test_kernel_dimension(P):
    bs = (Bubble((-1, 0, 0), 5.0), Bubble((1, 0, 0), 5.0))
    assert len(kernel_functions(bs, P)) == 2 * (P.N + 2)


def test_dictionaries_are_nested(P):
    bs = (Bubble((-1, 0, 0), 5.0), Bubble((1, 0, 0), 5.0))
    small, large = build_dictionary(bs, 6, P, seed=3), build_dictionary(bs, 12, P, seed=3)
    assert large.prefix(6).dictionary == small.dictionary
    assert small.size == 6


def test_gram_matrix_is_symmetric_positive(single, P):
    basis = build_dictionary(single.bubbles, 4, P)
    G, V, _ = assemble(list(basis.dictionary) + list(basis.kernel), single)
    npt.assert_allclose(G, G.T, rtol=1e-8, atol=1e-12)
    npt.assert_allclose(V, V.T, rtol=1e-8, atol=1e-12)
    assert np.linalg.eigvalsh(G)[0] > 0


def test_single_bubble_spectrum(single, P):
    basis = build_dictionary(single.bubbles, 4, P)
    rep = min_eigen_quadratic_form(basis, single)
    # the orthogonal complement of the kernel has eigenvalues 1 - p / mu >= 1 - p/(p + 4) = 1/3
    assert 1 / 3 - 1e-9 < rep.min_eigenvalue < 0.36
    assert rep.constraint_residual_max < 1e-10
    assert rep.dimension == 4


def test_kernel_control_gives_zero(single, P):
    basis = build_dictionary(single.bubbles, 4, P)
    rep = min_eigen_quadratic_form(basis, single, include_kernel=(1,))
    assert abs(rep.min_eigenvalue) < 1e-8


def test_projection_is_orthogonal_to_kernel(single, P):
    basis = build_dictionary(single.bubbles, 4, P)
    pr = project_to_E2(basis, single)
    nk = pr.n_kernel
    M = pr.G_full.shape[0] - nk
    cross = pr.G_full[M:, :] @ pr.T
    assert np.max(np.abs(cross)) < 1e-10 * np.max(np.abs(pr.G_full))
