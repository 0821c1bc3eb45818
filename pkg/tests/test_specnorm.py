import numpy as np
import pytest
from scipy.linalg import svdvals

from salsa.autograd import Rng, Tensor, gradcheck
from salsa.exceptions import ContractError
from salsa.specnorm import SpecNormState, exact_spectral_norm, power_iteration_step, spectral_normalize

SHAPES = [(3, 3), (8, 5), (5, 8), (16, 16), (32, 7), (64, 64), (1, 9), (9, 1), (20, 40), (48, 24)]


def gapped_matrix(rng: Rng, shape) -> np.ndarray:
    """Random matrix whose top singular value is twice the second."""
    u, s, vt = np.linalg.svd(rng.normal(shape), full_matrices=False)
    if len(s) > 1:
        s[0] = 2.0 * s[1]
    return (u * s) @ vt


@pytest.mark.parametrize("seed", range(20))
def test_normalized_weight_has_unit_spectral_norm(seed):
    rng = Rng(seed)
    w = gapped_matrix(rng, SHAPES[seed % len(SHAPES)])
    state = SpecNormState.initialize(w, rng, n_power_iters=1)
    for _ in range(49):
        spectral_normalize(Tensor(w), state)
    normalized = w / state.sigma
    assert 0.999 <= exact_spectral_norm(normalized) <= 1.001
    assert abs(state.sigma - exact_spectral_norm(w)) <= 1e-6 * max(1.0, state.sigma)


@pytest.mark.parametrize("seed", range(5))
def test_gram_oracle_agrees_with_svd(seed):
    w = Rng(seed).normal((12, 7))
    assert exact_spectral_norm(w) == pytest.approx(svdvals(w)[0], rel=1e-9)


def test_single_step_matches_definition():
    w = Rng(0).normal((4, 3))
    u = np.ones(4) / 2.0
    sigma, u_next = power_iteration_step(w, u)
    v = w.T @ u / np.linalg.norm(w.T @ u)
    expected_u = w @ v / np.linalg.norm(w @ v)
    np.testing.assert_allclose(u_next, expected_u, atol=1e-12)
    assert sigma == pytest.approx(expected_u @ w @ v, abs=1e-12)


def test_zero_matrix_is_degenerate():
    with pytest.raises(ContractError, match="degenerate"):
        power_iteration_step(np.zeros((3, 3)), np.ones(3) / np.sqrt(3))


def test_evaluation_reuses_cached_sigma():
    w = Rng(1).normal((6, 4))
    state = SpecNormState.initialize(w, Rng(2))
    u_before, sigma_before = state.u.copy(), state.sigma
    out = spectral_normalize(Tensor(w), state, update=False)
    np.testing.assert_array_equal(state.u, u_before)
    np.testing.assert_allclose(out.data, w / sigma_before)
    spectral_normalize(Tensor(w), state, update=True)
    assert not np.array_equal(state.u, u_before)


def test_sigma_is_constant_in_backward():
    w = Rng(3).normal((5, 4))
    state = SpecNormState.initialize(w, Rng(4))
    x = Tensor(Rng(5).normal((2, 5)))

    def f(t):
        h = x @ spectral_normalize(t, state, update=False)
        return (h * h).sum()

    assert gradcheck(f, Tensor(w)) < 1e-4
