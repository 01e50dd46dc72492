import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from emgram.errors import SolverDivergenceError
from emgram.integrate import TimeGrid, solve, ssp_rk
from emgram.model import LinearSystem, SystemModel, as_model
from emgram.signals import InputSignal


def decay(x, u, p, t):
    return -x


def _terminal_error(h, stages, T=1.0):
    grid = TimeGrid(h, T)
    y = ssp_rk(decay, lambda x, u, p, t: x, grid, np.ones((1, 1)), np.zeros((0, 1, grid.steps)),
               np.zeros((0, 1)), stages)
    return abs(y[0, 0, -1] - np.exp(-T))


@pytest.mark.parametrize("stages", [2, 3, 4, 5])
def test_second_order_convergence(stages):
    hs = np.array([0.1, 0.05, 0.025])
    err = np.array([_terminal_error(h, stages) for h in hs])
    slope = np.polyfit(np.log(hs), np.log(err), 1)[0]
    assert 1.9 <= slope <= 2.1


def test_grid_sampling():
    grid = TimeGrid(0.1, 1.0)
    assert grid.steps == 10
    np.testing.assert_allclose(grid.times, np.linspace(0, 1, 11))
    np.testing.assert_allclose(grid.quadrature_times, np.linspace(0.1, 1, 10))


def test_zero_field_keeps_initial_state():
    m = SystemModel(lambda x, u, p, t: np.zeros_like(x), None, 0, 3, 3, vectorized=True)
    c = np.array([1.0, -2.0, 0.5])
    y = solve(m, TimeGrid(0.1, 1.0), c, np.zeros((0, 10)))
    assert y.shape == (3, 11)
    np.testing.assert_array_equal(y, np.repeat(c[:, None], 11, axis=1))


def test_custom_solver_result_is_passed_through():
    m = SystemModel(decay, None, 0, 2, 2)
    grid = TimeGrid(0.1, 1.0)

    def zero_solver(f, g, grid, x0, u, p):
        return np.zeros((2, x0.shape[1], grid.steps + 1))

    y = solve(m, grid, np.ones(2), np.zeros((0, 10)), solver=zero_solver)
    np.testing.assert_array_equal(y, 0.0)


def test_linear_states_match_matrix_exponential():
    A = np.array([[-1.0, 2.0], [-2.0, -1.0]])
    x0 = np.array([1.0, 0.5])
    errs = []
    for h in (0.02, 0.01):
        grid = TimeGrid(h, 2.0)
        y = solve(LinearSystem(A, np.zeros((2, 0)), np.eye(2)), grid, x0, np.zeros((0, grid.steps)))
        errs.append(np.abs(y[:, -1] - scipy.linalg.expm(2.0 * A) @ x0).max())
    assert errs[1] < 1e-4
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_four_state_impulse_response_at_one(four_state):
    grid = TimeGrid(0.001, 2.0)
    y = solve(four_state, grid, np.zeros(4), InputSignal.impulse(1, grid))
    exact = (four_state.C @ scipy.linalg.expm(four_state.A) @ four_state.B)[0, 0]
    assert abs(y[0, 1000] - exact) < 1e-3


def test_identity_output_returns_state():
    sys = LinearSystem(-np.eye(2), np.ones((2, 1)), np.eye(2))
    grid = TimeGrid(0.1, 1.0)
    m = as_model(sys).replace(g=None, Q=2)
    np.testing.assert_array_equal(solve(m, grid, np.ones(2), np.zeros((1, 10))),
                                  solve(sys, grid, np.ones(2), np.zeros((1, 10))))


@given(st.integers(0, 2**31), st.integers(2, 5))
def test_affine_path_matches_generic_integrator(seed, stages):
    rng = np.random.default_rng(seed)
    N, M, P = 4, 2, 1
    A = rng.standard_normal((N, N)) - 3 * np.eye(N)
    sys = LinearSystem(A, rng.standard_normal((N, M)), rng.standard_normal((2, N)),
                       F=rng.standard_normal((N, P)))
    grid = TimeGrid(0.01, 1.0)
    x0 = rng.standard_normal((N, 3))
    u = rng.standard_normal((M, 3, grid.steps))
    p = rng.standard_normal((P, 3))
    fast = solve(sys, grid, x0, u, p, stages=stages)
    slow = solve(as_model(sys).replace(affine=None), grid, x0, u, p, stages=stages)
    np.testing.assert_allclose(fast, slow, rtol=1e-11, atol=1e-12)


def test_gain_model_with_varying_parameter_uses_generic_path():
    sys = LinearSystem([[-1.0]], [[1.0]], [[1.0]], gain=True)
    grid = TimeGrid(0.01, 1.0)
    u = np.ones((1, 2, grid.steps))
    y = solve(sys, grid, np.zeros((1, 2)), u, np.array([[1.0, 2.0]]))
    slow = solve(as_model(sys).replace(affine=None), grid, np.zeros((1, 2)), u,
                 np.array([[1.0, 2.0]]))
    np.testing.assert_array_equal(y, slow)


def _stability_limit(stages):
    """Largest h with a non-growing two-step amplification on x' = -x."""
    def amplification(h):
        grid = TimeGrid(h, 2 * h)
        y = ssp_rk(decay, lambda x, u, p, t: x, grid, np.ones((1, 1)),
                   np.zeros((0, 1, 2)), np.zeros((0, 1)), stages)
        return abs(y[0, 0, -1])

    lo, hi = 0.1, 50.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if amplification(mid) <= 1.0 else (lo, mid)
    return lo


def test_stable_step_grows_with_stages():
    limits = [_stability_limit(s) for s in (2, 3, 4, 5)]
    assert abs(limits[0] - 2.0) < 1e-9
    assert np.all(np.diff(limits) > 0)


@pytest.mark.parametrize("affine", [True, False])
def test_divergence_reports_step(affine):
    sys = LinearSystem([[50.0]], [[0.0]], [[1.0]])
    m = as_model(sys) if affine else as_model(sys).replace(affine=None)
    with pytest.raises(SolverDivergenceError) as info:
        solve(m, TimeGrid(1.0, 1000.0), np.ones(1), np.zeros((1, 1000)))
    assert info.value.step > 0
