import numpy as np
import pytest

from cascadenet.errors import NumericalError, ParameterError
from cascadenet.scg import ScgConfig, minimize


def least_squares(a, b):
    def oracle(w):
        r = a @ w - b
        return float(r @ r), 2.0 * a.T @ r

    return oracle


def rosenbrock(w):
    x, y = w
    f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
    return f, np.array([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)])


def test_stationary_start():
    res = minimize(lambda w: (float(w @ w), 2 * w), np.zeros(3))
    assert res.iterations == 0 and res.converged_by == "gradient"
    np.testing.assert_array_equal(res.params, 0.0)


def test_linear_least_squares_matches_normal_equations():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((20, 5))
    b = rng.standard_normal(20)
    res = minimize(least_squares(a, b), np.zeros(5))
    w_star = np.linalg.solve(a.T @ a, a.T @ b)
    assert np.max(np.abs(res.params - w_star)) < 1e-6


def test_rosenbrock():
    res = minimize(rosenbrock, np.array([-1.2, 1.0]))
    assert res.objective < 1e-6
    np.testing.assert_allclose(res.params, [1.0, 1.0], atol=1e-3)


@pytest.mark.parametrize("seed", range(6))
def test_convex_quadratic_within_3n(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    q = rng.standard_normal((n, n))
    h = q @ q.T + n * np.eye(n)
    c = rng.standard_normal(n)
    w_star = np.linalg.solve(h, c)
    res = minimize(lambda w: (0.5 * w @ h @ w - c @ w, h @ w - c), np.zeros(n), ScgConfig(max_iterations=3 * n))
    assert np.linalg.norm(res.params - w_star) < 1e-5


def test_accepted_objectives_nonincreasing():
    res = minimize(rosenbrock, np.array([-1.2, 1.0]))
    assert np.all(np.diff(res.trace) <= 0)
    assert res.objective <= res.trace[0]


def test_deterministic():
    r1 = minimize(rosenbrock, np.array([0.5, -0.5]))
    r2 = minimize(rosenbrock, np.array([0.5, -0.5]))
    assert np.array_equal(r1.params, r2.params) and r1.trace == r2.trace


def test_max_iterations():
    res = minimize(rosenbrock, np.array([-1.2, 1.0]), ScgConfig(max_iterations=3))
    assert res.iterations == 3 and res.converged_by == "max_iter"


def test_start_not_modified():
    start = np.array([-1.2, 1.0])
    minimize(rosenbrock, start)
    np.testing.assert_array_equal(start, [-1.2, 1.0])


def test_non_finite_oracle_carries_iteration():
    def oracle(w):
        f, g = rosenbrock(w)
        return (np.nan if abs(w[0]) > 0 and w[0] != -1.2 else f), g

    with pytest.raises(NumericalError) as info:
        minimize(oracle, np.array([-1.2, 1.0]))
    assert info.value.iteration == 1


def test_non_finite_at_start():
    with pytest.raises(NumericalError) as info:
        minimize(lambda w: (np.inf, w), np.ones(2))
    assert info.value.iteration == 0


def test_concave_direction_handled():
    # Indefinite curvature along the first step forces the delta <= 0 branch.
    def oracle(w):
        x, y = w
        f = x**4 - x**2 + y**2
        return f, np.array([4 * x**3 - 2 * x, 2 * y])

    res = minimize(oracle, np.array([0.1, 1.0]))
    assert res.objective < -0.24
    np.testing.assert_allclose(abs(res.params[0]), np.sqrt(0.5), atol=1e-4)


def test_invalid_config():
    with pytest.raises(ParameterError):
        ScgConfig(sigma0=0)
