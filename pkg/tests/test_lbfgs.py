import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import rosen, rosen_der

from scatterct.lbfgs import LbfgsConfig, Termination, minimize, strong_wolfe


def quadratic(c):
    def fun(x):
        r = x - c
        return float(r @ r), 2 * r

    return fun


def test_quadratic_example(rng):
    c = rng.normal(size=10)
    x, trace = minimize(quadratic(c), np.zeros(10), LbfgsConfig(max_iters=15))
    assert np.linalg.norm(x - c) <= 1e-8
    assert trace.iterations <= 15


def test_rosenbrock_example():
    x, trace = minimize(
        lambda x: (rosen(x), rosen_der(x)), np.array([-1.2, 1.0]), LbfgsConfig(max_iters=100)
    )
    assert rosen(x) <= 1e-8
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-4)


def test_zero_gradient_start():
    x0 = np.array([1.0, -2.0])
    x, trace = minimize(quadratic(x0), x0)
    np.testing.assert_array_equal(x, x0)
    assert len(trace) == 1
    assert trace.reason == Termination.GRAD_TOL


def test_nonfinite_start_rejected():
    with pytest.raises(ValueError):
        minimize(lambda x: (np.inf, x), np.zeros(2))


def test_determinism():
    cfg = LbfgsConfig(max_iters=30)
    fun = lambda x: (rosen(x), rosen_der(x))  # noqa: E731
    seen = []
    runs = []
    for _ in range(2):
        seen.clear()
        x, trace = minimize(fun, np.array([-1.2, 1.0]), cfg, callback=lambda k, x: seen.append(x.copy()))
        runs.append((x, trace, [s.copy() for s in seen]))
    np.testing.assert_array_equal(runs[0][0], runs[1][0])
    assert runs[0][1].records == runs[1][1].records
    for a, b in zip(runs[0][2], runs[1][2]):
        np.testing.assert_array_equal(a, b)


def test_callback_and_trace_lengths(rng):
    calls = []
    cfg = LbfgsConfig(max_iters=7, grad_tol=0.0)
    x, trace = minimize(lambda x: (rosen(x), rosen_der(x)), np.array([-1.2, 1.0]), cfg,
                        callback=lambda k, x: calls.append(k))
    assert calls == list(range(len(trace)))
    assert trace.iterations == 7
    assert trace.reason == Termination.MAX_ITERS
    assert all(r.fevals >= 1 for r in trace.records)


def test_preconditioning_diagonal_quadratic():
    h = np.logspace(0, 3, 20)  # condition number 1e3
    fun = lambda x: (0.5 * float(h @ (x * x)), h * x)  # noqa: E731
    x0 = np.ones(20)
    cfg = LbfgsConfig(max_iters=500, grad_tol=1e-8)
    _, plain = minimize(fun, x0, cfg)
    p = 1.0 / np.sqrt(h)

    def pre(z):
        f, g = fun(p * z)
        return f, p * g

    z, scaled = minimize(pre, x0 / p, cfg)
    assert plain.reason == scaled.reason == Termination.GRAD_TOL
    assert scaled.iterations < plain.iterations
    np.testing.assert_allclose(p * z, 0.0, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1), st.floats(1e-3, 10.0))
def test_monotone_descent_on_convex_quadratics(dim, seed, step):
    r = np.random.default_rng(seed)
    m = r.normal(size=(dim, dim))
    h = m @ m.T + 1e-2 * np.eye(dim)
    b = r.normal(size=dim)
    fun = lambda x: (0.5 * float(x @ h @ x) - float(b @ x), h @ x - b)  # noqa: E731
    _, trace = minimize(fun, np.zeros(dim), LbfgsConfig(max_iters=30, initial_step=step))
    obj = trace.objectives
    assert np.all(np.diff(obj) <= 0)


def test_strong_wolfe_conditions():
    fun = lambda x: (rosen(x), rosen_der(x))  # noqa: E731
    x = np.array([-1.2, 1.0])
    f, g = fun(x)
    c1, c2 = 1e-4, 0.9
    ls = strong_wolfe(fun, x, f, g, -g, 1e-3, c1, c2, 25)
    assert ls.wolfe and ls.decreased
    gd = g @ -g
    assert ls.f <= f + c1 * ls.step * gd
    assert abs(ls.g @ -g) <= c2 * abs(gd)


def test_overflow_is_treated_as_overshoot():
    def fun(x):
        with np.errstate(over="ignore"):
            v = float(np.exp(x[0] ** 2)) if abs(x[0]) < 30 else np.inf
        return v, np.array([2 * x[0] * v]) if np.isfinite(v) else np.array([np.nan])

    x, trace = minimize(fun, np.array([1.0]), LbfgsConfig(initial_step=1e3, max_iters=20))
    assert abs(x[0]) < 1e-4
    assert np.all(np.isfinite(trace.objectives))


@pytest.mark.parametrize(
    "kwargs",
    [dict(wolfe_c1=0.9, wolfe_c2=0.1), dict(memory=0), dict(initial_step=0.0), dict(grad_tol=-1.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        LbfgsConfig(**kwargs)
