from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from scatterct.abel import abel_matrix
from scatterct.forward import SPIN_THEN_EXP, PhysicsConfig, simulate_transmission
from scatterct.geometry import spin
from scatterct.harness import ExperimentConfig
from scatterct.harness.experiment import rmse, simulate_profile
from scatterct.phantom import PhantomSpec, generate
from scatterct.recon import (
    CENTER_LINEOUT,
    Preconditioner,
    ReconConfig,
    descatter,
    onestep_objective,
    onestep_reconstruct,
    sqs_preconditioner,
    tv_value_and_subgrad,
    twostep_objective,
    twostep_reconstruct,
    twostep_target,
)
from scatterct.scatter import ScatterKernel, convolve, make_paper_kernel, zero_kernel

N = 33


def central_difference(fun, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e)[0] - fun(x - e)[0]) / (2 * h)
    return g


@pytest.fixture(scope="module")
def small_problem():
    rho = generate(PhantomSpec(n=N, seed=4))
    kernel = make_paper_kernel()
    data = simulate_transmission(rho, kernel, PhysicsConfig(seed=9))
    return SimpleNamespace(rho=rho, kernel=kernel, t=data.transmission, op=abel_matrix(N))


def random_point(op, rng):
    # densities in the phantom range, mapped back through the preconditioner
    p = sqs_preconditioner(op).diag
    return rng.uniform(0, 20, size=op.n) / p


# total variation


def test_tv_constant():
    value, grad = tv_value_and_subgrad(np.full(6, 4.0))
    assert value == 0.0
    assert not grad.any()


def test_tv_hat_example():
    value, grad = tv_value_and_subgrad(np.array([0.0, 1.0, 0.0]))
    assert value == 2.0
    np.testing.assert_array_equal(grad, [-1.0, 2.0, -1.0])


def test_tv_smoothed_matches_finite_differences(rng):
    for _ in range(10):
        x = rng.normal(size=20)
        fun = lambda v: tv_value_and_subgrad(v, 1e-6)  # noqa: E731
        g = fun(x)[1]
        assert np.linalg.norm(g - central_difference(fun, x)) <= 1e-5 * np.linalg.norm(g)


def test_tv_rejects_short():
    with pytest.raises(ValueError):
        tv_value_and_subgrad(np.array([1.0]))


# preconditioner


def test_sqs_identity_double():
    P = sqs_preconditioner(SimpleNamespace(matrix=np.eye(5)))
    np.testing.assert_array_equal(P.diag, np.ones(5))


@pytest.mark.parametrize("n", [4, 33, 129])
def test_sqs_normalization(n):
    P = sqs_preconditioner(abel_matrix(n))
    assert np.all(np.isfinite(P.diag)) and np.all(P.diag > 0)
    assert P.diag.min() == 1.0
    v = abel_matrix(n).normal_row_sums
    np.testing.assert_allclose(1.0 / P.diag, v / v.max(), rtol=1e-15)


def test_sqs_rejects_degenerate():
    with pytest.raises(RuntimeError):
        sqs_preconditioner(SimpleNamespace(matrix=np.diag([1.0, 0.0])))


def test_preconditioner_validation():
    with pytest.raises(ValueError):
        Preconditioner(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        Preconditioner(np.array([1.0, np.inf]))


# descattering


def test_descatter_zero_kernel_is_identity(rng):
    t = rng.random((9, 9))
    d, trace = descatter(t, zero_kernel(), ReconConfig(max_iters=10))
    np.testing.assert_array_equal(d, t)
    assert len(trace) == 1


def test_descatter_consistent_data(rng):
    taps = 0.02 * rng.random((3, 3))
    kernel = ScatterKernel(taps, "small")
    d_true = 0.5 + rng.random((65, 65))
    t = d_true + convolve(d_true, kernel)
    d, trace = descatter(t, kernel, ReconConfig(max_iters=10))
    assert trace.iterations <= 10
    assert np.linalg.norm(d - d_true) <= 1e-3 * np.linalg.norm(d_true)


def test_descatter_descent(small_problem):
    _, trace = descatter(small_problem.t, small_problem.kernel, ReconConfig(max_iters=10))
    assert np.all(np.diff(trace.objectives) <= 0)


# gradients


@pytest.mark.parametrize("order", ["exp_then_spin", SPIN_THEN_EXP])
def test_onestep_gradient(small_problem, rng, order):
    pb = small_problem
    cfg = ReconConfig(alpha=1e-3, tv_epsilon=1e-6, order=order)
    P = sqs_preconditioner(pb.op)
    fun = lambda x: onestep_objective(x, pb.t, pb.kernel, pb.op, P, cfg)  # noqa: E731
    for _ in range(10):
        x = random_point(pb.op, rng)
        g = fun(x)[1]
        assert np.linalg.norm(g - central_difference(fun, x)) <= 1e-5 * np.linalg.norm(g)


@pytest.mark.parametrize("mode", ["radial_average", CENTER_LINEOUT])
def test_twostep_gradient(small_problem, rng, mode):
    pb = small_problem
    cfg = ReconConfig(alpha=7e-4, tv_epsilon=1e-6, unspin_mode=mode)
    d_star, _ = descatter(pb.t, pb.kernel, ReconConfig(max_iters=10))
    target = twostep_target(d_star, cfg)
    P = sqs_preconditioner(pb.op)
    fun = lambda x: twostep_objective(x, target, pb.op, P, cfg)  # noqa: E731
    for _ in range(10):
        x = random_point(pb.op, rng)
        g = fun(x)[1]
        assert np.linalg.norm(g - central_difference(fun, x)) <= 1e-5 * np.linalg.norm(g)


def test_onestep_stationary_at_zero_density():
    op = abel_matrix(N)
    kernel = make_paper_kernel()
    d = spin(np.ones(N))
    t = d + convolve(d, kernel)
    value, grad = onestep_objective(np.zeros(N), t, kernel, op, sqs_preconditioner(op), ReconConfig())
    assert value == 0.0
    assert not grad.any()


def test_onestep_value_matches_forward_model(small_problem, rng):
    pb = small_problem
    cfg = ReconConfig(alpha=0.0)
    P = sqs_preconditioner(pb.op)
    x = random_point(pb.op, rng)
    model = simulate_transmission(P.diag * x, pb.kernel, PhysicsConfig(noise_sigma=0.0)).transmission
    expected = np.sum((pb.t - model) ** 2)
    value, _ = onestep_objective(x, pb.t, pb.kernel, pb.op, P, cfg)
    assert value == pytest.approx(expected, rel=1e-12)


def test_onestep_overflow_gives_inf(small_problem):
    pb = small_problem
    P = Preconditioner.identity(N)
    value, grad = onestep_objective(np.full(N, -1e6), pb.t, pb.kernel, pb.op, P, ReconConfig())
    assert value == np.inf
    assert not np.all(np.isfinite(grad))


def test_preconditioner_transparency(small_problem, rng):
    pb = small_problem
    P = sqs_preconditioner(pb.op)
    ident = Preconditioner.identity(N)
    cfg = ReconConfig(alpha=1e-3)
    target = twostep_target(pb.t, cfg)
    for _ in range(5):
        x = random_point(pb.op, rng)
        v1, g1 = onestep_objective(x, pb.t, pb.kernel, pb.op, P, cfg)
        v0, g0 = onestep_objective(P.diag * x, pb.t, pb.kernel, pb.op, ident, cfg)
        assert v1 == v0
        np.testing.assert_array_equal(g1, P.diag * g0)
        w1, _ = twostep_objective(x, target, pb.op, P, cfg)
        w0, _ = twostep_objective(P.diag * x, target, pb.op, ident, cfg)
        assert w1 == w0


# full reconstructions


@pytest.mark.parametrize("method", ["onestep", "twostep"])
def test_descent_and_trace_contract(small_problem, method):
    pb = small_problem
    cfg = ReconConfig(alpha=1e-3, learning_rate=3e-2, max_iters=20)
    if method == "onestep":
        rho, trace = onestep_reconstruct(pb.t, pb.kernel, pb.op, cfg)
    else:
        rho, trace = twostep_reconstruct(pb.t, pb.kernel, pb.op, replace(cfg, learning_rate=1e-2),
                                         ReconConfig(max_iters=10))
        assert trace.descatter is not None
    assert rho.shape == (N,)
    assert len(trace) == trace.optimizer.iterations + 1
    assert len(trace.total_objective) == len(trace.data_fidelity) == len(trace.step_length) == len(trace)
    assert trace.iteration == list(range(len(trace)))
    assert np.all(np.diff(trace.total_objective) <= 0)
    assert trace.data_fidelity[0] == trace.total_objective[0]  # TV of the zero start is 0
    assert len(trace.rows()) == len(trace)


def test_huge_tv_weight_gives_constant_profile(small_problem):
    pb = small_problem
    rho, _ = twostep_reconstruct(pb.t, pb.kernel, pb.op, ReconConfig(alpha=1e6, max_iters=20),
                                 ReconConfig(max_iters=10))
    assert rho.max() - rho.min() <= 1e-3 * pb.rho.max()


def test_center_lineout_mode_runs(small_problem):
    pb = small_problem
    cfg = ReconConfig(alpha=7e-4, learning_rate=1e-2, unspin_mode=CENTER_LINEOUT)
    rho, trace = twostep_reconstruct(pb.t, pb.kernel, pb.op, cfg, ReconConfig(max_iters=10))
    assert np.all(np.isfinite(rho))
    assert np.all(np.diff(trace.total_objective) <= 0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(alpha=-1.0), dict(learning_rate=0.0), dict(max_iters=0), dict(unspin_mode="median"),
     dict(tv_epsilon=-1.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ReconConfig(**kwargs)


@pytest.mark.slow
def test_unpreconditioned_onestep_is_not_better():
    # paired comparison on the default seeded suite and settings
    cfg = ExperimentConfig()
    op = abel_matrix(cfg.phantom.n)
    kernel = cfg.make_kernel()
    worse = 0
    for i in range(cfg.n_profiles):
        data = simulate_profile(cfg, i)
        pre, _ = onestep_reconstruct(data.transmission, kernel, op, cfg.onestep)
        plain, _ = onestep_reconstruct(data.transmission, kernel, op,
                                       replace(cfg.onestep, precondition=False))
        worse += rmse(plain, data.ground_truth) >= rmse(pre, data.ground_truth)
    assert worse >= 8, f"preconditioning at least as good on only {worse}/10 phantoms"
