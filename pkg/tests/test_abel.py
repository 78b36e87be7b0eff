import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scatterct.abel import abel_adjoint, abel_forward, abel_matrix


def ball_transform(radius, offsets):
    """Closed-form projection of a unit-density disk."""
    return 2.0 * np.sqrt(np.clip(radius**2 - offsets**2, 0.0, None))


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_zero_profile():
    assert not abel_forward(np.zeros(10)).any()


def test_rejects_short_profiles():
    with pytest.raises(ValueError):
        abel_forward(np.array([1.0]))
    with pytest.raises(ValueError):
        abel_matrix(1)


def test_uniform_ball_oracle():
    n, radius = 129, 100
    profile = (np.arange(n) <= radius).astype(float)
    a = abel_forward(profile)
    assert rel_l2(a, ball_transform(radius, np.arange(n))) <= 0.02


def test_thin_shell_oracle():
    # pixel k covers radii [k - 1/2, k + 1/2]; the shell spans 79.5 to 90.5
    n = 129
    profile = np.zeros(n)
    profile[80:91] = 1.0
    i = np.arange(n)
    exact = ball_transform(90.5, i) - ball_transform(79.5, i)
    assert rel_l2(abel_forward(profile), exact) <= 0.03


def test_gaussian_oracle():
    # a narrow Gaussian projects to a Gaussian of the same width
    n, s = 129, 12.0
    r = np.arange(n, dtype=float)
    exact = np.sqrt(2 * np.pi) * s * np.exp(-(r**2) / (2 * s * s))
    assert rel_l2(abel_forward(np.exp(-(r**2) / (2 * s * s))), exact) <= 0.02


def test_linearity(rng):
    x, y = rng.normal(size=(2, 64))
    lhs = abel_forward(2 * x + 3 * y)
    rhs = 2 * abel_forward(x) + 3 * abel_forward(y)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_batch_rows_match_single(rng):
    x = rng.normal(size=(3, 17))
    np.testing.assert_array_equal(abel_forward(x)[1], abel_forward(x[1]))


def test_matrix_n2_columns():
    op = abel_matrix(2)
    np.testing.assert_array_equal(op.matrix @ [1.0, 0.0], abel_forward(np.array([1.0, 0.0])))


def test_matrix_matches_forward_on_ball():
    op = abel_matrix(129)
    ball = (np.arange(129) <= 100).astype(float)
    assert np.abs(op.matrix @ ball - abel_forward(ball)).max() <= 1e-12


@pytest.mark.parametrize("n", [2, 4, 33, 129])
def test_matrix_structure(n):
    m = abel_matrix(n).matrix
    assert np.all(np.isfinite(m))
    assert np.all(m >= 0)
    assert np.abs(np.tril(m, -1)).max(initial=0.0) <= 1e-14


def test_matrix_is_read_only():
    with pytest.raises(ValueError):
        abel_matrix(8).matrix[0, 0] = 1.0


def test_adjoint_examples(rng):
    op = abel_matrix(33)
    assert not abel_adjoint(np.zeros(33), op).any()
    np.testing.assert_allclose(abel_adjoint(np.ones(33), op), op.matrix.sum(axis=0), rtol=1e-15)
    with pytest.raises(ValueError):
        abel_adjoint(np.zeros(32), op)


@pytest.mark.parametrize("n", [4, 33, 129])
def test_adjoint_pairing(n, rng):
    op = abel_matrix(n)
    for _ in range(100):
        x, y = rng.normal(size=(2, n))
        lhs = abel_forward(x) @ y
        rhs = x @ abel_adjoint(y, op)
        assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(x) * np.linalg.norm(y) * np.linalg.norm(op.matrix)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(2, 80), elements=st.floats(0.0, 50.0)))
def test_nonnegative_input_gives_nonnegative_output(x):
    assert abel_forward(x).min() >= -1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 17, 129, 257])
def test_normal_row_sums_positive(n):
    assert np.all(abel_matrix(n).normal_row_sums > 0)
