import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from sketches.errors import DimensionMismatchError, InvalidArgumentError, ParamsMismatchError
from sketches.sketch_core import (
    COLUMNS_PER_STREAM,
    Norm,
    Signal,
    SketchParams,
    add_noise,
    apply,
    build_matrix,
    combine_binary_rows,
    dense,
    derive_params,
    merge,
    required_rows,
    split_binary_rows,
    update,
)
from tests.conftest import hand_matrix, integer_signal


@pytest.fixture(scope="module")
def matrix():
    return build_matrix(derive_params(1_000, 10, 0.5, seed=11))


def test_derive_params_l2_uses_error_term():
    params = derive_params(1_000, 10, 0.5, d=7, seed=1)
    assert params.w == 1_960  # ceil(49 * 10 / 0.25)


def test_derive_params_l1_uses_termination_term():
    params = derive_params(1_000, 10, 0.5, norm=Norm.L1, d=7, seed=1)
    assert params.w == 840  # max(ceil(7 * 10 / 0.5), 2 * 7 * 6 * 10)


def test_derive_params_termination_threshold_at_eps_one():
    assert derive_params(100_000, 1_000, 1.0, d=7).w == 84_000


def test_required_rows_grows_with_d():
    assert required_rows(10, 0.5, 9) == 9 * 9 * 10 * 4


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=10, k=0, eps=0.5),
        dict(n=5, k=10, eps=0.5),
        dict(n=100, k=10, eps=0.0),
        dict(n=100, k=10, eps=1.5),
        dict(n=100, k=10, eps=0.5, d=6),
        dict(n=100, k=10, eps=0.5, norm="L3"),
        dict(n=100, k=10, eps=0.5, seed=-1),
    ],
)
def test_derive_params_rejects_invalid(kwargs):
    with pytest.raises(InvalidArgumentError):
        derive_params(**kwargs)


def test_params_validator_rejects_small_w():
    with pytest.raises(ValidationError):
        SketchParams(n=100, k=10, eps=0.5, d=7, seed=0, w=10)


def test_build_matrix_is_deterministic(matrix):
    again = build_matrix(matrix.params)
    assert again == matrix
    other = build_matrix(matrix.params.model_copy(update={"seed": 12}))
    assert not np.array_equal(other.rows, matrix.rows)


def test_columns_have_distinct_rows_and_unit_signs(matrix):
    rows = np.sort(matrix.rows, axis=1)
    assert rows.shape == (1_000, 7)
    assert (np.diff(rows, axis=1) > 0).all()
    assert rows.min() >= 0 and rows.max() < matrix.params.w
    assert set(np.unique(matrix.signs).tolist()) <= {-1, 1}


def test_matrix_is_read_only(matrix):
    with pytest.raises(ValueError):
        matrix.rows[0, 0] = 1


def test_column_prefix_is_stable_across_n():
    small = build_matrix(derive_params(COLUMNS_PER_STREAM, 10, 0.5, seed=3))
    large = build_matrix(derive_params(COLUMNS_PER_STREAM + 500, 10, 0.5, seed=3))
    np.testing.assert_array_equal(large.rows[:COLUMNS_PER_STREAM], small.rows)
    np.testing.assert_array_equal(large.signs[:COLUMNS_PER_STREAM], small.signs)


def test_column_lists_row_sign_pairs(matrix):
    column = matrix.column(5)
    assert [q for q, _ in column] == matrix.rows[5].tolist()
    assert [s for _, s in column] == matrix.signs[5].tolist()


def test_apply_matches_dense_product(matrix, rng):
    x = rng.normal(size=matrix.n)
    np.testing.assert_allclose(apply(matrix, x).values, dense(matrix) @ x, atol=1e-10)


def test_apply_accepts_sparse_signal(matrix, rng):
    x, _ = integer_signal(matrix.n, 10, rng)
    np.testing.assert_array_equal(apply(matrix, Signal.from_dense(x)).values, apply(matrix, x).values)


def test_apply_rejects_wrong_dimension(matrix):
    with pytest.raises(DimensionMismatchError):
        apply(matrix, np.zeros(matrix.n + 1))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_apply_is_linear_on_integer_signals(seed):
    matrix = build_matrix(derive_params(300, 10, 0.5, seed=5))
    rng = np.random.default_rng(seed)
    x = rng.integers(-50, 50, size=300).astype(float)
    y = rng.integers(-50, 50, size=300).astype(float)
    np.testing.assert_array_equal(
        apply(matrix, x + y).values, apply(matrix, x).values + apply(matrix, y).values
    )


def test_update_touches_exactly_d_cells(matrix, rng):
    x, _ = integer_signal(matrix.n, 10, rng)
    sketch = apply(matrix, x)
    before = sketch.values.copy()
    returned = update(sketch, matrix, 17, 3.0)
    assert returned is sketch
    assert np.count_nonzero(sketch.values - before) == matrix.d
    x[17] += 3.0
    np.testing.assert_array_equal(sketch.values, apply(matrix, x).values)


def test_update_then_inverse_restores_integer_sketch(matrix, rng):
    x, _ = integer_signal(matrix.n, 10, rng)
    sketch = apply(matrix, x)
    original = sketch.values.copy()
    update(update(sketch, matrix, 3, 7.0), matrix, 3, -7.0)
    np.testing.assert_array_equal(sketch.values, original)


def test_update_rejects_bad_index_and_foreign_sketch(matrix):
    sketch = apply(matrix, np.zeros(matrix.n))
    with pytest.raises(InvalidArgumentError):
        update(sketch, matrix, matrix.n, 1.0)
    other = build_matrix(derive_params(1_000, 10, 0.5, seed=99))
    with pytest.raises(ParamsMismatchError):
        update(apply(other, np.zeros(1_000)), matrix, 0, 1.0)


def test_add_noise_checks_length(matrix):
    sketch = apply(matrix, np.zeros(matrix.n))
    noisy = add_noise(sketch, np.ones(matrix.num_rows))
    assert noisy.values.sum() == matrix.num_rows
    with pytest.raises(DimensionMismatchError):
        add_noise(sketch, np.ones(3))


def test_merge_is_sketch_of_sum(matrix, rng):
    x, _ = integer_signal(matrix.n, 10, rng)
    y, _ = integer_signal(matrix.n, 10, rng)
    merged = merge([apply(matrix, x), apply(matrix, y)])
    np.testing.assert_array_equal(merged.values, apply(matrix, x + y).values)
    with pytest.raises(InvalidArgumentError):
        merge([])


def test_binary_split_and_combine(matrix, rng):
    x, _ = integer_signal(matrix.n, 10, rng)
    binary = split_binary_rows(matrix)
    assert binary.binary and binary.num_rows == 2 * matrix.params.w
    assert set(np.unique(dense(binary)).tolist()) <= {0.0, 1.0}
    combined = combine_binary_rows(apply(binary, x))
    np.testing.assert_array_equal(combined.values, apply(matrix, x).values)
    with pytest.raises(InvalidArgumentError):
        split_binary_rows(binary)


def test_signal_from_pairs_validates():
    signal = Signal.from_pairs(5, [(3, 2.0), (1, -1.0)])
    assert signal.indices.tolist() == [1, 3]
    np.testing.assert_array_equal(signal.to_dense(), [0, -1, 0, 2, 0])
    assert signal.support() == [1, 3]
    with pytest.raises(InvalidArgumentError):
        Signal.from_pairs(5, [(1, 1.0), (1, 2.0)])
    with pytest.raises(InvalidArgumentError):
        Signal.from_pairs(5, [(5, 1.0)])


def test_row_occupancy_is_binomial():
    n, w, d = 100_000, 100, 7
    matrix = build_matrix(SketchParams(n=n, k=1, eps=1.0, d=d, seed=8, w=w))
    counts = np.bincount(matrix.rows.ravel(), minlength=w)
    p = d / w
    mean, sigma = n * p, np.sqrt(n * p * (1 - p))
    assert counts.sum() == n * d
    assert np.abs(counts - mean).max() <= 4.5 * sigma
    assert np.mean(np.abs(counts - mean) <= 3 * sigma) >= 0.95


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2 ** 32 - 1),
    a=st.integers(-10 ** 6, 10 ** 6).map(lambda v: v / 1_000),
    b=st.integers(-10 ** 6, 10 ** 6).map(lambda v: v / 1_000),
)
def test_apply_is_linear_on_real_scalars(seed, a, b):
    matrix = build_matrix(derive_params(300, 10, 0.5, seed=5))
    rng = np.random.default_rng(seed)
    x = rng.normal(size=300)
    y = rng.normal(size=300)
    ax, ay = apply(matrix, x).values, apply(matrix, y).values
    gap = np.linalg.norm(apply(matrix, a * x + b * y).values - (a * ax + b * ay))
    assert gap <= 1e-10 * (abs(a) * np.linalg.norm(ax) + abs(b) * np.linalg.norm(ay))


def test_point_updates_match_single_apply(matrix, rng):
    x = rng.normal(size=matrix.n)
    sketch = apply(matrix, np.zeros(matrix.n))
    for i, v in enumerate(x):
        update(sketch, matrix, i, float(v))
    np.testing.assert_allclose(sketch.values, apply(matrix, x).values, rtol=0, atol=1e-12)


def test_binary_split_sends_signs_to_row_parity(matrix):
    binary = split_binary_rows(matrix)
    np.testing.assert_array_equal(binary.rows // 2, matrix.rows)
    np.testing.assert_array_equal(binary.rows % 2 == 1, matrix.signs < 0)

    positive = hand_matrix([[0, 1, 2, 3, 4, 5, 6], [3, 4, 5, 6, 7, 8, 9]], w=20)
    split = split_binary_rows(positive)
    assert (split.rows % 2 == 0).all()
    assert split.rows[0].tolist() == [0, 2, 4, 6, 8, 10, 12]
