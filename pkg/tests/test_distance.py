"""Distance kernels and metric ranges."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lefcert import Metric, cosine_distance, l2_distance, metric_info, normalize
from lefcert.errors import DimMismatchError, ZeroVectorError


def test_cosine_identical_is_zero():
    v = normalize([1.0, 2.0, 3.0])
    assert cosine_distance(v, v) == pytest.approx(0.0, abs=1e-12)


def test_cosine_opposite_is_two():
    a = normalize([1.0, 0.0])
    b = normalize([-1.0, 0.0])
    assert cosine_distance(a, b) == pytest.approx(2.0)


def test_cosine_orthogonal_is_one():
    assert cosine_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)


def test_l2_matches_numpy():
    a = np.array([0.3, -0.4, 0.5])
    b = np.array([0.1, 0.2, -0.9])
    assert l2_distance(a, b) == pytest.approx(float(np.linalg.norm(a - b)))


def test_unit_vectors_relate_l2_squared_to_cosine():
    # ||a-b||^2 = 2 - 2 a.b = 2 * cosine distance on the unit sphere
    rng = np.random.Generator(np.random.PCG64(3))
    for _ in range(50):
        a = normalize(rng.normal(size=8))
        b = normalize(rng.normal(size=8))
        assert l2_distance(a, b) ** 2 == pytest.approx(2.0 * cosine_distance(a, b), abs=1e-9)


def test_dim_mismatch_rejected():
    with pytest.raises(DimMismatchError):
        cosine_distance([1.0, 0.0], [1.0, 0.0, 0.0])


def test_zero_vector_rejected():
    with pytest.raises(ZeroVectorError):
        cosine_distance([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ZeroVectorError):
        normalize([0.0, 0.0, 0.0])


def test_metric_ranges():
    assert metric_info(Metric.COSINE).range_max == 2.0
    assert metric_info(Metric.L2, max_norm=1.0).range_max == 2.0
    assert metric_info(Metric.L2, max_norm=0.6).range_max == 2.0
    assert math.isinf(metric_info(Metric.L2, max_norm=1.5).range_max)
    assert math.isinf(metric_info(Metric.L2).range_max)


finite_vec = arrays(
    np.float64,
    st.integers(2, 6),
    elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False),
).filter(lambda v: np.linalg.norm(v) > 1e-6)


@given(finite_vec, st.data())
def test_cosine_stays_in_range(a, data):
    b = data.draw(
        arrays(
            np.float64,
            a.shape[0],
            elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False),
        ).filter(lambda v: np.linalg.norm(v) > 1e-6)
    )
    d = cosine_distance(a, b)
    assert 0.0 <= d <= 2.0


@given(finite_vec)
def test_normalize_yields_unit_norm(v):
    assert np.linalg.norm(normalize(v).values) == pytest.approx(1.0, abs=1e-9)
