import math

import numpy as np
import pytest

from ledgaze.core import ConfigError, DegenerateInputError, DimensionError
from ledgaze.kernels import (
    MeasureSpec,
    canberra,
    cosine,
    manhattan,
    minkowski,
    pairwise,
    rbf,
)

from oracles import minkowski_scalar


def test_minkowski_euclidean_345():
    assert minkowski((0, 0), (3, 4), 2, (1, 1)) == pytest.approx(5.0)


def test_minkowski_identity():
    assert minkowski((7, 7, 7), (7, 7, 7), 2, (1, 1, 1)) == 0.0


def test_minkowski_m1_is_manhattan_special_case():
    assert minkowski((1, 1), (4, 5), 1, (1, 1)) == pytest.approx(7.0)


def test_minkowski_against_scalar_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        a, b = rng.normal(size=n), rng.normal(size=n)
        w = rng.uniform(0, 2, n)
        m = float(rng.uniform(1, 4))
        assert minkowski(a, b, m, w) == pytest.approx(minkowski_scalar(a, b, m, w), rel=1e-12)


def test_minkowski_errors():
    with pytest.raises(DimensionError):
        minkowski((1, 2), (1, 2, 3))
    with pytest.raises(DimensionError):
        minkowski((1, 2), (1, 2), w=(1, 1, 1))
    with pytest.raises(ConfigError):
        minkowski((1, 2), (3, 4), m=0.5)


def test_rbf_self_similarity_is_one():
    a = np.array([0.3, 0.9, 0.1])
    assert rbf(a, a, sigma=0.7) == 1.0


def test_rbf_hand_evaluated_value():
    # ||a-b|| = 5 and 2 sigma^2 = 5 gives exp(-1)
    val = rbf((0, 0), (3, 4), sigma=math.sqrt(2.5))
    assert val == pytest.approx(math.exp(-1), rel=1e-12)
    assert val == pytest.approx(0.367879441, rel=1e-8)


def test_rbf_large_sigma_limit():
    assert rbf((0, 0), (3, 4), sigma=1e9) == pytest.approx(1.0, abs=1e-12)


def test_rbf_squared_variant():
    a, b = np.zeros(2), np.array([3.0, 4.0])
    assert rbf(a, b, sigma=1.0, squared=True) == pytest.approx(math.exp(-25 / 2))
    assert rbf(a, b, sigma=1.0, squared=False) == pytest.approx(math.exp(-5 / 2))


def test_rbf_in_unit_interval():
    rng = np.random.default_rng(12)
    for _ in range(100):
        a, b = rng.normal(size=5), rng.normal(size=5)
        v = rbf(a, b, sigma=float(rng.uniform(0.1, 3)))
        assert 0.0 < v <= 1.0


def test_cosine_colinear_is_zero():
    a = np.array([1.0, 2.0, 3.0])
    assert cosine(a, 2 * a) == pytest.approx(0.0, abs=1e-12)


def test_cosine_zero_vector_rejected():
    with pytest.raises(DegenerateInputError):
        cosine((0, 0), (1, 2))


def test_manhattan_example():
    assert manhattan((1, 2), (4, 6)) == pytest.approx(7.0)


def test_canberra_zero_term_convention():
    # the 0/0 coordinate contributes nothing; |1-3|/(1+3) remains
    assert canberra((0, 1), (0, 3)) == pytest.approx(0.5)


def test_canberra_all_zero_vectors():
    assert canberra((0, 0), (0, 0)) == 0.0


def test_minkowski_m1_equals_manhattan_property():
    rng = np.random.default_rng(13)
    for _ in range(500):
        n = int(rng.integers(1, 12))
        a, b = rng.normal(size=n) * 10, rng.normal(size=n) * 10
        assert minkowski(a, b, 1.0) == manhattan(a, b)


def test_all_measures_symmetric():
    rng = np.random.default_rng(14)
    for _ in range(200):
        a, b = rng.uniform(0.01, 1, 6), rng.uniform(0.01, 1, 6)
        assert minkowski(a, b, 2) == minkowski(b, a, 2)
        assert manhattan(a, b) == manhattan(b, a)
        assert canberra(a, b) == canberra(b, a)
        assert cosine(a, b) == pytest.approx(cosine(b, a), abs=1e-15)
        assert rbf(a, b, 0.5) == rbf(b, a, 0.5)


def test_self_distance_zero_and_self_similarity_one():
    rng = np.random.default_rng(15)
    for _ in range(100):
        a = rng.uniform(0.01, 1, 8)
        assert minkowski(a, a) == 0.0
        assert manhattan(a, a) == 0.0
        assert canberra(a, a) == 0.0
        assert cosine(a, a) == pytest.approx(0.0, abs=1e-12)
        assert rbf(a, a, 0.3) == 1.0


def test_minkowski_triangle_inequality_m2():
    rng = np.random.default_rng(16)
    for _ in range(300):
        a, b, c = (rng.normal(size=7) for _ in range(3))
        assert minkowski(a, c, 2) <= minkowski(a, b, 2) + minkowski(b, c, 2) + 1e-12


def test_measure_spec_validation():
    with pytest.raises(ConfigError):
        MeasureSpec(kind="chebyshev")
    with pytest.raises(ConfigError):
        MeasureSpec(m=0.2)
    with pytest.raises(ConfigError):
        MeasureSpec(kind="rbf", sigma=0.0)
    with pytest.raises(ConfigError):
        MeasureSpec(weights=(1.0, -0.5))


def test_measure_spec_roundtrip():
    for spec in (MeasureSpec(), MeasureSpec(kind="rbf", sigma=0.4, rbf_squared=True),
                 MeasureSpec(kind="minkowski", m=3.0, weights=(1.0, 0.5)),
                 MeasureSpec(kind="canberra")):
        assert MeasureSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("kind,kw", [
    ("minkowski", {"m": 2.0}),
    ("minkowski", {"m": 3.0, "weights": (0.5, 1.0, 2.0, 0.1)}),
    ("rbf", {"sigma": 0.4}),
    ("rbf", {"sigma": 0.4, "rbf_squared": True}),
    ("cosine", {}),
    ("manhattan", {}),
    ("canberra", {}),
])
def test_pairwise_matches_scalar(kind, kw):
    rng = np.random.default_rng(17)
    A = rng.uniform(0.05, 1, (9, 4))
    B = rng.uniform(0.05, 1, (5, 4))
    spec = MeasureSpec(kind=kind, **kw)
    K = pairwise(spec, A, B)
    assert K.shape == (9, 5)
    for i in range(9):
        for j in range(5):
            assert K[i, j] == pytest.approx(spec.distance(A[i], B[j]), rel=1e-12, abs=1e-12)


def test_pairwise_dimension_error():
    with pytest.raises(DimensionError):
        pairwise(MeasureSpec(), np.ones((2, 3)), np.ones((2, 4)))
