import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sqfastica.exceptions import DimensionError
from sqfastica.mdi import (
    match_rows,
    mdi_bruteforce,
    minimum_distance_index,
    scaled_mdi_statistic,
)


def _signed_scaled_perm(p, rng):
    P = np.eye(p)[rng.permutation(p)]
    d = rng.uniform(0.2, 5, p) * rng.choice([-1, 1], p)
    return np.diag(d) @ P


@pytest.mark.parametrize("p", [2, 3, 4, 5])
def test_oracle_agreement(p):
    rng = np.random.default_rng(p)
    for _ in range(100):
        G, Om = rng.standard_normal((2, p, p))
        assert abs(minimum_distance_index(G, Om) - mdi_bruteforce(G, Om)) < 1e-12


def test_perfect_separation():
    rng = np.random.default_rng(0)
    for p in (2, 3, 6):
        Om = rng.standard_normal((p, p))
        assert minimum_distance_index(np.linalg.inv(Om), Om) < 1e-12
        C = _signed_scaled_perm(p, rng)
        assert minimum_distance_index(C @ np.linalg.inv(Om), Om) < 1e-12


def test_rotation_pi_over_8():
    t = math.pi / 8
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    d2 = minimum_distance_index(R, np.eye(2)) ** 2
    assert d2 == pytest.approx(2 * math.sin(t) ** 2, abs=1e-12)
    assert d2 == pytest.approx(0.29289, abs=1e-5)
    assert mdi_bruteforce(R, np.eye(2)) ** 2 == pytest.approx(d2, abs=1e-12)


def test_zero_row():
    G = np.array([[1.0, 0.2, 0.1], [0.0, 0.0, 0.0], [0.3, 0.1, 2.0]])
    a, b = minimum_distance_index(G, np.eye(3)), mdi_bruteforce(G, np.eye(3))
    assert abs(a - b) < 1e-12
    assert 0.6 < a <= 1


def test_identity_and_scaled_statistic():
    assert mdi_bruteforce(np.eye(4), np.eye(4)) == 0
    assert scaled_mdi_statistic(np.eye(3), np.eye(3), 500) == 0
    # D^2 = 0.001 with n = 1000, p = 2
    t = math.asin(math.sqrt(0.0005))
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    assert scaled_mdi_statistic(R, np.eye(2), 1000) == pytest.approx(1.0, rel=1e-9)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        minimum_distance_index(np.eye(1), np.eye(1))
    with pytest.raises(DimensionError):
        mdi_bruteforce(np.eye(8), np.eye(8))


def test_match_rows():
    rng = np.random.default_rng(5)
    P = np.eye(4)[[2, 0, 3, 1]]
    perm = match_rows(P, np.eye(4))
    # perm[i] is the row estimating component i
    for i in range(4):
        assert P[perm[i], i] == 1
    G = P + 0.01 * rng.standard_normal((4, 4))
    np.testing.assert_array_equal(match_rows(G, np.eye(4)), perm)


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, (3, 3), elements=st.floats(-10, 10)),
    st.integers(0, 2**31 - 1),
)
def test_range_and_invariance(G, seed):
    d = minimum_distance_index(G, np.eye(3))
    assert 0.0 <= d <= 1.0
    C = _signed_scaled_perm(3, np.random.default_rng(seed))
    assert abs(minimum_distance_index(C @ G, np.eye(3)) - d) < 1e-12
