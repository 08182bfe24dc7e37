import numpy as np
import pytest

from bwbaero.atmosphere import FLIGHT_BOUNDS
from bwbaero.errors import DomainError
from bwbaero.geometry import PARAM_BOUNDS
from bwbaero.sampling import lhs_sample, sample_flight_conditions, sample_planforms


def bin_indices(column, lo, hi, n):
    idx = np.floor((column - lo) / (hi - lo) * n).astype(int)
    return np.clip(idx, 0, n - 1)


def test_single_sample_within_bounds():
    x = lhs_sample(1, [(0.0, 1.0)], seed=0)
    assert x.shape == (1, 1)
    assert 0.0 <= x[0, 0] < 1.0


def test_quartile_occupancy():
    x = lhs_sample(4, [(0.0, 1.0)], seed=3)[:, 0]
    assert sorted(bin_indices(x, 0.0, 1.0, 4)) == [0, 1, 2, 3]


def test_each_bin_occupied_once_per_dimension():
    bounds = list(PARAM_BOUNDS.values())
    n = 999
    x = lhs_sample(n, bounds, seed=11)
    for j, (lo, hi) in enumerate(bounds):
        col = x[:, j]
        assert col.min() >= lo and col.max() <= hi
        assert sorted(bin_indices(col, lo, hi, n)) == list(range(n))


def test_marginal_histograms_exact():
    x = lhs_sample(1000, [(0.0, 1.0), (-2.0, 2.0)], seed=5)
    for j, (lo, hi) in enumerate([(0.0, 1.0), (-2.0, 2.0)]):
        counts = np.bincount(bin_indices(x[:, j], lo, hi, 10), minlength=10)
        assert np.all(counts == 100)


def test_deterministic_per_seed():
    a = lhs_sample(64, [(0.0, 1.0)] * 3, seed=7)
    b = lhs_sample(64, [(0.0, 1.0)] * 3, seed=7)
    c = lhs_sample(64, [(0.0, 1.0)] * 3, seed=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_invalid_bounds():
    with pytest.raises(DomainError):
        lhs_sample(4, [(1.0, 1.0)], seed=0)
    with pytest.raises(DomainError):
        lhs_sample(0, [(0.0, 1.0)], seed=0)


def test_sample_planforms_within_table_bounds():
    for p in sample_planforms(25, seed=1):
        p.validate_bounds()


def test_sample_flight_conditions_within_table_bounds():
    for fc in sample_flight_conditions(25, seed=1):
        fc.validate_bounds()
    bounds = list(FLIGHT_BOUNDS.values())
    rows = np.array([fc.as_array() for fc in sample_flight_conditions(25, seed=1)])
    for j, (lo, hi) in enumerate(bounds):
        assert rows[:, j].min() >= lo and rows[:, j].max() <= hi
