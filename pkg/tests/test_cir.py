import json
import math

import numpy as np
import pytest

from nuinarch import (
    CirParams,
    CriticalTable,
    EmpiricalDistribution,
    LimitLawSampler,
    RngStream,
    limit_functional,
    sample_limit,
    simulate_cir,
)
from nuinarch.cir import DegeneratePathError, TableMismatchError


def test_path_is_non_negative_and_reproducible():
    p = CirParams(0.3, 2.0, 2000)
    a = simulate_cir(p, RngStream(1))
    b = simulate_cir(p, RngStream(1))
    assert np.array_equal(a.values, b.values)
    assert a.values[0] == 0 and np.all(a.values >= 0)
    assert a.steps == 2000 and a.times[-1] == 1.0


def test_path_recursion():
    p = CirParams(1.0, 1.5, 50, x0=0.2)
    path = simulate_cir(p, RngStream(3))
    dt = 1 / 50
    x = path.values
    for i in range(50):
        xp = max(x[i], 0)
        nxt = max(x[i] + (1.0 - 1.5 * xp) * dt + math.sqrt(xp) * path.increments[i], 0.0)
        assert x[i + 1] == pytest.approx(nxt, rel=1e-12, abs=1e-15)


def test_fused_sampler_matches_path_functional():
    p = CirParams(1.0, 0.5, 300)
    d = sample_limit(p, 5, RngStream(4, 2))
    direct = [limit_functional(simulate_cir(p, RngStream(4, 2).child(i))) for i in range(5)]
    assert np.allclose(d.values, np.sort(direct), rtol=1e-12)


def test_ito_sum_by_hand():
    from nuinarch.cir import CirPath

    path = CirPath(np.array([1.0, 4.0, 0.0]), np.array([0.5, -1.0]))
    # (1*0.5 + 8*(-1)) / ((1 + 16) * 0.5)
    assert limit_functional(path) == pytest.approx(-7.5 / 8.5)
    with pytest.raises(DegeneratePathError):
        limit_functional(CirPath(np.zeros(3), np.ones(2)))


def test_sample_independent_of_threads():
    p = CirParams(1.0, 0.0, 200)
    a = sample_limit(p, 64, RngStream(5), threads=1)
    b = sample_limit(p, 64, RngStream(5), threads=4)
    assert a == b
    assert a.meta["draws"] == 64 and a.meta["seed"] == 5


def test_param_validation():
    for kw in ({"beta": 0}, {"beta": 1, "gamma": -1}, {"beta": 1, "steps": 1}):
        with pytest.raises(ValueError):
            CirParams(**kw)


def test_sampler_interpolates_between_nodes():
    s = LimitLawSampler(100, 400, seed=1, gamma_grid=[0.0, 1.0, 4.0])
    at_node = s(1.0, 1.0)
    assert np.allclose(at_node.quantile([0.1, 0.5]), s.exact(1.0, 1.0).quantile([0.1, 0.5]))
    mid = s(1.0, 2.5)
    q_lo, q_hi = s.exact(1.0, 1.0).quantile(0.5), s.exact(1.0, 4.0).quantile(0.5)
    assert mid.quantile(0.5) == pytest.approx(0.5 * q_lo + 0.5 * q_hi)
    assert mid.to_distribution().quantile(0.5) == pytest.approx(mid.quantile(0.5))
    # clamped beyond the grid
    assert s(1.0, 99.0).quantile(0.5) == pytest.approx(q_hi)


def test_sqrt_grid():
    g = LimitLawSampler.sqrt_grid(10.0, 0.5)
    assert g[0] == 0 and g[-1] >= 10 and np.all(np.diff(np.sqrt(g)) == pytest.approx(0.5))


@pytest.fixture(scope="module")
def small_table():
    d = sample_limit(CirParams(1.0, 0.0, 200), 2000, RngStream(3))
    return CriticalTable.from_distribution(d), d


def test_table_round_trip(small_table, tmp_path):
    table, dist = small_table
    text = table.to_json()
    assert CriticalTable.from_json(text).to_json() == text
    assert table.quantile(0.05) == pytest.approx(dist.quantile(0.05))
    assert table.quantile(0.0505) == pytest.approx(0.5 * (table.quantile(0.05) + table.quantile(0.051)))
    table.save(tmp_path / "t.json")
    assert (tmp_path / "t.json").read_text() == text
    assert json.loads(text)["draws"] == 2000


def test_table_provenance(small_table, tmp_path):
    table, _ = small_table
    table.save(tmp_path / "t.json")
    CriticalTable.load(tmp_path / "t.json", beta=1.0, gamma=0.0, steps=200)
    with pytest.raises(TableMismatchError):
        CriticalTable.load(tmp_path / "t.json", beta=0.269)
    with pytest.raises(TableMismatchError):
        CriticalTable.load(tmp_path / "t.json", steps=5000)
    with pytest.raises(ValueError):
        table.quantile(0.0001)
    with pytest.raises(ValueError):
        CriticalTable.from_json('{"beta": 1}')


def test_table_cdf_inverts(small_table):
    table, _ = small_table
    for z in (0.01, 0.05, 0.5, 0.9):
        assert table.interpolated_cdf(table.quantile(z)) == pytest.approx(z, abs=1e-9)


def test_empirical_distribution_equality():
    assert EmpiricalDistribution([1, 2], {"a": 1}) == EmpiricalDistribution([2, 1], {"a": 1})
    assert EmpiricalDistribution([1, 2], {"a": 1}) != EmpiricalDistribution([1, 2], {"a": 2})
