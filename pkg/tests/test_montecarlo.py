import io
import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from spinchain.core import ModelParams, SpinConfig
from spinchain.errors import ContractError, ResourceError
from spinchain.kernels import assemble, row
from spinchain.montecarlo import (
    RngSeed,
    empirical_stationary,
    fit_exponent,
    step,
    tunneling_time,
    write_tunneling_csv,
)
from spinchain.stationary import exact_stationary, gibbs, tv_distance


def mean_hitting_time(kind, L, J, bc):
    """Expected steps from all plus to all minus by a linear solve."""
    P = assemble(kind, ModelParams(L, J, bc))
    n = P.shape[0]
    keep = np.arange(1, n)
    A = sp.identity(n - 1) - P[keep][:, keep]
    return spla.spsolve(A.tocsc(), np.ones(n - 1))[-1]


@pytest.mark.parametrize("kind,start", [("irreversible", "++++"), ("glauber", "+-++")])
def test_one_step_law(kind, start):
    p = ModelParams(4, 0.3, "plus")
    sigma = SpinConfig.from_string(start)
    r = row(kind, p, sigma)
    expected = {t.bits: w for t, w in zip(r.targets, r.weights)}
    expected[sigma.bits] = r.diagonal
    gen = RngSeed(11).generator()
    n = 100_000
    counts = {}
    for _ in range(n):
        b = step(kind, p, sigma, gen).bits
        counts[b] = counts.get(b, 0) + 1
    assert set(counts) <= set(expected)
    for b, w in expected.items():
        sd = math.sqrt(n * w * (1 - w))
        assert abs(counts.get(b, 0) - n * w) <= 4 * sd + 1


def test_zero_temperature_top_is_absorbing():
    p = ModelParams(5, 1.0)
    gen = RngSeed(0).generator()
    top = SpinConfig.all_plus(5)
    assert all(step("zero-temperature", p, top, gen) == top for _ in range(200))


def test_infinite_temperature_always_flips():
    p = ModelParams(6, 0.0, "empty")
    gen = RngSeed(0).generator()
    sigma = SpinConfig.from_string("+-+--+")
    for _ in range(200):
        tau = step("irreversible", p, sigma, gen)
        assert bin(tau.bits ^ sigma.bits).count("1") == 1
        sigma = tau


def test_step_rejects_delta_p_and_length():
    with pytest.raises(ContractError):
        step("delta-p", ModelParams(3, 1.0), SpinConfig.all_plus(3), 0)
    with pytest.raises(ValueError):
        step("glauber", ModelParams(3, 1.0), SpinConfig.all_plus(4), 0)


def test_seeds():
    a = RngSeed(5, 2).generator().random(4)
    assert np.array_equal(a, RngSeed(5, 2).generator().random(4))
    assert not np.array_equal(a, RngSeed(5, 3).generator().random(4))
    with pytest.raises(ValueError):
        RngSeed(-1)
    with pytest.raises(ValueError):
        RngSeed(2**64)


def test_tunneling_reproducible(monkeypatch):
    p = ModelParams(8, 2.0, "empty")
    a = tunneling_time("glauber", p, 30, seed=7)
    b = tunneling_time("glauber", p, 30, seed=7)
    assert np.array_equal(a.samples, b.samples)
    monkeypatch.setenv("SPINCHAIN_THREADS", "3")
    c = tunneling_time("glauber", p, 30, seed=7)
    assert np.array_equal(a.samples, c.samples)
    # a replica does not depend on how many others run
    d = tunneling_time("glauber", p, 10, seed=7)
    assert np.array_equal(a.samples[:10], d.samples)
    assert not np.array_equal(a.samples, tunneling_time("glauber", p, 30, seed=8).samples)


@pytest.mark.parametrize("kind", ["irreversible", "glauber"])
def test_tunneling_mean_matches_exact(kind):
    L, J = 6, 1.5
    exact = mean_hitting_time(kind, L, J, "empty")
    st = tunneling_time(kind, ModelParams(L, J, "empty"), 2000, seed=1)
    assert st.samples.min() >= L
    assert abs(st.mean - exact) < 4 * math.sqrt(st.var / st.n)


def test_ci_shrinks_like_sqrt_n():
    p = ModelParams(8, 1.5, "empty")
    w = [np.diff(tunneling_time("irreversible", p, n, seed=3).ci95)[0] for n in (400, 1600)]
    assert 1.5 < w[0] / w[1] < 2.7


def test_censoring():
    st = tunneling_time("glauber", ModelParams(10, 3.0, "empty"), 30, seed=0, budget=50)
    assert st.censored.all() and st.n_censored == 30
    assert np.all(st.samples == 50)


def test_tunneling_contracts():
    with pytest.raises(ContractError):
        tunneling_time("zero-temperature", ModelParams(4, 1.0), 30)
    with pytest.raises(ValueError):
        tunneling_time("glauber", ModelParams(4, 1.0), 0)
    with pytest.raises(ResourceError):
        tunneling_time("glauber", ModelParams(2**20 + 1, 1.0), 30)


def test_tunneling_csv():
    st = tunneling_time("irreversible", ModelParams(4, 1.0, "empty"), 30, seed=2)
    buf = io.StringIO()
    write_tunneling_csv(st, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "replica,steps"
    assert len(lines) == 30 + 3
    assert lines[-2] == "L,J,kind,mean,var,ci_lo,ci_hi,censored"
    fields = lines[-1].split(",")
    assert fields[:3] == ["4", "1.0", "irreversible"] and fields[-1] == "0"
    assert float(fields[3]) == st.mean


def test_empirical_stationary():
    p = ModelParams(6, 1.0, "empty")
    emp = empirical_stationary("irreversible", p, 10_000, 1_000_000, 1, rng=4)
    assert emp.sum() == pytest.approx(1.0, abs=1e-15)
    assert tv_distance(emp, gibbs(p)) < 0.02
    q = ModelParams(6, 1.5, "plus")
    emp = empirical_stationary("irreversible", q, 10_000, 1_000_000, 2, rng=RngSeed(9))
    assert tv_distance(emp, exact_stationary("irreversible", q)) < 0.02
    with pytest.raises(ResourceError):
        empirical_stationary("irreversible", ModelParams(15, 1.0), 0, 10)
    with pytest.raises(ValueError):
        empirical_stationary("irreversible", p, 0, 10, thinning=0)


def test_fit_exponent():
    Ls = [8, 16, 32]
    assert fit_exponent(Ls, [3 * L**2 for L in Ls]) == pytest.approx(2.0)
