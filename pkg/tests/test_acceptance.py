"""Acceptance suite: one test per criterion, at the stated tolerance."""

import math

import numpy as np

from spinchain.catalan import (
    lemma41_partial,
    pi1_interval,
    pi1_ray,
    pi1_table,
    piuno_bound,
    srw_first_passage,
    stirling_bounds_check,
    term,
    theorem2_constant,
    theorem3_row,
)
from spinchain.core import ModelParams, interval_config, left_antiparallel_counts, ray_config
from spinchain.kernels import assemble, flip_weight_table
from spinchain.montecarlo import empirical_stationary, fit_exponent, tunneling_time
from spinchain.perturbation import DeviationOperator, expansion_terms, pi_k, pi_leq1, series_sum
from spinchain.stationary import currents, exact_stationary, gibbs, kolmogorov_check, tv_distance

from acceptance_report import criterion


def test_criterion_01_gibbs_stationarity():
    with criterion(1, "Gibbs measure is stationary for the irreversible empty-boundary chain") as info:
        worst = 0.0
        for L in range(2, 13):
            for J in (0.3, 1.0, 3.0):
                p = ModelParams(L, J, "empty")
                pig = gibbs(p)
                worst = max(worst, float(np.abs(assemble("irreversible", p).T @ pig - pig).max()))
        info["detail"] = f"max residual {worst:.2e}"
        assert worst < 1e-12


def test_criterion_02_irreversibility_witnesses():
    with criterion(2, "Kolmogorov 4-loop violation and block-wall current") as info:
        p = ModelParams(3, 1.0, "plus")
        loop = kolmogorov_check("irreversible", p, 4)
        assert loop is not None
        W = flip_weight_table("irreversible", p)
        fwd = bwd = 1.0
        for a, b in zip(loop, loop[1:]):
            k = (a.bits ^ b.bits).bit_length() - 1
            fwd *= W[a.bits, k]
            bwd *= W[b.bits, k]
        assert abs(fwd - bwd) > 1e-10 * max(fwd, bwd)

        worst = 0.0
        checked = 0
        for L in (6, 8, 10):
            for J in (0.3, 1.0, 3.0):
                q = ModelParams(L, J, "empty")
                pig = gibbs(q)
                rep = currents(exact_stationary("irreversible", q), "irreversible", q)
                for i in range(2, L):
                    for m in range(2, L - i):
                        x = interval_config(L, i, m).bits
                        expected = (1 - math.exp(-4 * J)) / L * pig[x]
                        worst = max(worst, abs(rep.edges[x, i - 1] - expected))
                        checked += 1
        info["detail"] = f"loop {' -> '.join(map(str, loop))}; {checked} block currents, max error {worst:.1e}"
        assert checked > 0 and worst < 1e-13


def test_criterion_03_expansion_correctness():
    with criterion(3, "series to order 5 matches the exact measure; support law; zero mass") as info:
        worst_tv = 0.0
        for L in (6, 8):
            op = DeviationOperator(ModelParams(L, 1.0))
            for J in (1.5, 2.0, 2.5):
                p = ModelParams(L, J)
                worst_tv = max(worst_tv, tv_distance(exact_stationary("irreversible", p), series_sum(p, 5, op).values))
        worst_support = 0.0
        worst_mass = 0.0
        for L in (4, 6, 8, 10):
            ell = left_antiparallel_counts(L)
            terms = expansion_terms(ModelParams(L, 1.0), 5 if L in (6, 8) else 3)
            for k, t in enumerate(terms[1:], 1):
                if k <= 3:
                    worst_support = max(worst_support, float(np.abs(t[ell > 2 * k]).max(initial=0.0)))
                if L in (6, 8):
                    worst_mass = max(worst_mass, abs(math.fsum(t)))
        info["detail"] = f"tv {worst_tv:.1e}, off-support {worst_support:.1e}, mass {worst_mass:.1e}"
        assert worst_tv < 1e-6
        assert worst_support < 1e-13
        assert worst_mass < 1e-11


def test_criterion_04_theorem1_slope():
    with criterion(4, "slope of log d_TV(pi, pi_leq1) against J at L=8") as info:
        L = 8
        op = DeviationOperator(ModelParams(L, 1.0))
        Js = np.linspace(1.5, 3.0, 7)
        d = [tv_distance(exact_stationary("irreversible", ModelParams(L, J)), pi_leq1(ModelParams(L, J), op)) for J in Js]
        slope = float(np.polyfit(Js, np.log(d), 1)[0])
        info["detail"] = f"slope {slope:.3f}"
        assert -8.5 <= slope <= -7.5


def test_criterion_05_catalan_matrix_agreement():
    with criterion(5, "closed forms equal the all-plus row of D for every block and ray") as info:
        worst = 0.0
        for L in (8, 10, 12):
            first = pi_k(ModelParams(L, 1.0), 1)
            for i in range(1, L + 1):
                worst = max(worst, abs(first[ray_config(L, i).bits] - float(pi1_ray(i, L))))
                for m in range(1, L - i + 1):
                    worst = max(worst, abs(first[interval_config(L, i, m).bits] - float(pi1_interval(i, m))))
        info["detail"] = f"max error {worst:.1e}"
        assert worst < 1e-12


def test_criterion_06_lemma41_duality():
    with criterion(6, "Catalan terms equal first-passage probabilities; partial sums increase to 1") as info:
        for m in range(1, 9):
            table = srw_first_passage(m, 2 * 60 + m)
            for l in range(61):
                assert term(l, m) == table.pmf.get(2 * l + m, 0)
            sums = [lemma41_partial(m, l) for l in range(61)]
            assert all(a < b for a, b in zip(sums, sums[1:]))
            assert sums[-1] < 1
        reached = {}
        for m, l_max in ((1, 4000), (2, 16000), (3, 40000)):
            s = lemma41_partial(m, l_max)
            assert 1 - 1e-2 < s < 1
            reached[m] = (l_max, float(s))
        info["detail"] = "; ".join(f"m={m}: S({l})={s:.5f}" for m, (l, s) in reached.items())


def test_criterion_07_theorem2():
    with criterion(7, "deficit*sqrt(i) settles; pi1 bound; Stirling inequalities") as info:
        spreads = []
        for m in (1, 2, 3):
            (_, _, a), (_, _, b) = theorem2_constant(m, [10_000, 40_000])
            spreads.append(abs(b - a) / a)
        i_max, m_max = 10_000, 20
        T = pi1_table(i_max, m_max)
        i = np.arange(1, i_max + 1)[:, None]
        m = np.arange(1, m_max + 1)[None, :]
        bound = 4.0 * m * np.exp(-(m * m) / (2.0 * (m + i)))
        assert np.all(T[1:, 1:] <= bound)
        assert piuno_bound(1, 1) == bound[0, 0]
        sharp_misses = 0
        for l in range(1, 1001):
            for mm in range(1, 21):
                c = stirling_bounds_check(l, mm)
                assert c.lower <= c.value <= c.rough_upper
                sharp_misses += not c.sharp_holds
        info["detail"] = ("relative spread " + ", ".join(f"{s:.2e}" for s in spreads)
                          + f"; sharpened bound misses {sharp_misses} pairs (reported only)")
        assert max(spreads) < 0.05


def test_criterion_08_theorem3():
    with criterion(8, "first-order to Gibbs minus-moment ratio at J = log L") as info:
        ratios = [theorem3_row(L).ratio for L in (50, 100, 200, 400)]
        info["detail"] = "ratios " + ", ".join(f"{r:.4g}" for r in ratios)
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < 0.3


def test_criterion_09_tunneling_scaling():
    with criterion(9, "tunneling-time exponents and irreversible speed-up at J=2.5") as info:
        Ls = (8, 16, 32)
        means = {}
        for kind in ("irreversible", "glauber"):
            means[kind] = [tunneling_time(kind, ModelParams(L, 2.5, "empty"), 100, seed=2024).mean for L in Ls]
        e_irr = fit_exponent(Ls, means["irreversible"])
        e_rev = fit_exponent(Ls, means["glauber"])
        speedup = means["glauber"][1] / means["irreversible"][1]
        info["detail"] = f"exponents irreversible {e_irr:.2f}, reversible {e_rev:.2f}; ratio at L=16 {speedup:.1f}"
        assert 0.6 <= e_irr <= 1.6
        assert 2.3 <= e_rev <= 3.7
        assert speedup >= 10


def test_criterion_10_monte_carlo_cross_check():
    with criterion(10, "empirical stationary histogram at L=6 against the exact solver") as info:
        tvs = {}
        for bc, J in (("empty", 1.0), ("plus", 1.5)):
            p = ModelParams(6, J, bc)
            emp = empirical_stationary("irreversible", p, 100_000, 10_000_000, 1, rng=10)
            tvs[bc] = tv_distance(emp, exact_stationary("irreversible", p))
        info["detail"] = ", ".join(f"{bc} tv {v:.4f}" for bc, v in tvs.items())
        assert max(tvs.values()) < 0.02
