"""Catalan-triangle combinatorics of the first-order term.

The first-order weight of a single block of ``m`` minus spins starting at
site ``i`` is

    pi1(i; m) = sum_{l=0}^{i-1} t(l, m),   t(l, m) = 2^-(2l+m) C_{l+m-1, l},

with C_{n,k} = (n+k)! (n-k+1) / (k! (n+1)!) the Catalan triangle.  t(l, m) is
also the probability that a simple symmetric walk started at 0 first hits
level m at step 2l+m, so the partial sums are first-passage probabilities
and tend to 1.

Exact values are returned as :class:`fractions.Fraction`.  Sums are
accumulated on integers in Horner form (every term shares a power-of-two
denominator), which keeps exact evaluation cheap for i up to a few 10^4.
Float tables for large scans are built in log space.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Boundary
from .errors import InvariantViolation
from .stationary import gibbs_minus_moment

EXACT_TERM_LIMIT = 2000


def catalan_triangle(n: int, k: int) -> int:
    """Entry C_{n,k} of the Catalan triangle (0 <= k <= n)."""
    if k < 0 or n < 0:
        raise ValueError(f"indices must be nonnegative, got n={n}, k={k}")
    if k > n:
        raise ValueError(f"Catalan triangle entry needs k <= n, got n={n}, k={k}")
    num = math.comb(n + k, k) * (n - k + 1)
    q, r = divmod(num, n + 1)
    assert r == 0
    return q


def _triangle_column(m: int, l_max: int):
    """Yield C_{l+m-1, l} for l = 0..l_max using exact integer recurrences."""
    if m == 0:
        # degenerate column: P(tau_0 = 0) = 1, so only l = 0 contributes
        yield 1
        for _ in range(l_max):
            yield 0
        return
    binom = 1  # C(2l+m-1, l) at l = 0
    for l in range(l_max + 1):
        value, r = divmod(binom * m, l + m)
        assert r == 0
        yield value
        binom = binom * (2 * l + m) * (2 * l + m + 1) // ((l + 1) * (l + m))


def term(l: int, m: int) -> Fraction:
    """t(l, m) = 2^-(2l+m) C_{l+m-1, l}, exactly."""
    if l < 0 or m < 0:
        raise ValueError("l and m must be nonnegative")
    if m == 0:
        return Fraction(1 if l == 0 else 0)
    return Fraction(catalan_triangle(l + m - 1, l), 1 << (2 * l + m))


def _partial_sum(m: int, l_max: int) -> Fraction:
    if l_max < 0:
        return Fraction(0)
    acc = 0
    for c in _triangle_column(m, l_max):
        acc = acc * 4 + c
    return Fraction(acc, 1 << (2 * l_max + m))


def pi1_interval(i: int, m: int) -> Fraction:
    """First-order weight of the block (i; m).

    ``m = 0`` is the empty block, whose single term is P(tau_0 = 0) = 1.
    """
    if i < 1 or m < 0:
        raise ValueError(f"need i >= 1 and m >= 0, got i={i}, m={m}")
    return _partial_sum(m, i - 1)


def pi1_ray(i: int, L: int) -> Fraction:
    """First-order weight of the ray (i): minus spins on sites i..L.

    Sum over l = 1..i of pi1(l; L - l); the l = L summand is the empty block
    and contributes 1, which is the direct entry of a single minus at site L.
    """
    if not 1 <= i <= L:
        raise ValueError(f"ray start {i} outside [1, {L}]")
    return sum((pi1_interval(l, L - l) for l in range(1, i + 1)), Fraction(0))


def lemma41_partial(m: int, l_max: int) -> Fraction:
    """sum_{l=0}^{l_max} t(l, m); increases to 1 as l_max grows."""
    if m < 1:
        raise ValueError("m must be positive")
    return _partial_sum(m, l_max)


@dataclass(frozen=True)
class FirstPassageTable:
    m: int
    pmf: dict[int, Fraction]

    def cdf_below(self, n: int) -> Fraction:
        """P(tau_m < n)."""
        return sum((p for k, p in self.pmf.items() if k < n), Fraction(0))


def srw_first_passage(m: int, n_max: int) -> FirstPassageTable:
    """Exact law of the first hitting time of level m by the simple symmetric walk.

    Path counting over (step, position) with level m absorbing; independent of
    any Catalan formula.
    """
    if m < 1 or n_max < m:
        raise ValueError(f"need m >= 1 and n_max >= m, got m={m}, n_max={n_max}")
    offset = n_max
    counts = np.zeros(n_max + m + 1, dtype=object)
    counts[:] = 0
    counts[offset] = 1  # position 0
    top = offset + m
    pmf = {}
    for n in range(1, n_max + 1):
        new = np.zeros_like(counts)
        new[:] = 0
        new[1:] += counts[:-1]
        new[:-1] += counts[1:]
        hits = new[top]
        if hits:
            pmf[n] = Fraction(int(hits), 1 << n)
        new[top] = 0
        counts = new
    return FirstPassageTable(m, pmf)


def first_passage_tail(m: int, n: int) -> float:
    """P(tau_m > n) by the reflection principle: P(-m <= S_n <= m-1)."""
    lo, hi = -m, m - 1
    total = []
    for s in range(lo, hi + 1):
        if (n + s) % 2 or abs(s) > n:
            continue
        k = (n + s) // 2
        total.append(math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) - n * math.log(2)))
    return math.fsum(total)


# -- floating-point evaluation ---------------------------------------------------------


def log_term(l: int, m: int) -> float:
    """log t(l, m) from log-Gamma."""
    return (
        math.lgamma(2 * l + m + 1) - math.lgamma(l + m + 1) - math.lgamma(l + 1)
        + math.log(m / (2 * l + m)) - (2 * l + m) * math.log(2.0)
    )


def term_value(l: int, m: int) -> float:
    if l + m <= EXACT_TERM_LIMIT:
        return float(term(l, m))
    return math.exp(log_term(l, m))


def log_term_table(l_max: int, m_values) -> np.ndarray:
    """log t(l, m) for l = 0..l_max (rows) and each m in ``m_values`` (columns).

    Built from log t(0, m) = -m log 2 and the ratio
    t(l+1, m) / t(l, m) = (2l+m)(2l+m+1) / (4 (l+1)(l+m+1)).
    """
    m = np.asarray(m_values, dtype=np.float64)[None, :]
    l = np.arange(l_max, dtype=np.float64)[:, None]
    log_ratio = np.log((2 * l + m) * (2 * l + m + 1)) - np.log(4 * (l + 1) * (l + m + 1))
    out = np.empty((l_max + 1, m.shape[1]))
    out[0] = -m[0] * math.log(2.0)
    out[1:] = out[0] + np.cumsum(log_ratio, axis=0)
    return out


def pi1_table(i_max: int, m_max: int) -> np.ndarray:
    """Float array T with T[i, m] = pi1(i; m) for 1 <= i <= i_max, 1 <= m <= m_max.

    Row 0 and column 0 are unused (zero).
    """
    ms = np.arange(1, m_max + 1)
    terms = np.exp(log_term_table(i_max - 1, ms))
    table = np.zeros((i_max + 1, m_max + 1))
    table[1:, 1:] = np.cumsum(terms, axis=0)
    return table


def pi1_interval_float(i: int, m: int) -> float:
    """pi1(i; m) in double precision, for i beyond exact reach."""
    if i - 1 + m <= EXACT_TERM_LIMIT:
        return float(pi1_interval(i, m))
    return math.fsum(np.exp(log_term_table(i - 1, [m])[:, 0]))


def deficit(i: int, m: int) -> float:
    """1 - pi1(i; m), the first-passage tail sum_{l >= i} t(l, m)."""
    if i - 1 + m <= EXACT_TERM_LIMIT:
        return float(1 - pi1_interval(i, m))
    return 1.0 - pi1_interval_float(i, m)


@dataclass(frozen=True)
class StirlingCheck:
    lower: float
    value: float
    upper: float
    rough_upper: float

    @property
    def sharp_holds(self) -> bool:
        """Whether t(l, m) also sits below the sharpened Gaussian-factor bound."""
        return self.value <= self.upper


def stirling_bounds_check(l: int, m: int) -> StirlingCheck:
    """Evaluate t(l, m) against its two-sided l^(-3/2) bounds.

    lower  = 2^-m / (3 sqrt 6) l^(-3/2)
    upper  = (1/2) exp(-m^2 / (2(m+l))) m l^(-3/2)
    rough  = (m/2) l^(-3/2)

    Raises :class:`InvariantViolation` if t(l, m) falls outside [lower, rough].
    The sharpened ``upper`` is only reported: it fails when l is small
    compared with m^2 (first at l=11, m=18), see ``StirlingCheck.sharp_holds``.
    """
    if l < 1 or m < 1:
        raise ValueError("l and m must be positive")
    value = term_value(l, m)
    scale = l ** -1.5
    lower = 2.0**-m / (3.0 * math.sqrt(6.0)) * scale
    upper = 0.5 * math.exp(-(m * m) / (2.0 * (m + l))) * m * scale
    rough = 0.5 * m * scale
    if not (lower <= value <= rough):
        raise InvariantViolation(f"Stirling bounds fail at l={l}, m={m}: {lower} <= {value} <= {rough}")
    return StirlingCheck(lower, value, upper, rough)


def theorem2_constant(m: int, i_list) -> list[tuple[int, float, float]]:
    """(i, deficit, deficit * sqrt(i)) for each i; the last column settles to a constant."""
    i_list = list(i_list)
    if any(b <= a for a, b in zip(i_list, i_list[1:])):
        raise ValueError("i_list must be increasing")
    rows = []
    if i_list and i_list[-1] - 1 + m > EXACT_TERM_LIMIT:
        cum = np.cumsum(np.exp(log_term_table(i_list[-1] - 1, [m])[:, 0]))
        for i in i_list:
            d = deficit(i, m) if i - 1 + m <= EXACT_TERM_LIMIT else 1.0 - cum[i - 1]
            rows.append((i, d, d * math.sqrt(i)))
        return rows
    for i in i_list:
        d = deficit(i, m)
        rows.append((i, d, d * math.sqrt(i)))
    return rows


def piuno_bound(i: int, m: int) -> float:
    """4 m exp(-m^2 / (2(m+i)))."""
    return 4.0 * m * math.exp(-(m * m) / (2.0 * (m + i)))


# -- macroscopic magnetisation ---------------------------------------------------------


@dataclass(frozen=True)
class Theorem3Row:
    L: int
    J: float
    pi_leq1_m: float
    gibbs_m: float

    @property
    def ratio(self) -> float:
        return self.pi_leq1_m / self.gibbs_m


def first_order_minus_moment(L: int, J: float) -> float:
    """Mean number of minus spins under the first-order measure, from closed forms.

    exp(-4J) [ sum_{i,m} m pi1(i;m) + sum_i (L+1-i) pi1((i)) ].
    """
    if L < 2:
        raise ValueError("need L >= 2")
    table = pi1_table(L, L)
    i = np.arange(L + 1)[:, None]
    m = np.arange(L + 1)[None, :]
    inside = (i >= 1) & (m >= 1) & (i + m <= L)
    blocks = math.fsum((m * table)[inside])
    # rays: pi1((i)) = sum_{l<=i} pi1(l; L-l), with pi1(L; 0) = 1
    edge = np.array([table[l, L - l] for l in range(1, L)] + [1.0])
    rays = np.cumsum(edge)
    lengths = L + 1 - np.arange(1, L + 1)
    return math.exp(-4.0 * J) * (blocks + math.fsum(lengths * rays))


def theorem3_row(L: int, J: float | None = None) -> Theorem3Row:
    """First-order versus plus-boundary Gibbs mean of the number of minus spins."""
    if J is None:
        J = math.log(L)
    return Theorem3Row(L, J, first_order_minus_moment(L, J), gibbs_minus_moment(L, J, Boundary.PLUS))


# -- CSV -------------------------------------------------------------------------------


def write_theorem2_csv(m: int, rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["i", "m", "pi1", "deficit", "deficit_sqrt_i"])
    for i, d, ds in rows:
        writer.writerow([i, m, repr(1.0 - d), repr(d), repr(ds)])


def write_lemma41_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["m", "l_max", "partial_sum"])
    for m, l_max, s in rows:
        writer.writerow([m, l_max, repr(float(s))])


def write_theorem3_csv(rows: list[Theorem3Row], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["L", "J", "pi_leq1_m", "gibbs_m", "ratio"])
    for r in rows:
        writer.writerow([r.L, repr(r.J), repr(r.pi_leq1_m), repr(r.gibbs_m), repr(r.ratio)])
