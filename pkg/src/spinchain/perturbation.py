"""Low-temperature expansion of the plus-boundary irreversible stationary measure.

With eps = exp(-4J) the irreversible kernel splits as P = P0 + eps * dP, where
P0 is the zero-temperature chain (all-plus absorbing).  The stationary measure
expands as

    pi = sum_k eps^k pi_k,   pi_k = pi_0 D^k,   D = sum_j dP P0^j,

with pi_0 the point mass at all-plus.  Since the rows of dP sum to zero,
dP P0^j = dP (P0^j - Pi0) and the sum over j converges.  On the transient
block Q of P0 it equals the absorbing-chain fundamental matrix (I - Q)^-1,
which is what :class:`DeviationOperator` applies.

P0 only moves domain walls to the right or annihilates neighbouring walls, so
the potential  Phi(sigma) = sum_i w_i(sigma) (L + 1 - i),  with w_i the wall
indicator of the bond (i-1, i), strictly decreases along every transition.
Visiting states by decreasing Phi turns every solve with I - Q into one
forward sweep.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import Boundary, ModelParams, check_exact_size, config_string, left_antiparallel_counts
from .errors import ContractError, RegimeError
from .kernels import KernelKind, assemble
from .stationary import exact_stationary, tv_distance

MAX_EXPANSION_L = 22
MAX_HIGHER_ORDER_L = 14
MAX_DENSE_L = 10


def wall_potential(L: int) -> np.ndarray:
    """Phi for every configuration index."""
    idx = np.arange(1 << L, dtype=np.int64)
    walls = (idx ^ ((idx << 1) | 1)) & ((1 << L) - 1)
    weights = L - np.arange(L, dtype=np.int64)  # bit k <-> site k+1 <-> weight L - k
    return ((walls[:, None] >> np.arange(L)) & 1) @ weights


@numba.njit(cache=True)
def _forward_sweep(order, ell, b, L):
    n = b.size
    mask = n - 1
    x = np.zeros(n)
    inflow = np.zeros(n)
    for s in order:
        val = (b[s] + inflow[s]) * L / ell[s]
        x[s] = val
        walls = (s ^ ((s << 1) | 1)) & mask
        share = val / L
        while walls:
            low = walls & -walls
            inflow[s ^ low] += share
            walls ^= low
    return x


class DeviationOperator:
    """The operator D = sum_j dP P0^j for the plus boundary.

    Only the action v -> v D is held (``apply``); ``dense`` materialises the
    matrix through an explicit inverse of I - Q for small chains.
    """

    def __init__(self, params: ModelParams):
        if params.boundary is not Boundary.PLUS:
            raise ContractError("the expansion is defined for the plus boundary only")
        check_exact_size(params.L, MAX_EXPANSION_L)
        self.params = params
        self.L = L = params.L
        self.n = 1 << L
        self.top = self.n - 1  # all-plus
        self.delta_p = assemble(KernelKind.DELTA_P, params)
        self._delta_p_t = self.delta_p.T.tocsr()
        self.ell = left_antiparallel_counts(L).astype(np.float64)
        phi = wall_potential(L)
        order = np.argsort(-phi, kind="stable")
        self.order = order[order != self.top].astype(np.int64)

    def fundamental_solve(self, b: np.ndarray) -> np.ndarray:
        """x with x (I - Q) = b on the transient states; the all-plus entry is 0."""
        x = _forward_sweep(self.order, self.ell, np.ascontiguousarray(b, dtype=np.float64), self.L)
        x[self.top] = 0.0
        return x

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Row vector times D."""
        x = self.fundamental_solve(self._delta_p_t @ v)
        x[self.top] = -math.fsum(x)
        return x

    def dense(self) -> np.ndarray:
        check_exact_size(self.L, MAX_DENSE_L)
        P0 = assemble(KernelKind.ZERO_TEMPERATURE, self.params).toarray()
        t = np.arange(self.n) != self.top
        Q = P0[np.ix_(t, t)]
        N = np.linalg.inv(np.eye(self.n - 1) - Q)
        tail = np.zeros((self.n - 1, self.n))
        tail[:, t] = N
        tail[:, self.top] = -N.sum(axis=1)
        return self.delta_p.toarray()[:, t] @ tail


def deviation_operator(params: ModelParams) -> DeviationOperator:
    return DeviationOperator(params)


def expansion_terms(params: ModelParams, k_max: int, op: DeviationOperator | None = None) -> list[np.ndarray]:
    """[pi_0, pi_1, ..., pi_{k_max}] by repeated products with the all-plus row."""
    if k_max < 0:
        raise ValueError("order must be nonnegative")
    if k_max >= 2:
        check_exact_size(params.L, MAX_HIGHER_ORDER_L)
    op = op or DeviationOperator(params)
    v = np.zeros(op.n)
    v[op.top] = 1.0
    terms = [v]
    for _ in range(k_max):
        v = op.apply(v)
        terms.append(v)
    return terms


def pi_k(params: ModelParams, k: int, op: DeviationOperator | None = None) -> np.ndarray:
    return expansion_terms(params, k, op)[k]


def pi_leq1(params: ModelParams, op: DeviationOperator | None = None) -> np.ndarray:
    """First-order measure pi_0 + eps pi_1.

    Raises :class:`RegimeError` when eps is above the value at which the
    all-plus entry turns negative.
    """
    _, first = expansion_terms(params, 1, op)
    top = first.size - 1
    out = params.eps * first
    out[top] += 1.0
    if out.min() < -1e-12:
        threshold = 1.0 / -first[top]
        raise RegimeError(
            f"first-order measure has a negative entry at eps={params.eps:.3g}; "
            f"it is a probability only for eps <= {threshold:.3g} (J >= {-math.log(threshold) / 4:.3g})",
            eps_threshold=threshold,
        )
    return out


@dataclass(frozen=True)
class SeriesResult:
    values: np.ndarray
    term_norms: tuple[float, ...]
    tail_proxy: float


def series_sum(params: ModelParams, k_max: int, op: DeviationOperator | None = None) -> SeriesResult:
    """Partial sum of the expansion up to order ``k_max``.

    ``tail_proxy`` extrapolates the first omitted order geometrically:
    eps^(K+1) * |pi_K|_1 * (|pi_K|_1 / |pi_{K-1}|_1).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    terms = expansion_terms(params, k_max, op)
    eps = params.eps
    values = terms[0].copy()
    weight = 1.0
    for t in terms[1:]:
        weight *= eps
        values = values + weight * t
    norms = tuple(float(np.abs(t).sum()) for t in terms)
    growth = norms[-1] / norms[-2] if norms[-2] > 0 else 0.0
    tail = eps ** (k_max + 1) * norms[-1] * growth
    return SeriesResult(values, norms, tail)


@dataclass(frozen=True)
class Theorem1Row:
    L: int
    c: float
    J: float
    dtv: float
    eps2: float

    @property
    def ratio(self) -> float:
        return self.dtv / self.eps2


def theorem1_scan(L: int, c_values) -> list[Theorem1Row]:
    """Distance between the exact measure and the first-order measure along J = c log L."""
    check_exact_size(L, MAX_HIGHER_ORDER_L)
    rows = []
    for c in c_values:
        params = ModelParams.chilled(L, c, Boundary.PLUS)
        exact = exact_stationary(KernelKind.IRREVERSIBLE, params)
        approx = pi_leq1(params)
        rows.append(Theorem1Row(L, float(c), params.J, tv_distance(exact, approx), math.exp(-8 * params.J)))
    return rows


def write_terms_csv(terms: list[np.ndarray], fh, L: int) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["k", "index", "config", "value"])
    for k, t in enumerate(terms):
        for x in np.flatnonzero(t):
            writer.writerow([k, int(x), config_string(int(x), L), repr(float(t[x]))])


def write_theorem1_csv(rows: list[Theorem1Row], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["L", "c", "J", "dtv", "eps2", "ratio"])
    for r in rows:
        writer.writerow([r.L, r.c, repr(r.J), repr(r.dtv), repr(r.eps2), repr(r.ratio)])
