"""Independent reference computations used as test oracles.

Everything here works from spin lists and explicit formulas with plain loops,
sharing no code path with the package beyond the index convention (bit i-1
set means sigma_i = +1).
"""

import itertools
import math
from fractions import Fraction

import numpy as np


def spins_of(index, L):
    return [1 if (index >> k) & 1 else -1 for k in range(L)]


def index_of(spins):
    return sum(1 << k for k, s in enumerate(spins) if s > 0)


def _bnd(bc):
    return 1 if bc == "plus" else 0


def gibbs_enum(L, J, bc):
    """exp(J sum sigma_i sigma_{i+1}) with boundary spins, normalised."""
    b = _bnd(bc)
    w = np.zeros(1 << L)
    for x in range(1 << L):
        s = [b] + spins_of(x, L) + [b]
        w[x] = math.exp(J * sum(s[k] * s[k + 1] for k in range(L + 1)))
    return w / math.fsum(w)


def kernel_dense(kind, L, J, bc):
    """Dense kernel built site by site from the flip-rate formulas."""
    b = _bnd(bc)
    n = 1 << L
    P = np.zeros((n, n))
    for x in range(n):
        s = [b] + spins_of(x, L) + [b]
        for i in range(1, L + 1):
            left, right, si = s[i - 1], s[i + 1], s[i]
            if kind == "irreversible":
                w = math.exp(-2 * J * (1 + si * left))
            elif kind == "glauber":
                w = math.exp(-max(0.0, 2 * J * si * (left + right)))
            elif kind == "zero-temperature":
                w = 1.0 if si * left == -1 else 0.0
            elif kind == "delta-p":
                w = 1.0 if si * left == 1 else 0.0
            else:
                raise ValueError(kind)
            P[x, x ^ (1 << (i - 1))] += w / L
        P[x, x] = (0.0 if kind == "delta-p" else 1.0) - P[x].sum()
    return P


def stationary_dense(P):
    """Null vector of P^T - I by least squares with the normalisation appended."""
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones(n)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    return np.linalg.lstsq(A, rhs, rcond=None)[0]


def deviation_truncated(L, j_max=None):
    """D = dP sum_{j <= j_max} (P0^j - Pi0) by repeated multiplication."""
    P0 = kernel_dense("zero-temperature", L, 0.0, "plus")
    dP = kernel_dense("delta-p", L, 0.0, "plus")
    n = 1 << L
    j_max = 50 * L * L if j_max is None else j_max
    Pi0 = np.zeros((n, n))
    Pi0[:, n - 1] = 1.0
    S = np.zeros((n, n))
    M = np.eye(n)
    for _ in range(j_max + 1):
        S += M - Pi0
        M = M @ P0
    return dP @ S


def first_order_truncated(L, j_max=None):
    """Top row of D by iterating a row vector, so L = 8 stays cheap."""
    P0 = kernel_dense("zero-temperature", L, 0.0, "plus")
    dP = kernel_dense("delta-p", L, 0.0, "plus")
    n = 1 << L
    j_max = 50 * L * L if j_max is None else j_max
    v = dP[n - 1].copy()
    # v has zero mass, so v Pi0 = 0 and every term is v P0^j
    out = np.zeros(n)
    for _ in range(j_max + 1):
        out += v
        v = v @ P0
    return out


def catalan_factorial(n, k):
    return math.factorial(n + k) * (n - k + 1) // (math.factorial(k) * math.factorial(n + 1))


def first_passage_enum(m, n):
    """P(tau_m = n) for the simple walk by listing all 2^n paths."""
    hits = 0
    for steps in itertools.product((1, -1), repeat=n):
        pos = 0
        first = None
        for t, d in enumerate(steps, 1):
            pos += d
            if pos == m:
                first = t
                break
        hits += first == n
    return Fraction(hits, 2**n)
