"""Stationary measures, probability currents and reversibility diagnostics.

Distributions are plain float arrays of length 2^L indexed by configuration
index (see :mod:`spinchain.core`).
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    Boundary,
    ModelParams,
    SpinConfig,
    check_exact_size,
    config_string,
    interior_pair_counts,
    plus_wall_counts,
)
from .errors import ContractError, ConvergenceError
from .kernels import KernelKind, assemble, flip_weight_table

log = logging.getLogger(__name__)

MAX_STATIONARY_L = 22
GTH_MAX_L = 10
KRYLOV_MAX_L = 18
RESIDUAL_TOL = 1e-12


def gibbs(params: ModelParams) -> np.ndarray:
    """Gibbs measure of the chain.

    For the empty boundary this is the closed form
    exp(-2J l(sigma)) / (2 (1 + exp(-2J))^(L-1)) with l the number of interior
    domain walls.  For the plus boundary both boundary bonds enter the energy
    and the weights exp(-2J * walls) are normalised by direct summation.
    """
    L = params.L
    check_exact_size(L)
    q = params.half_eps
    if params.boundary is Boundary.EMPTY:
        walls = interior_pair_counts(L)
        return q**walls / (2.0 * (1.0 + q) ** (L - 1))
    w = q ** plus_wall_counts(L)
    return w / math.fsum(w)


def gibbs_minus_moment(L: int, J: float, boundary=Boundary.PLUS) -> float:
    """Gibbs mean of the number of minus spins, without enumerating 2^L states.

    Uses the 2x2 transfer matrix T(s, s') = exp(J (s s' - 1)) together with its
    derivative with respect to a field coupled to minus spins.  The pair is
    carried as the upper-triangular block matrix [[T, T'], [0, T]], whose
    (L-1)-th power holds T^(L-1) and d(T^(L-1)) side by side; the power is
    taken by repeated squaring with renormalisation, so L up to 10^6 is cheap.
    """
    if L < 1:
        raise ValueError(f"L must be positive, got {L}")
    boundary = Boundary.parse(boundary)
    t = math.exp(-2.0 * J)
    tb = t if boundary is Boundary.PLUS else 1.0
    # state order (+, -)
    T = np.array([[1.0, t], [t, 1.0]])
    dT = T * np.array([0.0, 1.0])
    M = np.zeros((4, 4))
    M[:2, :2] = M[2:, 2:] = T
    M[:2, 2:] = dT

    power = np.eye(4)
    base = M.copy()
    n = L - 1
    while n:
        if n & 1:
            power = power @ base
            power /= np.abs(power).max()
        n >>= 1
        if n:
            base = base @ base
            base /= np.abs(base).max()

    A, dA = power[:2, :2], power[:2, 2:]
    a = np.array([1.0, tb])
    da = np.array([0.0, tb])
    c = np.array([1.0, tb])
    Z = a @ A @ c
    dZ = da @ A @ c + a @ dA @ c
    return float(dZ / Z)


# -- exact stationary vector -----------------------------------------------------------


def gth_solve(P: np.ndarray) -> np.ndarray:
    """Stationary vector of a dense row-stochastic matrix by Grassmann-Taksar-Heyman.

    The elimination never subtracts, so each entry comes out with small
    relative error even when the chain mixes slowly.
    """
    A = np.array(P, dtype=float, copy=True)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def _splu_solve(P: sp.csr_matrix) -> np.ndarray:
    n = P.shape[0]
    A = (P.T - sp.identity(n, format="csr")).tolil()
    A[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[n - 1] = 1.0
    pi = spla.spsolve(A.tocsc(), b)
    return pi / pi.sum()


def _krylov_solve(P: sp.csr_matrix) -> np.ndarray:
    # pin the all-plus state: pi_T (I - P_TT) = pi_top P_top,T with pi_top = 1
    n = P.shape[0]
    A = (sp.identity(n - 1, format="csr") - P[: n - 1, : n - 1]).T.tocsc()
    b = P[n - 1, : n - 1].toarray().ravel()
    ilu = spla.spilu(A, drop_tol=1e-2, fill_factor=3)
    M = spla.LinearOperator(A.shape, ilu.solve)
    y, _ = spla.gmres(A, b, M=M, rtol=1e-14, atol=0.0, restart=100, maxiter=20)
    pi = np.append(y, 1.0)
    return pi / pi.sum()


def _power_solve(P: sp.csr_matrix, tol: float, max_iter: int) -> np.ndarray:
    n = P.shape[0]
    PT = P.T.tocsr()
    pi = np.full(n, 1.0 / n)
    for it in range(max_iter):
        new = PT @ pi
        new /= new.sum()
        if np.abs(new - pi).max() < tol:
            return new
        pi = new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} sweeps")


def exact_stationary(kind, params: ModelParams, method: str = "auto",
                     tol: float = 1e-14, max_iter: int = 1_000_000) -> np.ndarray:
    """Unique stationary distribution of the given kernel.

    ``method`` is one of

    * ``"gth"``: dense Grassmann-Taksar-Heyman elimination;
    * ``"krylov"``: GMRES with an incomplete-LU preconditioner on the balance
      equations of all states but the all-plus one;
    * ``"splu"``: sparse LU with one balance equation replaced by the
      normalisation (fill-in makes it slow beyond L=12);
    * ``"power"``: plain power iteration;
    * ``"auto"``: GTH up to L=10, Krylov up to L=18, power above.

    Raises :class:`ConvergenceError` if the residual max|pi P - pi| is not
    below 1e-12.
    """
    kind = KernelKind.parse(kind)
    if kind is KernelKind.ZERO_TEMPERATURE:
        raise ContractError("the zero-temperature chain is absorbing; its stationary measure is the all-plus point mass")
    if kind is KernelKind.DELTA_P:
        raise ContractError("delta-p is not a stochastic kernel")
    check_exact_size(params.L, MAX_STATIONARY_L)
    if method == "auto":
        method = "gth" if params.L <= GTH_MAX_L else "krylov" if params.L <= KRYLOV_MAX_L else "power"
    P = assemble(kind, params)
    if method == "gth":
        pi = gth_solve(P.toarray())
    elif method == "krylov":
        pi = _krylov_solve(P)
    elif method == "splu":
        pi = _splu_solve(P)
    elif method == "power":
        pi = _power_solve(P, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = stationary_residual(pi, P)
    if not res < RESIDUAL_TOL:
        raise ConvergenceError(f"{method} solve left residual {res:.3e} (L={params.L}, J={params.J})")
    log.debug("stationary %s L=%d J=%g method=%s residual=%.3e", kind.value, params.L, params.J, method, res)
    return pi


def stationary_residual(pi: np.ndarray, P: sp.spmatrix) -> float:
    """max_sigma |(pi P)(sigma) - pi(sigma)|."""
    return float(np.abs(P.T @ pi - pi).max())


# -- currents and reversibility -------------------------------------------------------


@dataclass(frozen=True)
class CurrentReport:
    """Stationary probability currents along every single-flip edge.

    ``edges[x, i-1]`` is K(x, x^(i)) = pi(x) P(x, x^(i)) - pi(x^(i)) P(x^(i), x);
    ``divergence[x]`` is the net inflow sum_y K(y, x), zero for a stationary pi.
    """

    L: int
    edges: np.ndarray
    divergence: np.ndarray

    def value(self, sigma: SpinConfig, tau: SpinConfig) -> float:
        diff = sigma.bits ^ tau.bits
        if diff == 0 or diff & (diff - 1):
            raise ValueError("currents are only defined between configurations one flip apart")
        return float(self.edges[sigma.bits, diff.bit_length() - 1])


def currents(pi: np.ndarray, kind, params: ModelParams) -> CurrentReport:
    W = flip_weight_table(kind, params)
    n, L = W.shape
    if pi.shape != (n,):
        raise ValueError(f"distribution has shape {pi.shape}, expected ({n},)")
    idx = np.arange(n)
    edges = np.empty_like(W)
    for k in range(L):
        nb = idx ^ (1 << k)
        edges[:, k] = pi * W[:, k] - pi[nb] * W[nb, k]
    # K(y, x) = -K(x, y)
    divergence = -edges.sum(axis=1)
    return CurrentReport(L, edges, divergence)


def _even_flip_sequences(L: int, n: int):
    for seq in itertools.product(range(L), repeat=n):
        if any(seq[t] == seq[t + 1] for t in range(n - 1)) or seq[0] == seq[-1]:
            continue
        counts = np.bincount(seq, minlength=L)
        if np.all(counts % 2 == 0):
            yield seq


def kolmogorov_check(kind, params: ModelParams, max_loop_len: int = 4,
                     rtol: float = 1e-10) -> list[SpinConfig] | None:
    """Search closed flip loops of length <= ``max_loop_len`` for a Kolmogorov violation.

    Returns the first loop [x0, x1, ..., x0] whose forward and backward
    transition products differ by more than ``rtol`` relative, or ``None``.
    """
    if max_loop_len < 3:
        raise ValueError("loops need at least 3 steps")
    W = flip_weight_table(kind, params)
    n_states, L = W.shape
    x0 = np.arange(n_states)
    for n in range(4, max_loop_len + 1, 2):
        for seq in _even_flip_sequences(L, n):
            x = x0.copy()
            fwd = np.ones(n_states)
            bwd = np.ones(n_states)
            for k in seq:
                y = x ^ (1 << k)
                fwd *= W[x, k]
                bwd *= W[y, k]
                x = y
            scale = np.maximum(fwd, bwd)
            bad = np.flatnonzero((scale > 0) & (np.abs(fwd - bwd) > rtol * scale))
            if bad.size:
                start = int(bad[0])
                loop = [SpinConfig(L, start)]
                cur = start
                for k in seq:
                    cur ^= 1 << k
                    loop.append(SpinConfig(L, cur))
                return loop
    return None


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Sum of absolute differences (no factor 1/2)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"distributions of different shapes {p.shape} and {q.shape}")
    return math.fsum(np.abs(p - q))


def write_distribution_csv(values: np.ndarray, fh, L: int | None = None) -> None:
    """Rows ``index,config,prob`` in index order."""
    values = np.asarray(values)
    if L is None:
        L = int(values.size).bit_length() - 1
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["index", "config", "prob"])
    for x, v in enumerate(values):
        writer.writerow([x, config_string(x, L), repr(float(v))])
