"""Trajectory simulation of the single-flip chains.

Every step picks a site uniformly and flips it with the kernel's acceptance
probability (L times the off-diagonal weight), so one simulated step is one
step of the discrete-time chain.  Random numbers come from counter-based
Philox streams keyed by ``(seed, stream)``; replica ``r`` of a run uses stream
``r``, so a replica's trajectory does not depend on how many others run or on
the thread that runs it.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import MAX_MC_L, Boundary, ModelParams, SpinConfig
from .errors import ContractError, ResourceError
from .kernels import KernelKind

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**10
CHUNK = 1 << 16
MAX_HISTOGRAM_L = 14

_CODES = {KernelKind.IRREVERSIBLE: 0, KernelKind.GLAUBER: 1, KernelKind.ZERO_TEMPERATURE: 2}


@dataclass(frozen=True)
class RngSeed:
    """A 64-bit seed plus a stream id; equal pairs give equal random streams."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.stream < 0:
            raise ValueError(f"stream id must be non-negative, got {self.stream}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSeed):
        return rng.generator()
    return RngSeed(int(rng)).generator()


def _setup(kind, params: ModelParams):
    kind = KernelKind.parse(kind)
    if kind not in _CODES:
        raise ContractError(f"{kind.value} is not a stochastic kernel and cannot be simulated")
    if kind is KernelKind.ZERO_TEMPERATURE and params.boundary is not Boundary.PLUS:
        raise ContractError("the zero-temperature kernel is defined for the plus boundary only")
    if params.L > MAX_MC_L:
        raise ResourceError(f"L={params.L} exceeds the Monte Carlo cap {MAX_MC_L}")
    q, eps = params.half_eps, params.eps
    if kind is KernelKind.GLAUBER:
        # index s*(left+right)+2
        acc = np.array([1.0, 1.0, 1.0, q, eps])
    elif kind is KernelKind.IRREVERSIBLE:
        # index s*left+1
        acc = np.array([1.0, q, eps, 0.0, 0.0])
    else:
        acc = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    return kind, _CODES[kind], acc, params.boundary.left_spin


@numba.njit(cache=True, nogil=True)
def _advance(s, code, acc, bnd, sites, u, n_minus, stop_at_all_minus):
    # returns the number of uniforms consumed and the updated minus count
    L = s.size
    for t in range(sites.size):
        i = sites[t]
        left = s[i - 1] if i > 0 else bnd
        if code == 1:
            right = s[i + 1] if i < L - 1 else bnd
            p = acc[s[i] * (left + right) + 2]
        else:
            p = acc[s[i] * left + 1]
        if u[t] < p:
            s[i] = -s[i]
            n_minus -= s[i]
            if stop_at_all_minus and n_minus == L:
                return t + 1, n_minus
    return sites.size, n_minus


@numba.njit(cache=True, nogil=True)
def _advance_histogram(s, code, acc, bnd, sites, u, idx, thinning, phase, counts, record):
    # idx is the bit index of s, kept in step with it; record only after burn-in
    L = s.size
    for t in range(sites.size):
        i = sites[t]
        left = s[i - 1] if i > 0 else bnd
        if code == 1:
            right = s[i + 1] if i < L - 1 else bnd
            p = acc[s[i] * (left + right) + 2]
        else:
            p = acc[s[i] * left + 1]
        if u[t] < p:
            s[i] = -s[i]
            idx ^= 1 << i
        phase += 1
        if phase == thinning:
            phase = 0
            if record:
                counts[idx] += 1
    return idx, phase


def _draw(gen: np.random.Generator, L: int, n: int):
    return gen.integers(0, L, size=n, dtype=np.int64), gen.random(n)


def step(kind, params: ModelParams, sigma: SpinConfig, rng) -> SpinConfig:
    """One step of the chain from ``sigma``.

    A site is drawn uniformly and flipped with probability L * P(sigma, sigma^(i)).
    """
    if sigma.length != params.L:
        raise ValueError(f"configuration has length {sigma.length}, parameters say L={params.L}")
    _, code, acc, bnd = _setup(kind, params)
    gen = _as_generator(rng)
    sites, u = _draw(gen, params.L, 1)
    s = sigma.spins().astype(np.int64)
    n_minus = int((s < 0).sum())
    _advance(s, code, acc, bnd, sites, u, n_minus, False)
    bits = int(((s > 0).astype(np.int64) << np.arange(params.L)).sum())
    return SpinConfig(params.L, bits)


def _hitting_time(code, acc, bnd, L, gen, budget):
    s = np.ones(L, dtype=np.int64)
    n_minus = 0
    t = 0
    while t < budget:
        n = int(min(CHUNK, budget - t))
        sites, u = _draw(gen, L, n)
        used, n_minus = _advance(s, code, acc, bnd, sites, u, n_minus, True)
        t += used
        if n_minus == L:
            return t, False
    return t, True


@dataclass(frozen=True)
class TunnelingStats:
    """Hitting times of the all-minus state from the all-plus state.

    ``samples[r]`` is the step count of replica ``r``; if ``censored[r]`` the
    step budget ran out first and the sample is a lower bound.  Summary
    statistics are over all samples, censored ones included at their budget
    value.
    """

    L: int
    J: float
    kind: str
    samples: np.ndarray
    censored: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.samples.size)

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def var(self) -> float:
        return float(self.samples.var(ddof=1)) if self.n > 1 else 0.0

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.959963984540054 * math.sqrt(self.var / self.n)
        return self.mean - half, self.mean + half

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())


def _n_workers(replicas: int) -> int:
    env = os.environ.get("SPINCHAIN_THREADS")
    n = int(env) if env else 1
    if n < 1:
        raise ValueError(f"SPINCHAIN_THREADS must be positive, got {env}")
    return min(n, replicas)


def tunneling_time(kind, params: ModelParams, replicas: int, seed: int = 0,
                   budget: int = DEFAULT_BUDGET) -> TunnelingStats:
    """Sample the first hitting time of all-minus starting from all-plus.

    Parameters
    ----------
    kind : KernelKind or str
        Irreversible or Glauber.
    params : ModelParams
        Chain length, coupling and boundary.  With the plus boundary the
        all-minus state is exponentially hard to reach; the scaling in L is
        measured with the empty boundary.
    replicas : int
        Number of independent samples; replica ``r`` uses stream ``r``.
    seed : int
        64-bit seed shared by all replicas.
    budget : int
        Maximum number of steps per replica.  Replicas that exhaust it are
        flagged as censored and reported at the budget value.
    """
    kind, code, acc, bnd = _setup(kind, params)
    if kind is KernelKind.ZERO_TEMPERATURE:
        raise ContractError("the zero-temperature chain never leaves the all-plus state")
    if replicas < 1:
        raise ValueError(f"need at least one replica, got {replicas}")
    if replicas < 30:
        log.warning("only %d replicas; confidence intervals will be rough", replicas)
    L = params.L

    def run(r):
        return _hitting_time(code, acc, bnd, L, RngSeed(seed, r).generator(), budget)

    workers = _n_workers(replicas)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(run, range(replicas)))
    else:
        out = [run(r) for r in range(replicas)]
    samples = np.array([t for t, _ in out], dtype=np.int64)
    censored = np.array([c for _, c in out], dtype=bool)
    if censored.any():
        log.warning("%d of %d replicas hit the step budget %d", censored.sum(), replicas, budget)
    return TunnelingStats(L, params.J, kind.value, samples, censored)


def empirical_stationary(kind, params: ModelParams, burn_in: int, n_samples: int,
                         thinning: int = 1, rng=0, start: SpinConfig | None = None) -> np.ndarray:
    """Occupation histogram of one long trajectory.

    After ``burn_in`` steps the state is recorded every ``thinning`` steps
    until ``n_samples`` records are taken.  The trajectory starts from
    ``start`` (all plus by default).
    """
    _, code, acc, bnd = _setup(kind, params)
    L = params.L
    if L > MAX_HISTOGRAM_L:
        raise ResourceError(f"dense histogram needs L <= {MAX_HISTOGRAM_L}, got {L}")
    if thinning < 1 or n_samples < 1 or burn_in < 0:
        raise ValueError("need thinning >= 1, n_samples >= 1 and burn_in >= 0")
    gen = _as_generator(rng)
    start = SpinConfig.all_plus(L) if start is None else start
    s = start.spins().astype(np.int64)
    idx = start.bits
    counts = np.zeros(1 << L, dtype=np.int64)

    phase = 0
    t = 0
    while t < burn_in:
        n = min(CHUNK, burn_in - t)
        sites, u = _draw(gen, L, n)
        idx, _ = _advance_histogram(s, code, acc, bnd, sites, u, idx, 1, 0, counts, False)
        t += n
    total = n_samples * thinning
    t = 0
    while t < total:
        n = min(CHUNK, total - t)
        sites, u = _draw(gen, L, n)
        idx, phase = _advance_histogram(s, code, acc, bnd, sites, u, idx, thinning, phase, counts, True)
        t += n
    return counts / counts.sum()


def write_tunneling_csv(stats: TunnelingStats, fh) -> None:
    """Per-replica rows ``replica,steps`` followed by the summary block."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["replica", "steps"])
    for r, t in enumerate(stats.samples):
        writer.writerow([r, int(t)])
    lo, hi = stats.ci95
    writer.writerow(["L", "J", "kind", "mean", "var", "ci_lo", "ci_hi", "censored"])
    writer.writerow([stats.L, repr(stats.J), stats.kind, repr(stats.mean), repr(stats.var),
                     repr(lo), repr(hi), stats.n_censored])


def fit_exponent(Ls, means) -> float:
    """Least-squares slope of log(mean) against log(L)."""
    slope, _ = np.polyfit(np.log(np.asarray(Ls, float)), np.log(np.asarray(means, float)), 1)
    return float(slope)
