"""Single-spin-flip transition kernels on the 2^L configurations.

Four kernels are provided:

* ``IRREVERSIBLE`` flips site i with probability (1/L) exp(-2J(sigma_i sigma_{i-1} + 1)),
  i.e. only the left neighbour matters;
* ``GLAUBER`` is the reversible Metropolis-type chain (1/L) exp(-[H(sigma^(i)) - H(sigma)]_+);
* ``ZERO_TEMPERATURE`` is the J -> infinity limit of the irreversible chain with the
  plus boundary, in which the all-plus state is absorbing;
* ``DELTA_P`` is the first-order correction, so that for the plus boundary
  P_irreversible = P_zero_temperature + exp(-4J) * DELTA_P.

Weights are built from exp(-2J) and exp(-4J), computed once per call.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .core import (
    MAX_EXACT_L,
    WARN_EXACT_L,
    Boundary,
    ModelParams,
    SpinConfig,
    check_exact_size,
    left_antiparallel_counts,
    left_walls_of,
)
from .errors import ContractError

log = logging.getLogger(__name__)


class KernelKind(enum.Enum):
    IRREVERSIBLE = "irreversible"
    GLAUBER = "glauber"
    ZERO_TEMPERATURE = "zero-temperature"
    DELTA_P = "delta-p"

    @classmethod
    def parse(cls, value) -> "KernelKind":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"zero": "zero-temperature", "zerotemperature": "zero-temperature",
                   "deltap": "delta-p", "delta": "delta-p", "reversible": "glauber"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown kernel kind {value!r} (choose from {names})") from None

    @property
    def row_sum(self) -> float:
        return 0.0 if self is KernelKind.DELTA_P else 1.0


@dataclass(frozen=True)
class KernelRow:
    source: SpinConfig
    targets: tuple[SpinConfig, ...]
    weights: tuple[float, ...]
    diagonal: float

    def total(self) -> float:
        return self.diagonal + sum(self.weights)


def _require_plus(kind: KernelKind, params: ModelParams) -> None:
    if kind in (KernelKind.ZERO_TEMPERATURE, KernelKind.DELTA_P) and params.boundary is not Boundary.PLUS:
        raise ContractError(f"the {kind.value} kernel is only defined for the plus boundary")


def _spin(idx: np.ndarray, k: int) -> np.ndarray:
    return 2 * ((idx >> k) & 1) - 1


def site_weights(kind, params: ModelParams, idx: np.ndarray, site: int) -> np.ndarray:
    """Off-diagonal weight P(sigma, sigma^(site)) for every index in ``idx``.

    ``site`` is 1-based.  The result is a float array shaped like ``idx``.
    """
    kind = KernelKind.parse(kind)
    _require_plus(kind, params)
    L = params.L
    k = site - 1
    idx = np.asarray(idx, dtype=np.int64)
    s = _spin(idx, k)
    left = _spin(idx, k - 1) if k > 0 else params.boundary.left_spin
    q, eps = params.half_eps, params.eps

    if kind is KernelKind.GLAUBER:
        right = _spin(idx, k + 1) if k < L - 1 else params.boundary.left_spin
        # exp(-[dH]_+) with dH = 2J * s * (left + right)
        table = np.array([1.0, 1.0, 1.0, q, eps]) / L
        return table[s * (left + right) + 2]

    a = s * left  # -1 antiparallel, +1 parallel, 0 at an empty boundary
    if kind is KernelKind.IRREVERSIBLE:
        table = np.array([1.0, q, eps]) / L
    elif kind is KernelKind.ZERO_TEMPERATURE:
        table = np.array([1.0, 0.0, 0.0]) / L
    else:
        table = np.array([0.0, 0.0, 1.0]) / L
    return table[a + 1]


def diagonal_weights(kind, params: ModelParams, idx: np.ndarray, off_total: np.ndarray) -> np.ndarray:
    kind = KernelKind.parse(kind)
    if kind is KernelKind.DELTA_P:
        return -1.0 + left_walls_of(idx, params.L) / params.L
    return 1.0 - off_total


def row(kind, params: ModelParams, sigma: SpinConfig) -> KernelRow:
    """Transition row of ``sigma`` for the given kernel."""
    kind = KernelKind.parse(kind)
    if sigma.length != params.L:
        raise ValueError(f"configuration of length {sigma.length} does not match L={params.L}")
    _require_plus(kind, params)
    idx = np.array([sigma.bits], dtype=np.int64)
    targets, weights = [], []
    total = 0.0
    for i in range(1, params.L + 1):
        w = float(site_weights(kind, params, idx, i)[0])
        total += w
        if w != 0.0:
            targets.append(SpinConfig(params.L, sigma.bits ^ (1 << (i - 1))))
            weights.append(w)
    diag = float(diagonal_weights(kind, params, idx, np.array([total]))[0])
    return KernelRow(sigma, tuple(targets), tuple(weights), diag)


def iter_rows(kind, params: ModelParams) -> Iterator[KernelRow]:
    """Rows in configuration-index order, generated one at a time."""
    for x in range(params.n_states):
        yield row(kind, params, SpinConfig(params.L, x))


def hamiltonian(params: ModelParams, sigma: SpinConfig) -> float:
    """Ising energy -J sum sigma_i sigma_{i-1}, with the two boundary bonds for the plus boundary."""
    s = sigma.spins().astype(np.int64)
    bonds = int(np.sum(s[1:] * s[:-1]))
    if params.boundary is Boundary.PLUS:
        bonds += int(s[0]) + int(s[-1])
    return -params.J * bonds


def flip_weight_table(kind, params: ModelParams) -> np.ndarray:
    """Array W of shape (2^L, L) with W[x, i-1] = P(x, x^(i))."""
    kind = KernelKind.parse(kind)
    check_exact_size(params.L)
    idx = np.arange(params.n_states, dtype=np.int64)
    return np.stack([site_weights(kind, params, idx, i) for i in range(1, params.L + 1)], axis=1)


def diagonal(kind, params: ModelParams, table: np.ndarray | None = None) -> np.ndarray:
    kind = KernelKind.parse(kind)
    if kind is KernelKind.DELTA_P:
        _require_plus(kind, params)
        return -1.0 + left_antiparallel_counts(params.L) / params.L
    if table is None:
        table = flip_weight_table(kind, params)
    return 1.0 - table.sum(axis=1)


def assemble(kind, params: ModelParams) -> sp.csr_matrix:
    """The full 2^L x 2^L kernel as a CSR matrix, rows in index order."""
    kind = KernelKind.parse(kind)
    L = params.L
    check_exact_size(L, MAX_EXACT_L)
    if L > WARN_EXACT_L:
        log.warning("assembling a %d x %d kernel; this needs a lot of memory", 1 << L, 1 << L)
    _require_plus(kind, params)
    n = params.n_states
    idx = np.arange(n, dtype=np.int64)
    table = flip_weight_table(kind, params)
    rows = [idx]
    cols = [idx]
    vals = [diagonal(kind, params, table)]
    for k in range(L):
        w = table[:, k]
        keep = w != 0.0
        rows.append(idx[keep])
        cols.append(idx[keep] ^ (1 << k))
        vals.append(w[keep])
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


# -- plain-text triplet dump -----------------------------------------------------------


def dump_triplets(kind, params: ModelParams, fh) -> None:
    """Write the kernel as ``src dst weight`` lines after a ``# L=.. J=.. bc=.. kind=..`` header."""
    kind = KernelKind.parse(kind)
    mat = assemble(kind, params).tocoo()
    fh.write(f"# L={params.L} J={params.J!r} bc={params.boundary.value} kind={kind.value}\n")
    order = np.lexsort((mat.col, mat.row))
    for r, c, v in zip(mat.row[order], mat.col[order], mat.data[order]):
        fh.write(f"{r} {c} {float(v)!r}\n")


def load_triplets(fh) -> tuple[dict, sp.csr_matrix]:
    header = fh.readline()
    if not header.startswith("#"):
        raise ValueError("missing '# L=... J=... bc=... kind=...' header")
    meta = dict(item.split("=", 1) for item in header[1:].split())
    n = 1 << int(meta["L"])
    rows, cols, vals = [], [], []
    for line in fh:
        if not line.strip():
            continue
        r, c, v = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(float(v))
    return meta, sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
