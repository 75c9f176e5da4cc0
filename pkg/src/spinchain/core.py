"""Spin configurations of the open chain [1, L] and their bookkeeping.

A configuration is stored as an integer whose bit ``i - 1`` is set when the
spin at site ``i`` is ``+1``.  The same integer is the row/column index used
by every dense vector and sparse matrix in the package, so the all-plus state
has index ``2**L - 1`` and the all-minus state has index ``0``.

String form lists sites left to right: ``"+--+"`` is sigma_1 = +1,
sigma_2 = sigma_3 = -1, sigma_4 = +1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ResourceError

MAX_EXACT_L = 30
WARN_EXACT_L = 22
MAX_MC_L = 2**20


class Boundary(enum.Enum):
    """Left/right boundary spins of the chain.

    ``EMPTY`` sets sigma_0 = sigma_{L+1} = 0; ``PLUS`` sets both to +1.
    """

    EMPTY = "empty"
    PLUS = "plus"

    @property
    def left_spin(self) -> int:
        return 1 if self is Boundary.PLUS else 0

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r} (use 'empty' or 'plus')") from None


@dataclass(frozen=True)
class SpinConfig:
    length: int
    bits: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"chain length must be positive, got {self.length}")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError(f"bits {self.bits:#x} do not fit a chain of length {self.length}")

    @classmethod
    def from_string(cls, s: str) -> "SpinConfig":
        s = s.replace("−", "-")
        if not s or set(s) - {"+", "-"}:
            raise ValueError(f"configuration must be a non-empty string of '+'/'-', got {s!r}")
        bits = sum(1 << k for k, c in enumerate(s) if c == "+")
        return cls(len(s), bits)

    @classmethod
    def all_plus(cls, L: int) -> "SpinConfig":
        return cls(L, (1 << L) - 1)

    @classmethod
    def all_minus(cls, L: int) -> "SpinConfig":
        return cls(L, 0)

    @property
    def index(self) -> int:
        return self.bits

    def spin(self, i: int) -> int:
        """Spin at site ``i`` (1-based)."""
        _check_site(i, self.length)
        return 1 if (self.bits >> (i - 1)) & 1 else -1

    def spins(self) -> np.ndarray:
        return np.where((self.bits >> np.arange(self.length)) & 1, 1, -1).astype(np.int8)

    def __str__(self) -> str:
        return config_string(self.bits, self.length)


def config_string(index: int, L: int) -> str:
    return "".join("+" if (index >> k) & 1 else "-" for k in range(L))


def _check_site(i: int, L: int) -> None:
    if not 1 <= i <= L:
        raise ValueError(f"site {i} outside [1, {L}]")


@dataclass(frozen=True)
class ModelParams:
    """Chain length, coupling and boundary condition.

    ``eps`` is the low-temperature parameter exp(-4J).
    """

    L: int
    J: float
    boundary: Boundary = Boundary.PLUS

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be positive, got {self.L}")
        if not self.J >= 0 or math.isinf(self.J):
            raise ValueError(f"J must be a finite nonnegative number, got {self.J}")
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))

    @classmethod
    def chilled(cls, L: int, c: float, boundary=Boundary.PLUS) -> "ModelParams":
        """Parameters of the chilled regime J = c log L."""
        return cls(L, c * math.log(L), boundary)

    @property
    def eps(self) -> float:
        return math.exp(-4.0 * self.J)

    @property
    def half_eps(self) -> float:
        """exp(-2J), the square root of ``eps``."""
        return math.exp(-2.0 * self.J)

    @property
    def n_states(self) -> int:
        return 1 << self.L


def check_exact_size(L: int, cap: int = MAX_EXACT_L) -> None:
    if L > cap:
        raise ResourceError(f"L={L} exceeds the cap L<={cap} for exhaustive 2^L computations")


# -- single-configuration operations -------------------------------------------------


def flip(sigma: SpinConfig, i: int) -> SpinConfig:
    """Return sigma^(i), the configuration with the spin at site ``i`` reversed."""
    _check_site(i, sigma.length)
    return SpinConfig(sigma.length, sigma.bits ^ (1 << (i - 1)))


def _left_walls(bits: int, L: int) -> int:
    # bit k set iff sigma_{k+1} != sigma_k, with sigma_0 = +1
    return (bits ^ ((bits << 1) | 1)) & ((1 << L) - 1)


def left_antiparallel_count(sigma: SpinConfig, boundary=Boundary.PLUS) -> int:
    """Number of sites i in [1, L] with sigma_i sigma_{i-1} = -1, where sigma_0 = +1."""
    if Boundary.parse(boundary) is not Boundary.PLUS:
        raise ContractError(
            "left_antiparallel_count needs the plus boundary (sigma_0 = +1); "
            "use interior_pair_count for the empty boundary"
        )
    return _left_walls(sigma.bits, sigma.length).bit_count()


def interior_pair_count(sigma: SpinConfig) -> int:
    """Number of bonds {i, i+1} inside the chain carrying a domain wall."""
    L = sigma.length
    return ((sigma.bits ^ (sigma.bits >> 1)) & ((1 << (L - 1)) - 1)).bit_count()


def minus_count(sigma: SpinConfig) -> int:
    return sigma.length - sigma.bits.bit_count()


# -- special states ------------------------------------------------------------------


@dataclass(frozen=True)
class AllPlus:
    pass


@dataclass(frozen=True)
class Interval:
    """Single block of ``m`` minus spins on sites i..i+m-1, not touching site L."""

    i: int
    m: int


@dataclass(frozen=True)
class Ray:
    """Minus spins exactly on sites i..L."""

    i: int


@dataclass(frozen=True)
class Other:
    pass


StateClass = AllPlus | Interval | Ray | Other


def classify(sigma: SpinConfig) -> StateClass:
    L = sigma.length
    minus = ((1 << L) - 1) ^ sigma.bits
    if minus == 0:
        return AllPlus()
    low = (minus & -minus).bit_length()  # first minus site
    block = minus >> (low - 1)
    if block & (block + 1):
        return Other()  # minuses not contiguous
    m = block.bit_length()
    if low + m - 1 == L:
        return Ray(low)
    return Interval(low, m)


def interval_config(L: int, i: int, m: int) -> SpinConfig:
    if not (1 <= i and m >= 1 and i + m <= L + 1):
        raise ValueError(f"block (i={i}; m={m}) does not fit a chain of length {L}")
    return SpinConfig(L, ((1 << L) - 1) ^ (((1 << m) - 1) << (i - 1)))


def ray_config(L: int, i: int) -> SpinConfig:
    return interval_config(L, i, L + 1 - i)


# -- whole state space ---------------------------------------------------------------


def spin_table(L: int) -> np.ndarray:
    """All 2^L configurations as an int8 array of shape (2^L, L), row = index."""
    check_exact_size(L)
    idx = np.arange(1 << L, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(L)) & 1
    return (2 * bits - 1).astype(np.int8)


def left_walls_of(idx: np.ndarray, L: int) -> np.ndarray:
    """Vectorised ``left_antiparallel_count`` over an array of indices."""
    idx = np.asarray(idx, dtype=np.int64)
    return np.bitwise_count((idx ^ ((idx << 1) | 1)) & ((1 << L) - 1)).astype(np.int64)


def left_antiparallel_counts(L: int) -> np.ndarray:
    check_exact_size(L)
    return left_walls_of(np.arange(1 << L, dtype=np.int64), L)


def interior_pair_counts(L: int) -> np.ndarray:
    check_exact_size(L)
    idx = np.arange(1 << L, dtype=np.int64)
    return np.bitwise_count((idx ^ (idx >> 1)) & ((1 << (L - 1)) - 1)).astype(np.int64)


def plus_wall_counts(L: int) -> np.ndarray:
    """Broken bonds including both boundary bonds to sigma_0 = sigma_{L+1} = +1."""
    check_exact_size(L)
    idx = np.arange(1 << L, dtype=np.int64)
    right_minus = 1 - ((idx >> (L - 1)) & 1)
    return left_antiparallel_counts(L) + right_minus


def minus_counts(L: int) -> np.ndarray:
    check_exact_size(L)
    idx = np.arange(1 << L, dtype=np.int64)
    return L - np.bitwise_count(idx).astype(np.int64)
