"""The periodic square lattice, initial patterns and per-round payoffs.

Cells are stored row-major (``index = row * L + col``) as ``uint8`` with
1 = cooperate, 0 = defect. Every cell has four neighbours: up, down, left,
right, wrapping around both axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import InvalidInputError, InvalidPatternError, InvalidSizeError
from .game import DEGREE, GameParams, Strategy

MIN_SIDE = 3

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


# -- initial patterns -------------------------------------------------------


@dataclass(frozen=True)
class Bernoulli:
    """Each cell cooperates independently with probability ``rho0``."""

    rho0: float

    def __post_init__(self):
        if not 0.0 <= self.rho0 <= 1.0:
            raise InvalidPatternError(f"Bernoulli density {self.rho0} outside [0, 1]")


@dataclass(frozen=True)
class CooperatorBlock:
    """All defectors except a centred ``width`` x ``width`` cooperator block."""

    width: int


@dataclass(frozen=True)
class DefectorBlock:
    """All cooperators except a centred ``width`` x ``width`` defector block."""

    width: int


Pattern = Union[Bernoulli, CooperatorBlock, DefectorBlock]


def block_bounds(side: int, width: int) -> tuple[int, int]:
    """Half-open [start, stop) of a block centred on ``side // 2``."""
    start = side // 2 - width // 2
    return start, start + width


def pattern_to_text(pattern: Pattern) -> str:
    if isinstance(pattern, Bernoulli):
        return f"bernoulli:{pattern.rho0!r}"
    if isinstance(pattern, CooperatorBlock):
        return f"cooperator-block:{pattern.width}"
    if isinstance(pattern, DefectorBlock):
        return f"defector-block:{pattern.width}"
    raise InvalidPatternError(f"unknown pattern {pattern!r}")


def pattern_from_text(text: str) -> Pattern:
    kind, _, arg = text.strip().partition(":")
    try:
        if kind == "bernoulli":
            return Bernoulli(float(arg))
        if kind == "cooperator-block":
            return CooperatorBlock(int(arg))
        if kind == "defector-block":
            return DefectorBlock(int(arg))
    except ValueError as exc:
        raise InvalidPatternError(f"bad pattern argument in {text!r}: {exc}") from None
    raise InvalidPatternError(f"unknown pattern {text!r}")


# -- lattice ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Lattice:
    side: int
    cells: np.ndarray

    def __post_init__(self):
        if self.side < MIN_SIDE:
            raise InvalidSizeError(f"lattice side must be >= {MIN_SIDE}, got {self.side}")
        cells = np.asarray(self.cells)
        if cells.shape == (self.side, self.side):
            cells = cells.reshape(-1)
        if cells.shape != (self.side * self.side,):
            raise InvalidSizeError(
                f"expected {self.side * self.side} cells for side {self.side}, got shape {cells.shape}"
            )
        if cells.dtype != np.uint8:
            if not np.isin(cells, (0, 1)).all():
                raise InvalidInputError("cells must be 0 (defect) or 1 (cooperate)")
            cells = cells.astype(np.uint8)
        elif cells.max(initial=0) > 1:
            raise InvalidInputError("cells must be 0 (defect) or 1 (cooperate)")
        cells = cells.copy()
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @property
    def size(self) -> int:
        return self.side * self.side

    @property
    def grid(self) -> np.ndarray:
        return self.cells.reshape(self.side, self.side)

    def __getitem__(self, index: int) -> Strategy:
        return Strategy(int(self.cells[index]))

    def __eq__(self, other):
        if not isinstance(other, Lattice):
            return NotImplemented
        return self.side == other.side and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.side, self.cells.tobytes()))

    @classmethod
    def uniform(cls, side: int, strategy: Strategy) -> "Lattice":
        return cls(side, np.full(side * side, int(strategy), dtype=np.uint8))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def new_lattice(side: int, pattern: Pattern, seed: SeedLike = None) -> Lattice:
    """Build the initial lattice for ``pattern``.

    Only :class:`Bernoulli` consumes randomness; passing a ``Generator``
    advances it by exactly ``side**2`` uniforms.
    """
    if side < MIN_SIDE:
        raise InvalidSizeError(f"lattice side must be >= {MIN_SIDE}, got {side}")
    if isinstance(pattern, Bernoulli):
        rng = as_generator(seed)
        cells = (rng.random(side * side) < pattern.rho0).astype(np.uint8)
        return Lattice(side, cells)
    if isinstance(pattern, (CooperatorBlock, DefectorBlock)):
        w = pattern.width
        if not 1 <= w <= side:
            raise InvalidPatternError(f"block width {w} must lie in [1, {side}]")
        inside, outside = (1, 0) if isinstance(pattern, CooperatorBlock) else (0, 1)
        grid = np.full((side, side), outside, dtype=np.uint8)
        lo, hi = block_bounds(side, w)
        grid[lo:hi, lo:hi] = inside
        return Lattice(side, grid)
    raise InvalidPatternError(f"unknown pattern {pattern!r}")


@lru_cache(maxsize=32)
def neighbor_table(side: int) -> np.ndarray:
    """``(side**2, 4)`` array of up, down, left, right neighbour indices."""
    if side < MIN_SIDE:
        raise InvalidSizeError(f"lattice side must be >= {MIN_SIDE}, got {side}")
    idx = np.arange(side * side).reshape(side, side)
    table = np.stack(
        [
            np.roll(idx, 1, axis=0).ravel(),
            np.roll(idx, -1, axis=0).ravel(),
            np.roll(idx, 1, axis=1).ravel(),
            np.roll(idx, -1, axis=1).ravel(),
        ],
        axis=1,
    )
    table.flags.writeable = False
    return table


def neighbors(lattice: Lattice, index: int) -> tuple[int, int, int, int]:
    index = int(index)
    if not 0 <= index < lattice.size:
        raise IndexError(f"cell index {index} out of range for {lattice.size} cells")
    L = lattice.side
    r, c = divmod(index, L)
    return (
        ((r - 1) % L) * L + c,
        ((r + 1) % L) * L + c,
        r * L + (c - 1) % L,
        r * L + (c + 1) % L,
    )


# -- payoffs ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PayoffField:
    returns: np.ndarray

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=float).copy()
        returns.flags.writeable = False
        object.__setattr__(self, "returns", returns)


def cooperating_neighbors(lattice: Lattice) -> np.ndarray:
    """Number of cooperating neighbours of every cell (0..4)."""
    g = lattice.grid.astype(np.int64)
    n = np.roll(g, 1, 0) + np.roll(g, -1, 0) + np.roll(g, 1, 1) + np.roll(g, -1, 1)
    return n.reshape(-1)


def payoffs_from_counts(cells: np.ndarray, n_coop: np.ndarray, b: float) -> np.ndarray:
    # a cooperator earns 1 per cooperating neighbour, a defector earns b
    return np.where(cells == 1, 1.0, float(b)) * n_coop


def compute_payoffs(lattice: Lattice, params: GameParams) -> PayoffField:
    """One round of play of every cell against its four neighbours."""
    return PayoffField(payoffs_from_counts(lattice.cells, cooperating_neighbors(lattice), params.b))


def cooperator_density(lattice: Lattice) -> float:
    return int(lattice.cells.sum(dtype=np.int64)) / lattice.size


def max_payoff(params: GameParams) -> float:
    return DEGREE * params.b
