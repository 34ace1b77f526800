"""Compiled trajectory runner.

A cell's next-round law depends only on its own state code and its four
neighbours' codes, where ``code = 5 * strategy + cooperating_neighbours``.
The runner looks that law up in a table of 10**5 entries built once per
``GameParams`` from :func:`rules.cooperation_probability`, so the compiled
loop carries no rule logic of its own and stays bit-compatible with
:func:`rules.step`: both draw one uniform per cell per round in row-major
order and cooperate iff ``u < p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .game import GameParams
from .lattice import Lattice, payoffs_from_counts
from .rules import cooperation_probability

N_CODES = 10


@lru_cache(maxsize=64)
def transition_table(params: GameParams) -> np.ndarray:
    codes = np.arange(N_CODES)
    grids = np.meshgrid(*([codes] * 5), indexing="ij")
    strategy = codes // 5
    payoff = payoffs_from_counts(strategy, codes % 5, params.b)
    own, nbrs = grids[0], np.stack(grids[1:], axis=-1)
    table = cooperation_probability(strategy[own], payoff[own], strategy[nbrs], payoff[nbrs], params)
    table = np.ascontiguousarray(table.reshape(-1), dtype=np.float64)
    table.flags.writeable = False
    return table


@numba.njit(nogil=True, cache=True)
def _run(cells, table, rounds, rng, snap_rounds, snaps):
    L = cells.shape[0]
    n = L * L
    cur = cells.copy()
    nxt = np.empty_like(cur)
    code = np.empty((L, L), np.int64)
    counts = np.empty(rounds + 1, np.int64)
    counts[0] = cur.sum()
    si = 0
    while si < snap_rounds.size and snap_rounds[si] == 0:
        snaps[si] = cur
        si += 1
    t = 0
    while t < rounds:
        if counts[t] == 0 or counts[t] == n:
            # uniform lattices are fixed points of every rule
            for k in range(t + 1, rounds + 1):
                counts[k] = counts[t]
            while si < snap_rounds.size:
                snaps[si] = cur
                si += 1
            break
        for r in range(L):
            ru = r - 1 if r > 0 else L - 1
            rd = r + 1 if r < L - 1 else 0
            for c in range(L):
                cl = c - 1 if c > 0 else L - 1
                cr = c + 1 if c < L - 1 else 0
                code[r, c] = 5 * cur[r, c] + cur[ru, c] + cur[rd, c] + cur[r, cl] + cur[r, cr]
        total = 0
        for r in range(L):
            ru = r - 1 if r > 0 else L - 1
            rd = r + 1 if r < L - 1 else 0
            for c in range(L):
                cl = c - 1 if c > 0 else L - 1
                cr = c + 1 if c < L - 1 else 0
                key = (((code[r, c] * 10 + code[ru, c]) * 10 + code[rd, c]) * 10 + code[r, cl]) * 10 + code[r, cr]
                v = 1 if rng.random() < table[key] else 0
                nxt[r, c] = v
                total += v
        cur, nxt = nxt, cur
        t += 1
        counts[t] = total
        while si < snap_rounds.size and snap_rounds[si] == t:
            snaps[si] = cur
            si += 1
    return cur, counts


@dataclass(frozen=True, eq=False)
class Trajectory:
    final: Lattice
    cooperators: np.ndarray  # per-round cooperator counts, length rounds + 1
    snapshots: dict[int, Lattice]

    @property
    def density(self) -> np.ndarray:
        return self.cooperators / self.final.size


def simulate(
    lattice: Lattice,
    params: GameParams,
    rounds: int,
    rng: np.random.Generator,
    snapshot_rounds=(),
) -> Trajectory:
    """Run ``rounds`` synchronous steps, equivalent to repeated :func:`rules.step`.

    Once the lattice turns uniform it is frozen and no further uniforms are
    drawn.
    """
    if rounds < 0:
        raise ValueError(f"rounds must be non-negative, got {rounds}")
    wanted = sorted({int(t) for t in snapshot_rounds if 0 <= int(t) <= rounds})
    snap_rounds = np.asarray(wanted, dtype=np.int64)
    L = lattice.side
    snaps = np.zeros((len(wanted), L, L), dtype=np.uint8)
    final, counts = _run(lattice.grid.copy(), transition_table(params), int(rounds), rng, snap_rounds, snaps)
    return Trajectory(
        final=Lattice(L, final),
        cooperators=counts,
        snapshots={t: Lattice(L, snaps[i]) for i, t in enumerate(wanted)},
    )
