"""Run metrics: completion time, delay profiles, failed pieces, occupancy.

All metrics are pure functions of a :class:`~gossipsim.engine.RunResult`;
nothing here touches the PRNG or mutates the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import RunResult

__all__ = [
    "completion_time",
    "DelayProfile",
    "delay_profile",
    "failed_pieces",
    "pieces_reached",
    "OccupancySeries",
    "occupancy",
    "splitting_speedup",
]

# A piece counts as failed when it reaches fewer than n * e / 5 users within
# the post-release window; e/5 is the spread fraction a healthy piece clears
# with room to spare, making the classifier insensitive to the exact cutoff.
FAILURE_FRACTION = math.e / 5


def completion_time(result: RunResult) -> int | None:
    """Slot in which the last user finished, or None if the run hit its cap."""
    return result.completion_slot


@dataclass
class DelayProfile:
    """Cumulative per-pair delay distribution.

    ``at(d)`` is the fraction of all n*k (user, piece) pairs whose piece
    arrived within d slots of the piece first becoming available anywhere —
    pairs endowed at slot 0 count as delay 0, and pairs never served
    contribute 0 at every d.
    """

    cumulative: np.ndarray  # cumulative[d] = D(d); final entry = limit

    def at(self, d: int) -> float:
        if d < 0:
            return 0.0
        if d >= len(self.cumulative):
            return self.limit
        return float(self.cumulative[d])

    @property
    def limit(self) -> float:
        """D(d) for d beyond the last arrival: the fraction of pairs served."""
        return float(self.cumulative[-1]) if len(self.cumulative) else 0.0

    @property
    def max_delay(self) -> int:
        return len(self.cumulative) - 1


def delay_profile(result: RunResult) -> DelayProfile:
    """Per-pair delays measured from each piece's emergence slot.

    A piece's emergence is the first slot any copy existed outside the
    endowed holders — slot 0 for seeded starts, the first delivery slot for
    a single source.  A pair's delay is its arrival slot minus its piece's
    emergence, clamped to 0 for the endowed pairs themselves.
    """
    arrivals = result.arrivals
    n, k = arrivals.shape
    emergence = np.array(
        [0 if e is None else e for e in result.emergence], dtype=np.int64
    )
    served = arrivals >= 0
    delays = arrivals.astype(np.int64) - emergence[np.newaxis, :]
    delays[arrivals == 0] = 0  # endowed pairs have delay 0 by definition
    delays = delays[served]
    if delays.size == 0:
        return DelayProfile(np.zeros(1))
    counts = np.bincount(delays)
    return DelayProfile(np.cumsum(counts) / (n * k))


def failed_pieces(result: RunResult, epsilon: float | None = None) -> list[int]:
    """Pieces that never spread: released but stuck below the failure bar.

    A piece fails when fewer than ``ceil(n * e / 5)`` users hold it within
    ``floor(2 (1 + epsilon) log2 n)`` slots of its release by the source;
    a piece the source never released at all also counts as failed.  Only
    defined for runs whose protocol releases pieces on a schedule.
    """
    if result.release_slots is None:
        raise ValueError(
            "failed pieces are only defined for source-scheduled protocols "
            f"(run used {result.config.protocol!r})"
        )
    if epsilon is None:
        epsilon = result.config.epsilon
    arrivals = result.arrivals
    n, k = arrivals.shape
    need = math.ceil(n * FAILURE_FRACTION)
    window = math.floor(2.0 * (1.0 + epsilon) * math.log2(n))
    failed = []
    for p in range(1, k + 1):
        release = result.release_slots[p - 1]
        if release is None:
            failed.append(p)
            continue
        col = arrivals[:, p - 1]
        holders = int(((col >= 0) & (col <= release + window)).sum())
        if holders < need:
            failed.append(p)
    return failed


def pieces_reached(result: RunResult, fraction: float, window: float) -> float:
    """Fraction of pieces reaching ``ceil(fraction * n)`` users within
    ``floor(window)`` slots of their release; unreleased pieces count as
    not reaching.  Only defined for source-scheduled protocols."""
    if result.release_slots is None:
        raise ValueError(
            "reach is only defined for source-scheduled protocols "
            f"(run used {result.config.protocol!r})"
        )
    arrivals = result.arrivals
    n, k = arrivals.shape
    need = math.ceil(fraction * n)
    span = math.floor(window)
    reached = 0
    for p in range(1, k + 1):
        release = result.release_slots[p - 1]
        if release is None:
            continue
        col = arrivals[:, p - 1]
        if int(((col >= 0) & (col <= release + span)).sum()) >= need:
            reached += 1
    return reached / k


@dataclass
class OccupancySeries:
    """Number of holders of one piece at the end of each slot."""

    piece: int
    counts: np.ndarray  # counts[t] = holders at end of slot t; t = 0..slots

    def at(self, t: int) -> int:
        if t < 0:
            return 0
        if t >= len(self.counts):
            return int(self.counts[-1])
        return int(self.counts[t])


def occupancy(result: RunResult, piece: int) -> OccupancySeries:
    """Holder count of `piece` after each slot, from slot 0 to the run's end."""
    arrivals = result.arrivals
    n, k = arrivals.shape
    if not 1 <= piece <= k:
        raise ValueError(f"piece must be in [1, {k}], got {piece}")
    col = arrivals[:, piece - 1]
    col = col[col >= 0]
    counts = np.bincount(col, minlength=result.slots + 1)
    return OccupancySeries(piece, np.cumsum(counts))


def splitting_speedup(k: int, n: int) -> float:
    """Ideal-case speedup from splitting content into k pieces.

    Whole-content gossip needs ~log2 n slots; pipelined pieces need
    ~k + log2 n slots for content k times larger, so the ratio is
    k log2 n / (k + log2 n) — approaching log2 n as k grows.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    log_n = math.log2(n)
    return k * log_n / (k + log_n)
