"""Piece-selection policies.

Each protocol decides, per user and slot, a single action: push a piece to
the sampled contact, pull (request) a piece from it, or stay idle.  The
selection rules are pure functions over the deciding user's knowledge at the
start of the slot; the :class:`Protocol` classes bind them to engine state.
"""

from __future__ import annotations

from random import Random

from .bitset import full_mask, highest_piece, lowest_piece, random_piece
from .config import (
    ADVOCATE,
    INTERLEAVE,
    PRIORITY_PUSH,
    RANDOM_PULL,
    RANDOM_PUSH,
    SEQUENTIAL_PULL,
    SimulationConfig,
)

__all__ = [
    "PUSH",
    "PULL",
    "random_pull_select",
    "sequential_pull_select",
    "random_push_select",
    "priority_push_select",
    "interleave_action",
    "advocate_select",
    "Protocol",
    "RandomPull",
    "SequentialPull",
    "RandomPush",
    "PriorityPush",
    "Interleave",
    "Advocate",
    "make_protocol",
]

# An action is (PUSH, piece), (PULL, piece), or None for an idle slot.
PUSH = "push"
PULL = "pull"


def random_pull_select(pieces: int, k: int, rng: Random) -> int | None:
    """Uniformly random missing piece, or None when complete."""
    missing = full_mask(k) & ~pieces
    if not missing:
        return None
    return random_piece(missing, rng)


def sequential_pull_select(pieces: int, k: int) -> int | None:
    """Lowest-numbered missing piece, or None when complete."""
    missing = full_mask(k) & ~pieces
    if not missing:
        return None
    return lowest_piece(missing)


def random_push_select(pieces: int, rng: Random) -> int | None:
    """Uniformly random possessed piece, or None when empty-handed."""
    if not pieces:
        return None
    return random_piece(pieces, rng)


def priority_push_select(
    pieces: int, slot: int, spacing: int, k: int, is_source: bool
) -> int | None:
    """Piece to push under the source-paced priority schedule.

    The source works through the pieces in order, dwelling ``spacing``
    slots on each: in slot t it pushes piece ``ceil(t / spacing)``, capped
    at k once the schedule is exhausted.  Every other user pushes the
    highest-numbered piece it holds — the one injected most recently and
    therefore rarest — or idles while empty-handed.
    """
    if is_source:
        due = (slot + spacing - 1) // spacing
        return min(due, k)
    if not pieces:
        return None
    return highest_piece(pieces)


def interleave_action(
    pieces: int,
    k: int,
    slot: int,
    is_source: bool,
    odd_channel_max: int | None,
    next_source_piece: int | None,
):
    """Action under the odd/even interleave schedule.

    Odd slots are the push channel: the source injects one new piece per
    odd slot (in order, capped at k), while every other user relays the
    highest piece it has ever received on the push channel, idling until
    the channel first reaches it.  Even slots are the pull channel: each
    user requests its lowest missing piece; complete users idle (but still
    serve requests).
    """
    if slot & 1:
        if is_source:
            return (PUSH, next_source_piece)
        if odd_channel_max is None:
            return None
        return (PUSH, odd_channel_max)
    missing = full_mask(k) & ~pieces
    if not missing:
        return None
    return (PULL, lowest_piece(missing))


def advocate_select(
    pieces: int, target_pieces: int, target_initial: int, rng: Random
) -> int | None:
    """Piece to pull from a contact under the initial-piece advocacy rule.

    The contact's own initial piece takes priority whenever the requester
    is missing it; otherwise the requester pulls a uniformly random piece
    the contact has and it lacks, idling if there is none.
    """
    if not pieces >> (target_initial - 1) & 1:
        return target_initial
    gain = target_pieces & ~pieces
    if not gain:
        return None
    return random_piece(gain, rng)


class Protocol:
    """Binds a selection rule to engine state.

    ``act`` returns this user's action for the slot; ``two_sided`` marks
    rules that read the contact's state (pull decisions that inspect the
    target); ``source_pushes_at`` reports slots in which the source pushes
    on a fixed schedule regardless of its contact draw.
    """

    id: str
    two_sided = False

    def source_pushes_at(self, slot: int) -> bool:
        return False

    def act(self, st, user: int, target: int, slot: int):
        raise NotImplementedError


class RandomPull(Protocol):
    id = RANDOM_PULL

    def act(self, st, user: int, target: int, slot: int):
        p = random_pull_select(st.pieces[user], st.k, st.rng)
        return None if p is None else (PULL, p)


class SequentialPull(Protocol):
    id = SEQUENTIAL_PULL

    def act(self, st, user: int, target: int, slot: int):
        p = sequential_pull_select(st.pieces[user], st.k)
        return None if p is None else (PULL, p)


class RandomPush(Protocol):
    id = RANDOM_PUSH

    def act(self, st, user: int, target: int, slot: int):
        p = random_push_select(st.pieces[user], st.rng)
        return None if p is None else (PUSH, p)


class PriorityPush(Protocol):
    id = PRIORITY_PUSH

    def __init__(self, spacing: int = 1):
        self.spacing = spacing

    def source_pushes_at(self, slot: int) -> bool:
        return True

    def act(self, st, user: int, target: int, slot: int):
        p = priority_push_select(
            st.pieces[user], slot, self.spacing, st.k, user == st.source
        )
        return None if p is None else (PUSH, p)


class Interleave(Protocol):
    id = INTERLEAVE

    def source_pushes_at(self, slot: int) -> bool:
        return slot & 1 == 1

    def act(self, st, user: int, target: int, slot: int):
        if user == st.source:
            return interleave_action(
                st.pieces[user], st.k, slot, True, None, st.next_source_piece
            )
        return interleave_action(
            st.pieces[user], st.k, slot, False, st.odd_channel_max[user], None
        )


class Advocate(Protocol):
    id = ADVOCATE
    two_sided = True

    def act(self, st, user: int, target: int, slot: int):
        p = advocate_select(
            st.pieces[user],
            st.pieces[target],
            st.initial_piece[target],
            st.rng,
        )
        return None if p is None else (PULL, p)


def make_protocol(config: SimulationConfig) -> Protocol:
    """Instantiate the protocol named by the config."""
    pid = config.protocol
    if pid == RANDOM_PULL:
        return RandomPull()
    if pid == SEQUENTIAL_PULL:
        return SequentialPull()
    if pid == RANDOM_PUSH:
        return RandomPush()
    if pid == PRIORITY_PUSH:
        return PriorityPush(config.spacing)
    if pid == INTERLEAVE:
        return Interleave()
    if pid == ADVOCATE:
        return Advocate()
    raise ValueError(f"unknown protocol id {pid!r}")
