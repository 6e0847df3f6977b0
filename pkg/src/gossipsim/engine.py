"""Slot-synchronous simulation engine.

One slot proceeds in three phases shared by every protocol:

1. every user samples one contact and picks an action (push, pull, idle);
2. uploads are resolved against the per-user upload budget;
3. granted transfers are delivered into a staging area and committed at the
   end of the slot, so a piece received in slot t is usable (pushable,
   servable, counted) from slot t+1 on.

Pushes are resolved before pulls: a user's own push claims its upload
budget first, and under the hard constraint a pushed-at user therefore
serves no pull requests that slot.  Downloads are never constrained.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from random import Random
from typing import Iterable, NamedTuple

import numpy as np

from .bitset import full_mask
from .config import (
    ETA_SEEDED,
    FIXED_LISTS,
    HARD,
    INTERLEAVE,
    SINGLE_SOURCE,
    SOURCE_SCHEDULED,
    ConfigError,
    SimulationConfig,
)
from .protocols import PULL, PUSH, Protocol, make_protocol

__all__ = [
    "TransferEvent",
    "SystemState",
    "RunResult",
    "Engine",
    "run",
    "init_state",
    "build_contact_lists",
    "sample_target",
    "resolve_uploads",
    "step_slot",
    "trace_digest",
]


class TransferEvent(NamedTuple):
    """One granted upload: `frm` sent `piece` to `to` during `slot`."""

    slot: int
    frm: int
    to: int
    piece: int
    kind: str  # "push" or "pull"


@dataclass
class SystemState:
    """Mutable world state for one run."""

    n: int
    k: int
    mask: int
    constraint: str
    protocol_id: str
    rng: Random
    pieces: list[int]
    arrivals: np.ndarray  # (n, k) int32; arrivals[u, p-1] = slot, -1 = never
    emergence: list  # per piece: first slot a non-endowed copy appeared
    slot: int = 0
    num_complete: int = 0
    source: int | None = None
    contact_lists: list | None = None
    initial_piece: list | None = None  # one-unique start: piece per user
    odd_channel_max: list | None = None  # interleave push-channel memory
    next_source_piece: int | None = None  # interleave source schedule
    release_slots: list | None = None  # first source push per piece


def build_contact_lists(n: int, m: int, rng: Random) -> list:
    """Sample each user's fixed contact list: m distinct others, immutable."""
    if not 1 <= m <= n - 1:
        raise ConfigError(
            f"contact_list_size: need an integer in [1, n-1], got {m!r}"
        )
    lists = []
    ids = list(range(n))
    for u in range(n):
        ids[u] = ids[-1]  # swap self out of the pool
        lists.append(tuple(rng.sample(ids[: n - 1], m)))
        ids[u] = u
        ids[-1] = n - 1
    return lists


def _uniform_other(user: int, n: int, rng: Random) -> int:
    """Uniform draw from the n-1 users other than `user`."""
    r = int(rng.random() * (n - 1))
    if r >= n - 1:  # guard the float rounding edge
        r = n - 2
    return r + 1 if r >= user else r


def sample_target(user: int, st: SystemState, rng: Random) -> int:
    """One contact draw for `user` under the configured contact model."""
    lists = st.contact_lists
    if lists is None:
        return _uniform_other(user, st.n, rng)
    lst = lists[user]
    i = int(rng.random() * len(lst))
    if i >= len(lst):
        i = len(lst) - 1
    return lst[i]


def init_state(config: SimulationConfig) -> SystemState:
    """Seed the PRNG, build contact lists, and place the initial pieces.

    The PRNG is consumed in a fixed order — contact lists first, then the
    seeded placement — so identical (config, seed) pairs always produce
    identical worlds.
    """
    config.validate()
    n, k = config.n, config.k
    rng = Random(config.seed)
    contact_lists = None
    if config.contact_model == FIXED_LISTS:
        contact_lists = build_contact_lists(n, config.contact_list_size, rng)
    pieces = [0] * n
    arrivals = np.full((n, k), -1, dtype=np.int32)
    initial_piece = None
    source = None
    if config.initial_state == SINGLE_SOURCE:
        source = 0
        pieces[0] = full_mask(k)
        arrivals[0, :] = 0
        emergence = [None] * k
    elif config.initial_state == ETA_SEEDED:
        holders = math.ceil(config.eta * n)
        for p in range(1, k + 1):
            bit = 1 << (p - 1)
            for u in rng.sample(range(n), holders):
                pieces[u] |= bit
                arrivals[u, p - 1] = 0
        emergence = [0] * k
    else:  # one unique piece per user; validate() guarantees k == n
        for u in range(n):
            pieces[u] = 1 << u
            arrivals[u, u] = 0
        initial_piece = list(range(1, n + 1))
        emergence = [0] * k
    mask = full_mask(k)
    st = SystemState(
        n=n,
        k=k,
        mask=mask,
        constraint=config.constraint,
        protocol_id=config.protocol,
        rng=rng,
        pieces=pieces,
        arrivals=arrivals,
        emergence=emergence,
        source=source,
        contact_lists=contact_lists,
        initial_piece=initial_piece,
        num_complete=sum(1 for b in pieces if b == mask),
    )
    if config.protocol == INTERLEAVE:
        st.odd_channel_max = [None] * n
        st.next_source_piece = 1
    if config.protocol in SOURCE_SCHEDULED:
        st.release_slots = [None] * k
    return st


def resolve_uploads(
    slot: int,
    pushes: list,
    pull_requests: list,
    constraint: str,
    st: SystemState,
    rng: Random,
) -> list:
    """Grant uploads against the per-user budget; returns the event list.

    Pushes are the uploader's own decision and always go through.  Pull
    requests compete for the *target's* budget: requests for pieces the
    target does not (yet) hold are dropped, and under the hard constraint
    a target that pushed this slot serves nobody while any other target
    serves exactly one surviving request, chosen uniformly at random.
    The soft constraint serves every surviving request.
    """
    events = [TransferEvent(slot, u, t, p, PUSH) for u, t, p in pushes]
    if not pull_requests:
        return events
    by_target: dict = {}
    for r, t, p in pull_requests:
        by_target.setdefault(t, []).append((r, p))
    hard = constraint == HARD
    busy = {u for u, _t, _p in pushes} if hard else ()
    pieces = st.pieces
    for t in sorted(by_target):
        if t in busy:
            continue
        have = pieces[t]
        valid = [(r, p) for r, p in by_target[t] if have >> (p - 1) & 1]
        if not valid:
            continue
        if hard and len(valid) > 1:
            i = int(rng.random() * len(valid))
            if i >= len(valid):
                i = len(valid) - 1
            valid = valid[i : i + 1]
        for r, p in valid:
            events.append(TransferEvent(slot, t, r, p, PULL))
    return events


def step_slot(st: SystemState, protocol: Protocol) -> list:
    """Advance the world by one slot; returns the granted transfer events."""
    slot = st.slot + 1
    n = st.n
    rng = st.rng
    act = protocol.act
    pushes: list = []
    pulls: list = []
    # Under fixed contact lists the source's *scheduled* pushes still target
    # the whole network, so fresh pieces are not bottled up inside the
    # source's own list; everyone else stays confined to their list.
    source_global = (
        st.contact_lists is not None
        and st.source is not None
        and protocol.source_pushes_at(slot)
    )
    for u in range(n):
        if source_global and u == st.source:
            target = _uniform_other(u, n, rng)
        else:
            target = sample_target(u, st, rng)
        action = act(st, u, target, slot)
        if action is None:
            continue
        kind, piece = action
        if kind == PUSH:
            pushes.append((u, target, piece))
        else:
            pulls.append((u, target, piece))
    events = resolve_uploads(slot, pushes, pulls, st.constraint, st, rng)

    # Deliver into staging; the first copy of a piece fixes its arrival slot.
    staged: dict = {}
    arrivals = st.arrivals
    emergence = st.emergence
    ocm = st.odd_channel_max
    odd = slot & 1 == 1
    pieces = st.pieces
    for _slot, _frm, to, piece, kind in events:
        if ocm is not None and odd and kind == PUSH:
            cur = ocm[to]
            if cur is None or cur < piece:
                ocm[to] = piece
        bit = 1 << (piece - 1)
        if pieces[to] & bit:
            continue  # duplicate of a committed piece; the upload was spent
        got = staged.get(to, 0)
        if got & bit:
            continue  # second copy within this slot
        staged[to] = got | bit
        arrivals[to, piece - 1] = slot
        if emergence[piece - 1] is None:
            emergence[piece - 1] = slot
    if st.release_slots is not None:
        release = st.release_slots
        source = st.source
        for _slot, frm, _to, piece, kind in events:
            if frm == source and kind == PUSH and release[piece - 1] is None:
                release[piece - 1] = slot
    if st.next_source_piece is not None and odd:
        st.next_source_piece = min(st.next_source_piece + 1, st.k)

    # Commit: staged pieces become usable from the next slot on.
    mask = st.mask
    for u, got in staged.items():
        merged = pieces[u] | got
        if merged == mask and pieces[u] != mask:
            st.num_complete += 1
        pieces[u] = merged
    st.slot = slot
    return events


@dataclass
class RunResult:
    """One run's outcome plus everything the metrics need."""

    config: SimulationConfig
    completed: bool
    completion_slot: int | None
    slots: int
    arrivals: np.ndarray
    emergence: list
    release_slots: list | None
    initial_piece: list | None
    trace: list | None
    trace_hash: str | None


class Engine:
    """Drives one seeded run of a protocol over the shared slot loop."""

    def __init__(self, config: SimulationConfig):
        config.validate()
        self.config = config
        self.protocol = make_protocol(config)
        self.state = init_state(config)
        self.trace: list | None = [] if config.record_trace else None

    def step(self) -> list:
        events = step_slot(self.state, self.protocol)
        if self.trace is not None:
            self.trace.extend(events)
        return events

    def run(self) -> RunResult:
        st = self.state
        cap = self.config.effective_max_slots()
        completion = 0 if st.num_complete == st.n else None
        while completion is None and st.slot < cap:
            self.step()
            if st.num_complete == st.n:
                completion = st.slot
        return RunResult(
            config=self.config,
            completed=completion is not None,
            completion_slot=completion,
            slots=st.slot,
            arrivals=st.arrivals,
            emergence=st.emergence,
            release_slots=st.release_slots,
            initial_piece=st.initial_piece,
            trace=self.trace,
            trace_hash=trace_digest(self.trace) if self.trace is not None else None,
        )


def run(config: SimulationConfig) -> RunResult:
    """Run one configuration to completion or its slot cap."""
    return Engine(config).run()


def trace_digest(events: Iterable[TransferEvent]) -> str:
    """SHA-256 of the canonical event serialization; the regression anchor."""
    h = hashlib.sha256()
    for e in events:
        h.update(
            b"%d,%d,%d,%d,%s\n" % (e.slot, e.frm, e.to, e.piece, e.kind.encode())
        )
    return h.hexdigest()
