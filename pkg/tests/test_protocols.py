"""Piece-selection rules, including every documented selection example."""

from collections import Counter
from random import Random

import pytest

from gossipsim.bitset import from_pieces, full_mask
from gossipsim.protocols import (
    PULL,
    PUSH,
    advocate_select,
    interleave_action,
    priority_push_select,
    random_pull_select,
    random_push_select,
    sequential_pull_select,
)


def test_sequential_pull_picks_lowest_missing():
    # owns {1, 2, 4} of 5 -> lowest missing is 3
    assert sequential_pull_select(from_pieces([1, 2, 4]), 5) == 3
    # owns nothing -> piece 1
    assert sequential_pull_select(0, 5) == 1
    # complete -> idle
    assert sequential_pull_select(full_mask(5), 5) is None


def test_random_pull_uniform_over_missing():
    owned = from_pieces([2, 4])  # missing {1, 3, 5}
    rng = Random(3)
    draws = Counter(random_pull_select(owned, 5, rng) for _ in range(6000))
    assert set(draws) == {1, 3, 5}
    for piece in (1, 3, 5):
        assert abs(draws[piece] - 2000) < 6 * 2000**0.5
    assert random_pull_select(full_mask(5), 5, rng) is None


def test_random_push_uniform_over_owned():
    owned = from_pieces([1, 5])
    rng = Random(4)
    draws = Counter(random_push_select(owned, rng) for _ in range(4000))
    assert set(draws) == {1, 5}
    assert abs(draws[1] - 2000) < 6 * 2000**0.5
    assert random_push_select(0, rng) is None


def test_priority_push_source_schedule():
    # spacing 2: the source dwells two slots per piece -> slot 3 is piece 2
    assert priority_push_select(full_mask(6), 3, 2, 6, True) == 2
    # schedule start and cap
    assert priority_push_select(full_mask(6), 1, 2, 6, True) == 1
    assert priority_push_select(full_mask(6), 12, 2, 6, True) == 6
    assert priority_push_select(full_mask(6), 999, 2, 6, True) == 6
    # spacing 1: piece t until the cap
    assert priority_push_select(full_mask(6), 4, 1, 6, True) == 4


def test_priority_push_non_source_pushes_highest():
    assert priority_push_select(from_pieces([1, 3]), 9, 1, 6, False) == 3
    assert priority_push_select(0, 9, 1, 6, False) is None


def test_interleave_source_pushes_schedule_on_odd_slots():
    # source has released up to 4, so its next odd-slot push is piece 5
    assert interleave_action(full_mask(9), 9, 11, True, None, 5) == (PUSH, 5)


def test_interleave_relay_uses_odd_channel_memory_only():
    # non-source saw piece 6 on the odd channel but piece 9 via even pulls:
    # it relays 6, never 9
    owned = from_pieces([6, 9])
    assert interleave_action(owned, 9, 7, False, 6, None) == (PUSH, 6)
    # nothing received on the odd channel yet -> idle on odd slots
    assert interleave_action(owned, 9, 7, False, None, None) is None


def test_interleave_even_slots_pull_lowest_missing():
    owned = from_pieces([1, 2, 5])
    assert interleave_action(owned, 6, 8, False, 5, None) == (PULL, 3)
    # complete users idle on the pull channel
    assert interleave_action(full_mask(6), 6, 8, False, 6, None) is None
    # the complete source also idles on even slots
    assert interleave_action(full_mask(6), 6, 8, True, None, 3) is None


def test_advocate_prefers_target_initial_piece():
    user = from_pieces([1, 2])
    target = from_pieces([3, 4, 8])
    assert advocate_select(user, target, 3, Random(0)) == 3


def test_advocate_falls_back_to_uniform_gain():
    # user already holds the target's initial piece; gain set is {4, 8}
    user = from_pieces([1, 2, 3])
    target = from_pieces([1, 3, 4, 8])
    rng = Random(5)
    draws = Counter(advocate_select(user, target, 3, rng) for _ in range(4000))
    assert set(draws) == {4, 8}
    assert abs(draws[4] - 2000) < 6 * 2000**0.5


def test_advocate_idles_when_target_offers_nothing():
    user = from_pieces([1, 2, 3])
    target = from_pieces([1, 3])
    assert advocate_select(user, target, 1, Random(0)) is None


@pytest.mark.parametrize("slot", [2, 4, 100])
def test_interleave_slot_parity_drives_channel(slot):
    owned = from_pieces([2])
    action = interleave_action(owned, 4, slot, False, 2, None)
    assert action == (PULL, 1)
    action = interleave_action(owned, 4, slot + 1, False, 2, None)
    assert action == (PUSH, 2)
