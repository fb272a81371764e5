import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ckpt_curator.errors import NonFiniteLoss, ObserveAfterStop
from ckpt_curator.stopping import StoppingMonitor, find_stop_point


def brute_stop(losses, s):
    """Literal definition: smallest i >= s whose s preceding steps are all non-decreasing."""
    for i in range(s, len(losses)):
        if all(losses[j] >= losses[j - 1] for j in range(i - s + 1, i + 1)):
            return i
    return None


def stream_stop(losses, s):
    mon = StoppingMonitor(s)
    for x in losses:
        d = mon.observe(x)
        if d.stop:
            return d.index
    return None


def test_plateau_counts_as_increase():
    mon = StoppingMonitor(1)
    assert not mon.observe(3.0).stop
    d = mon.observe(3.0)
    assert d.stop and d.index == 1


def test_hand_trace_s2():
    mon = StoppingMonitor(2)
    decisions = [mon.observe(x) for x in [5, 4, 3, 3, 4]]
    assert [d.stop for d in decisions] == [False, False, False, False, True]
    assert decisions[-1].index == 4
    assert find_stop_point([5, 4, 3, 3, 4], 2) == 4


def test_strictly_decreasing_never_stops():
    mon = StoppingMonitor(3)
    assert not any(mon.observe(x).stop for x in np.linspace(10, 0, 300))
    assert mon.run_length == 0


def test_monotone_increasing():
    assert find_stop_point([1, 2, 3, 4, 5, 6], 5) == 5
    assert find_stop_point([1, 2, 3, 4, 5], 5) is None


def test_errors():
    mon = StoppingMonitor(1)
    with pytest.raises(NonFiniteLoss):
        mon.observe(float("nan"))
    mon.observe(1.0)
    mon.observe(1.0)
    with pytest.raises(ObserveAfterStop):
        mon.observe(0.5)
    with pytest.raises(ValueError):
        StoppingMonitor(0)


def test_run_length_bounded_and_recomputable(rng):
    losses = rng.integers(0, 3, 200).astype(float)
    mon = StoppingMonitor(6)
    for x in losses:
        d = mon.observe(x)
        assert mon.run_length <= 6
        h = mon.history
        run = 0
        for a, b in zip(h, h[1:]):
            run = run + 1 if b >= a else 0
        assert run == mon.run_length
        if d.stop:
            break


seqs = st.lists(st.integers(-3, 3).map(float), max_size=60)


@settings(max_examples=400, deadline=None)
@given(seqs, st.integers(1, 8))
def test_stream_batch_brute_agree(losses, s):
    e = brute_stop(losses, s)
    assert find_stop_point(losses, s) == e
    assert stream_stop(losses, s) == e


@settings(max_examples=200, deadline=None)
@given(seqs, st.integers(1, 6), st.integers(-50, 50), st.sampled_from([0.25, 0.5, 2.0, 8.0]))
def test_translation_and_scale_invariance(losses, s, shift, scale):
    # dyadic shifts/scales keep small-integer sequences exactly representable
    e = find_stop_point(losses, s)
    assert find_stop_point([x + shift for x in losses], s) == e
    assert find_stop_point([x * scale for x in losses], s) == e


def test_pinned_run_stream_equals_batch(reference_run):
    _, ledger = reference_run
    col = ledger.column("approbivt")
    assert stream_stop(col, 5) == find_stop_point(col, 5)
