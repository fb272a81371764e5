import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ckpt_curator.averaging import average, resolve_plan, run_averaging
from ckpt_curator.errors import EmptyList, IncompatibleCheckpoints, KTooLarge, MissingCheckpoint, UnknownEndpoint
from ckpt_curator.ledger import EpochRecord, Ledger, approbivt_score
from ckpt_curator.tensor_store import TensorMap, read_checkpoint, write_checkpoint

from .conftest import GOLDEN


def random_maps(rng, n, scale=1.0):
    return [
        TensorMap({"w": rng.standard_normal((3, 4)) * scale, "b": rng.standard_normal(4) * scale, "s": rng.standard_normal(())})
        for _ in range(n)
    ]


def naive_average(tms):
    """Independent oracle: per-element python loop, f64 sum in list order, one f32 rounding."""
    out = {}
    for name in tms[0]:
        flat = [np.asarray(tm[name]).reshape(-1) for tm in tms]
        res = []
        for i in range(flat[0].size):
            acc = 0.0
            for f in flat:
                acc += float(f[i])
            res.append(np.float32(acc / len(tms)))
        out[name] = np.array(res, dtype=np.float32).reshape(tms[0][name].shape)
    return TensorMap(out)


def test_identical_copies_bit_exact(rng):
    tm = random_maps(rng, 1)[0]
    for k in (1, 2, 3, 7, 20):
        assert average([tm] * k) == tm


def test_midpoint():
    a = TensorMap({"w": np.zeros((2, 2))})
    b = TensorMap({"w": np.full((2, 2), 2.0)})
    assert np.all(average([a, b])["w"] == 1.0)


def test_oracle_zero_diff(rng):
    tms = random_maps(rng, 7)
    assert average(tms) == naive_average(tms)


def test_errors():
    with pytest.raises(EmptyList):
        average([])
    with pytest.raises(IncompatibleCheckpoints):
        average([TensorMap({"w": np.ones(2)}), TensorMap({"w": np.ones(3)})])


def test_bounding_and_permutation(rng):
    for trial in range(20):
        tms = random_maps(rng, int(rng.integers(1, 9)), scale=10.0 ** rng.integers(-2, 3))
        avg = average(tms)
        perm = tms[:]
        random.Random(trial).shuffle(perm)
        assert average(perm) == avg
        for name in avg:
            stack = np.stack([tm[name] for tm in tms])
            assert np.all(avg[name] >= stack.min(axis=0)) and np.all(avg[name] <= stack.max(axis=0))


def test_average_of_result_is_fixed_point(rng):
    a, b = random_maps(rng, 2)
    ab = average([a, b])
    assert average([ab]) == ab
    assert average([ab, ab]) == ab


def ledger_from(vals, sutl=None):
    led = Ledger()
    for i, v in enumerate(vals, start=1):
        led.append(EpochRecord(i, 0.0, 0.0 if sutl is None else sutl[i - 1], v))
    return led


def test_resolve_examples():
    led = ledger_from([1.0] * 10)
    assert resolve_plan(led, "lk", 3, 10).resolved_epochs == (8, 9, 10)
    assert resolve_plan(led, "lk", 3).resolved_epochs == (8, 9, 10)
    assert resolve_plan(led, "lk", 3, 6).resolved_epochs == (4, 5, 6)
    assert resolve_plan(ledger_from([0.9, 0.5, 0.7]), "kbvl", 2).resolved_epochs == (2, 3)
    with pytest.raises(KTooLarge):
        resolve_plan(led, "kbvl", 5, endpoint=4)
    with pytest.raises(UnknownEndpoint):
        resolve_plan(led, "lk", 1, endpoint=11)
    with pytest.raises(ValueError):
        resolve_plan(led, "swa", 1)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 5), st.floats(0, 5)), min_size=1, max_size=25), st.data())
def test_kbabvt_matches_hand_resolution(rows, data):
    led = ledger_from([v for v, _ in rows], [s for _, s in rows])
    k = data.draw(st.integers(1, len(rows)))
    by_hand = sorted(led.records, key=lambda r: (approbivt_score(r), r.epoch))[:k]
    assert resolve_plan(led, "kbabvt", k).resolved_epochs == tuple(sorted(r.epoch for r in by_hand))


def test_run_averaging_k1_identity_and_missing(tmp_path, rng):
    tms = random_maps(rng, 3)
    led = ledger_from([0.3, 0.1, 0.2])
    for e, tm in enumerate(tms, start=1):
        write_checkpoint(tm, tmp_path / f"epoch_{e}.ckpt")
    meta = run_averaging(tmp_path, resolve_plan(led, "kbvl", 1))
    assert meta.path.name == "avg_kbvl_k1.ckpt"
    assert read_checkpoint(meta.path) == tms[1]
    (tmp_path / "epoch_3.ckpt").unlink()
    with pytest.raises(MissingCheckpoint):
        run_averaging(tmp_path, resolve_plan(led, "lk", 2))


def test_run_averaging_accumulates_in_epoch_order(tmp_path, rng):
    tms = random_maps(rng, 5, scale=1e3)
    for e, tm in enumerate(tms, start=1):
        write_checkpoint(tm, tmp_path / f"epoch_{e}.ckpt")
    led = ledger_from([0.5, 0.1, 0.4, 0.2, 0.3])
    plan = resolve_plan(led, "kbvl", 4)
    meta = run_averaging(tmp_path, plan)
    assert read_checkpoint(meta.path) == naive_average([tms[e - 1] for e in sorted(plan.resolved_epochs)])


def test_pinned_lk20_golden_digest(reference_run, tmp_path):
    run_dir, ledger = reference_run
    golden = json.loads((GOLDEN / "reference_run.json").read_text())
    plan = resolve_plan(ledger, "lk", 20)
    assert plan.resolved_epochs == tuple(range(golden["epochs"] - 19, golden["epochs"] + 1))
    meta = run_averaging(run_dir, plan)
    assert meta.digest_hex == golden["avg_lk_k20"]
    by_hand = naive_average([read_checkpoint(run_dir / f"epoch_{e}.ckpt") for e in plan.resolved_epochs])
    assert read_checkpoint(meta.path) == by_hand


def test_pinned_kbabvt10_brute_force(reference_run):
    _, ledger = reference_run
    brute = sorted(sorted(ledger.records, key=lambda r: (r.sutl + r.val_loss, r.epoch))[:10], key=lambda r: r.epoch)
    assert resolve_plan(ledger, "kbabvt", 10).resolved_epochs == tuple(r.epoch for r in brute)
