"""Checkpoint selection (LK / KBVL / KBABVT) and parameter-space averaging."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import EmptyList, IncompatibleCheckpoints, KTooLarge, MissingCheckpoint, UnknownEndpoint
from .ledger import Ledger, k_best
from .tensor_store import TensorMap, read_checkpoint, validate_compatible, write_checkpoint

SCHEMES = ("lk", "kbvl", "kbabvt")
CKPT_RE = re.compile(r"^epoch_(\d+)\.ckpt$")


def checkpoint_name(epoch: int) -> str:
    return f"epoch_{epoch}.ckpt"


def normalize_scheme(scheme) -> str:
    s = str(scheme).lower()
    if s not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return s


@dataclass(frozen=True)
class AveragingPlan:
    scheme: str
    k: int
    endpoint: int | None
    resolved_epochs: tuple

    @property
    def output_name(self):
        return f"avg_{self.scheme}_k{self.k}.ckpt"


def resolve_plan(ledger: Ledger, scheme, k: int, endpoint=None) -> AveragingPlan:
    scheme = normalize_scheme(scheme)
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if endpoint is not None:
        if endpoint not in set(ledger.epochs):
            raise UnknownEndpoint(f"epoch {endpoint} is not in the ledger")
        ledger = ledger.upto(endpoint)
    if k > len(ledger):
        raise KTooLarge(f"k={k} exceeds the {len(ledger)} eligible epochs")
    if scheme == "lk":
        epochs = ledger.epochs[-k:]
    elif scheme == "kbvl":
        epochs = k_best(ledger, "val", k)
    else:
        epochs = k_best(ledger, "approbivt", k)
    return AveragingPlan(scheme, k, endpoint, tuple(sorted(epochs)))


class Averager:
    """Streaming f64 accumulator: one checkpoint resident at a time."""

    def __init__(self):
        self._ref = None
        self._acc = None
        self.count = 0

    def add(self, tm: TensorMap):
        if self._ref is None:
            self._ref = tm
            self._acc = {name: np.zeros(arr.size, dtype=np.float64) for name, arr in tm.items()}
        else:
            report = validate_compatible([self._ref, tm])
            if not report.ok:
                raise IncompatibleCheckpoints(str(report))
        for name, arr in tm.items():
            _kernels.accumulate(self._acc[name], arr)
        self.count += 1

    def result(self) -> TensorMap:
        if not self.count:
            raise EmptyList("nothing to average")
        shapes = self._ref.shapes()
        return TensorMap(
            {name: (acc / self.count).astype(np.float32).reshape(shapes[name]) for name, acc in self._acc.items()}
        )


def average(tms) -> TensorMap:
    """Element-wise arithmetic mean, summed in f64 in the given order, rounded once to f32."""
    tms = list(tms)
    if not tms:
        raise EmptyList("average() needs at least one TensorMap")
    report = validate_compatible(tms)
    if not report.ok:
        raise IncompatibleCheckpoints(str(report))
    avg = Averager()
    for tm in tms:
        avg.add(tm)
    return avg.result()


def average_epochs(run_dir, epochs) -> TensorMap:
    """Average checkpoint files of a run, always accumulating in ascending epoch order."""
    run_dir = Path(run_dir)
    epochs = sorted(epochs)
    missing = [e for e in epochs if not (run_dir / checkpoint_name(e)).is_file()]
    if missing:
        raise MissingCheckpoint(f"epoch {missing[0]} ({run_dir / checkpoint_name(missing[0])})")
    avg = Averager()
    for e in epochs:
        avg.add(read_checkpoint(run_dir / checkpoint_name(e)))
    return avg.result()


def run_averaging(run_dir, plan: AveragingPlan):
    run_dir = Path(run_dir)
    tm = average_epochs(run_dir, plan.resolved_epochs)
    return write_checkpoint(tm, run_dir / plan.output_name)


def list_checkpoints(run_dir) -> dict[int, Path]:
    out = {}
    for p in Path(run_dir).iterdir():
        m = CKPT_RE.match(p.name)
        if m:
            out[int(m.group(1))] = p
    return dict(sorted(out.items()))
