"""Per-epoch loss ledger and the ApproBiVT score.

All losses are mean cross-entropy in nats, stored as f64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import KTooLarge, MalformedRow, NonFiniteLoss, OutOfOrderEpoch

HEADER = "epoch,train_loss,sutl,val_loss"
METRICS = ("val", "approbivt")


def approbivt_score(record) -> float:
    """SUTL plus validation loss: the bias proxy plus the variance proxy."""
    return record.sutl + record.val_loss


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    sutl: float
    val_loss: float

    def __post_init__(self):
        if int(self.epoch) != self.epoch or self.epoch < 1:
            raise ValueError(f"epoch must be a positive integer, got {self.epoch!r}")
        for name in ("train_loss", "sutl", "val_loss"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise NonFiniteLoss(f"epoch {self.epoch}: {name} = {value}")
            if value < 0:
                raise ValueError(f"epoch {self.epoch}: {name} = {value} is negative")

    @property
    def approbivt(self) -> float:
        return approbivt_score(self)


def _normalize_metric(metric):
    m = str(metric).lower().replace("_", "")
    if m in ("val", "valloss", "vl"):
        return "val"
    if m in ("approbivt", "abvt"):
        return "approbivt"
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


@dataclass
class Ledger:
    records: list = field(default_factory=list)
    run_id: str = ""

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, record: EpochRecord):
        if self.records and record.epoch <= self.records[-1].epoch:
            raise OutOfOrderEpoch(f"epoch {record.epoch} after epoch {self.records[-1].epoch}")
        self.records.append(record)

    @property
    def epochs(self):
        return [r.epoch for r in self.records]

    def column(self, metric):
        """Metric values as an f64 array, in ledger order."""
        m = _normalize_metric(metric)
        if m == "val":
            return np.array([r.val_loss for r in self.records], dtype=np.float64)
        return np.array([approbivt_score(r) for r in self.records], dtype=np.float64)

    def upto(self, endpoint):
        """Ledger view restricted to epochs <= endpoint."""
        return Ledger([r for r in self.records if r.epoch <= endpoint], self.run_id)

    def k_best(self, metric, k):
        return k_best(self, metric, k)


def k_best(ledger: Ledger, metric, k: int) -> list[int]:
    """The k epochs with the smallest metric, returned in ascending epoch order.

    Ties go to the earlier epoch.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > len(ledger):
        raise KTooLarge(f"k={k} exceeds the {len(ledger)} available epochs")
    values = ledger.column(metric)
    epochs = np.array(ledger.epochs, dtype=np.int64)
    order = np.lexsort((epochs, values))
    return sorted(int(e) for e in epochs[order[:k]])


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def save_csv(ledger: Ledger, path):
    lines = [HEADER]
    lines += [f"{r.epoch},{_fmt(r.train_loss)},{_fmt(r.sutl)},{_fmt(r.val_loss)}" for r in ledger.records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_csv(path, run_id=None) -> Ledger:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != HEADER:
        raise MalformedRow(f"{path}: expected header {HEADER!r}")
    ledger = Ledger(run_id=run_id if run_id is not None else path.parent.name)
    for lineno, line in enumerate(lines[1:], start=2):
        cols = line.strip().split(",")
        if len(cols) != 4:
            raise MalformedRow(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
        try:
            epoch = int(cols[0])
            losses = [float(c) for c in cols[1:]]
        except ValueError:
            raise MalformedRow(f"{path}:{lineno}: unparsable number in {line!r}") from None
        ledger.append(EpochRecord(epoch, *losses))
    return ledger
