"""Plateau/rise detector: stop once the monitored loss has been non-decreasing
for ``patience`` consecutive epoch-to-epoch steps.

Equality counts as an increase. Indices are 0-based over observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import _kernels
from .errors import NonFiniteLoss, ObserveAfterStop

DEFAULT_PATIENCE = 5


@dataclass(frozen=True)
class Decision:
    stop: bool
    index: int | None = None
    run_length: int = 0

    def __str__(self):
        return f"Stop(E={self.index})" if self.stop else "Continue"


CONTINUE = Decision(False)


@dataclass
class StoppingMonitor:
    patience: int = DEFAULT_PATIENCE
    history: list = field(default_factory=list)
    run_length: int = 0
    stopped_at: int | None = None

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")

    @property
    def stopped(self):
        return self.stopped_at is not None

    def observe(self, loss: float) -> Decision:
        if self.stopped:
            raise ObserveAfterStop(f"monitor already stopped at index {self.stopped_at}")
        loss = float(loss)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"observed {loss}")
        if self.history:
            self.run_length = self.run_length + 1 if loss >= self.history[-1] else 0
        self.history.append(loss)
        if self.run_length == self.patience:
            self.stopped_at = len(self.history) - 1
            return Decision(True, self.stopped_at, self.run_length)
        return Decision(False, None, self.run_length)


def find_stop_point(losses, patience: int = DEFAULT_PATIENCE) -> int | None:
    """Smallest i >= patience whose preceding ``patience`` steps are all non-decreasing."""
    if patience < 1:
        raise ValueError(f"patience must be >= 1, got {patience}")
    losses = list(losses)
    if not all(math.isfinite(x) for x in losses):
        raise NonFiniteLoss("losses must be finite")
    idx = _kernels.stop_scan(losses, patience)
    return None if idx < 0 else idx


def trailing_run_length(losses) -> int:
    """Consecutive non-decreasing steps ending at the last loss."""
    run = 0
    for prev, cur in zip(losses, losses[1:]):
        run = run + 1 if cur >= prev else 0
    return run
