"""Plot-ready CSV outputs: loss-curve overlays and endpoint/k/scheme ablation grids."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .averaging import average_epochs, normalize_scheme, resolve_plan
from .errors import EmptyLedger
from .ledger import Ledger, load_csv
from .stopping import DEFAULT_PATIENCE, find_stop_point
from .toy.config import load_config
from .toy.data import make_test_set
from .toy.mlp import Model, evaluate
from .toy.trainer import CONFIG_FILE, LEDGER_FILE

CURVE_COLUMNS = ("epoch", "train_loss", "sutl", "val_loss", "approbivt")
GRID_COLUMNS = ("endpoint", "scheme", "k", "loss", "accuracy", "epochs")


def stop_epoch(ledger: Ledger, metric, patience=DEFAULT_PATIENCE):
    """Ledger epoch id at which the monitor on ``metric`` fires, or None."""
    idx = find_stop_point(ledger.column(metric), patience)
    return None if idx is None else ledger.records[idx].epoch


def curves(ledger: Ledger, patience=DEFAULT_PATIENCE) -> str:
    """CSV text of the loss curves followed by a ``#`` summary footer."""
    if not len(ledger):
        raise EmptyLedger("cannot emit curves for an empty ledger")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for r in ledger:
        w.writerow([r.epoch] + [f"{v:.17g}" for v in (r.train_loss, r.sutl, r.val_loss, r.sutl + r.val_loss)])
    epochs = np.array(ledger.epochs)
    val_best = int(epochs[np.argmin(ledger.column("val"))])
    abvt_best = int(epochs[np.argmin(ledger.column("approbivt"))])
    footer = {
        "val_loss_argmin_epoch": val_best,
        "approbivt_argmin_epoch": abvt_best,
        "val_argmin_before_approbivt_argmin": val_best < abvt_best,
        "val_stop_epoch": stop_epoch(ledger, "val", patience),
        "approbivt_stop_epoch": stop_epoch(ledger, "approbivt", patience),
        "patience": patience,
    }
    for key, value in footer.items():
        buf.write(f"# {key}={'none' if value is None else str(value).lower()}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class GridRow:
    endpoint: int
    scheme: str
    k: int
    loss: float
    accuracy: float
    epochs: tuple


@dataclass
class AblationGrid:
    rows: list = field(default_factory=list)

    def lookup(self, endpoint, scheme, k):
        for r in self.rows:
            if (r.endpoint, r.scheme, r.k) == (endpoint, scheme, k):
                return r
        raise KeyError((endpoint, scheme, k))

    def best(self, endpoint, scheme):
        """Row with the lowest held-out loss for a scheme at an endpoint."""
        cands = [r for r in self.rows if r.endpoint == endpoint and r.scheme == scheme]
        return min(cands, key=lambda r: (r.loss, r.k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for r in self.rows:
            w.writerow([r.endpoint, r.scheme, r.k, f"{r.loss:.17g}", f"{r.accuracy:.17g}", " ".join(map(str, r.epochs))])
        return buf.getvalue()


def ablation(run_dir, endpoints, ks, schemes, eval_set, ledger=None, skip_infeasible=False) -> AblationGrid:
    """Average and evaluate every (endpoint, scheme, k) combination once.

    Rows are ordered by endpoint, scheme name, then k. With ``skip_infeasible``,
    combinations whose k exceeds the epochs available at the endpoint are
    dropped instead of raising KTooLarge.
    """
    run_dir = Path(run_dir)
    ledger = ledger if ledger is not None else load_csv(run_dir / LEDGER_FILE)
    combos = sorted({(int(e), normalize_scheme(s), int(k)) for e in endpoints for s in schemes for k in ks})
    grid = AblationGrid()
    for endpoint, scheme, k in combos:
        if skip_infeasible and k > sum(1 for e in ledger.epochs if e <= endpoint):
            continue
        plan = resolve_plan(ledger, scheme, k, endpoint)
        model = Model.from_tensormap(average_epochs(run_dir, plan.resolved_epochs))
        res = evaluate(model, eval_set)
        grid.rows.append(GridRow(endpoint, scheme, k, res.loss, res.accuracy, plan.resolved_epochs))
    return grid


def run_eval_set(run_dir):
    """The held-out test split implied by a run's ``config.resolved``."""
    cfg = load_config(Path(run_dir) / CONFIG_FILE, env=False)
    return make_test_set(cfg)


def resolve_endpoint(token, ledger: Ledger, patience=DEFAULT_PATIENCE):
    """Accept an epoch id or one of ``last``, ``val-stop``, ``approbivt-stop``."""
    token = str(token).strip().lower()
    if token == "last":
        return ledger.epochs[-1]
    if token in ("val-stop", "vl-stop", "approbivt-stop"):
        metric = "approbivt" if token.startswith("approbivt") else "val"
        epoch = stop_epoch(ledger, metric, patience)
        # a monitor that never fired leaves the whole run eligible
        return ledger.epochs[-1] if epoch is None else epoch
    return int(token)
