"""Deterministic mini-batch SGD loop with per-epoch checkpoint + ledger emission."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np

from .. import _kernels
from ..averaging import checkpoint_name
from ..errors import DivergedTraining
from ..ledger import EpochRecord, Ledger, save_csv
from ..stopping import StoppingMonitor
from ..tensor_store import write_checkpoint
from .config import TrainConfig, format_config
from .data import make_synthetic_dataset, rng_for, sample_unaugmented_subset
from .mlp import Model, dropout_masks, evaluate, loss_and_grads

log = logging.getLogger(__name__)

_INIT, _TRAIN = 4, 5

LEDGER_FILE = "ledger.csv"
CONFIG_FILE = "config.resolved"
CHECKSUM_FILE = "checksums.txt"


def iter_epochs(config: TrainConfig, train, seed=None):
    """Yield ``(epoch, model, train_loss)`` after each pass over ``train``.

    ``train_loss`` is the sample-weighted mean of the augmented, dropout-on
    mini-batch losses seen during the pass. The yielded model is live; copy it
    if you keep it.
    """
    seed = config.seed if seed is None else seed
    model = Model.init(config.layer_sizes, rng_for(seed, _INIT))
    rng = rng_for(seed, _TRAIN)
    n = len(train)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb = train.inputs[idx]
            if config.input_noise_sigma > 0:
                xb = xb + config.input_noise_sigma * rng.standard_normal(xb.shape)
            masks = dropout_masks(model, len(idx), config.dropout_p, rng)
            loss, grads = loss_and_grads(model, xb, train.labels[idx], masks)
            if not math.isfinite(loss):
                raise DivergedTraining(f"epoch {epoch}: batch loss {loss}")
            for name, g in grads.items():
                model.params[name] -= config.lr * g
            total += loss * len(idx)
        if not all(np.all(np.isfinite(p)) for p in model.params.values()):
            raise DivergedTraining(f"epoch {epoch}: non-finite parameters")
        yield epoch, model, total / n


def prepare(config: TrainConfig):
    """Train/valid draw plus the fixed sampled-unaugmented-training subset."""
    train, valid = make_synthetic_dataset(config)
    sut = sample_unaugmented_subset(train, config.resolved_sut_size, config.seed)
    return train, valid, sut


def train_run(config: TrainConfig, out_dir) -> Ledger:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(format_config(config), encoding="utf-8")
    for stale in out.glob("epoch_*.ckpt"):
        stale.unlink()

    train, valid, sut = prepare(config)
    ledger = Ledger(run_id=out.name)
    monitor = StoppingMonitor(config.patience)
    digests = {}
    for epoch, model, train_loss in iter_epochs(config, train):
        with np.errstate(over="ignore"):
            tm = model.to_tensormap()
        if not all(np.all(np.isfinite(v)) for v in tm.values()):
            raise DivergedTraining(f"epoch {epoch}: parameters overflow f32")
        meta = write_checkpoint(tm, out / checkpoint_name(epoch), epoch=epoch)
        digests[meta.path.name] = meta.content_digest
        # score the checkpoint as stored (f32), so the ledger describes the files
        snap = Model.from_tensormap(tm)
        sutl, val = evaluate(snap, sut).loss, evaluate(snap, valid).loss
        if not (math.isfinite(sutl) and math.isfinite(val)):
            raise DivergedTraining(f"epoch {epoch}: sutl={sutl} val_loss={val}")
        ledger.append(EpochRecord(epoch, train_loss, sutl, val))
        decision = monitor.observe(sutl + val)
        log.debug("epoch %d train=%.5f sutl=%.5f val=%.5f", epoch, train_loss, sutl, val)
        if decision.stop:
            log.info("ApproBiVT stop at epoch %d", epoch)
            break
    save_csv(ledger, out / LEDGER_FILE)
    write_checksums(out, digests)
    return ledger


def write_checksums(run_dir, ckpt_digests):
    run_dir = Path(run_dir)
    lines = [f"{_kernels.fnv1a64((run_dir / LEDGER_FILE).read_bytes()):016x}  {LEDGER_FILE}"]
    for name in sorted(ckpt_digests, key=lambda s: int(s.split("_")[1].split(".")[0])):
        lines.append(f"{ckpt_digests[name]:016x}  {name}")
    (run_dir / CHECKSUM_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")
