"""Monte Carlo bias-variance decomposition of cross-entropy.

The average predictor is the normalized geometric mean of the replica outputs,
``ybar = exp(mean_r log p_r) / Z``. With the expectation over training sets
taken as the empirical mean over replicas, the per-sample identity
``error = noise + bias + variance`` is exact, and ``variance = -ln Z``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import EmptyEnsemble, MismatchedEpochs, NonDistribution
from .toy.config import TrainConfig
from .toy.data import make_synthetic_dataset, make_test_set
from .toy.trainer import iter_epochs

log = logging.getLogger(__name__)

EPS = 1e-12
LOG_EPS = np.log(EPS)
CURVES_FILE = "bv_curves.csv"
LOSSES_FILE = "replica_losses.csv"
CURVE_COLUMNS = ("epoch", "noise", "bias", "variance", "error")


@dataclass(frozen=True)
class BVDecomposition:
    noise: float
    bias: float
    variance: float
    error: float
    Z: float

    @property
    def residual(self):
        return self.error - (self.noise + self.bias + self.variance)


def _check_distribution(p, what):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise NonDistribution(f"{what} is not a probability vector")
    if abs(p.sum() - 1.0) > 1e-9:
        raise NonDistribution(f"{what} sums to {p.sum()!r}")
    return p


def _clamped_logs(preds):
    if len(preds) == 0:
        raise EmptyEnsemble("need at least one replica prediction")
    arr = np.stack([_check_distribution(p, f"prediction {i}") for i, p in enumerate(preds)])
    return np.log(np.maximum(arr, EPS))


def average_predictor(preds):
    """Return ``(ybar, Z)`` for a list of class distributions."""
    logs = _clamped_logs(preds)
    mean_log = logs.mean(axis=0)
    top = mean_log.max()
    z_scaled = np.exp(mean_log - top).sum()
    log_z = top + np.log(z_scaled)
    return np.exp(mean_log - log_z), float(np.exp(log_z))


def decompose(y, preds) -> BVDecomposition:
    y = _check_distribution(y, "target")
    logs = _clamped_logs(preds)
    if logs.shape[1] != y.size:
        raise NonDistribution(f"target has {y.size} classes, predictions have {logs.shape[1]}")
    noise, bias, var, err, log_z = _kernels.bv_terms(y[None, :], logs[:, None, :])
    return BVDecomposition(float(noise[0]), float(bias[0]), float(var[0]), float(err[0]), float(np.exp(log_z[0])))


@dataclass
class ReplicaEnsemble:
    epoch: int
    replicas: list

    def __post_init__(self):
        if len(self.replicas) < 1:
            raise EmptyEnsemble(f"epoch {self.epoch}: empty ensemble")

    def log_preds(self, inputs):
        """(R, n, C) clamped log-probabilities on ``inputs``."""
        return np.stack([np.maximum(m.log_proba(inputs), LOG_EPS) for m in self.replicas])


@dataclass(frozen=True)
class CurveRow:
    epoch: int
    noise: float
    bias: float
    variance: float
    error: float


def decompose_set(labels, ensembles) -> list[CurveRow]:
    """Per-epoch sample means of the decomposition over an evaluation set."""
    rows = []
    n_rep = None
    for ens in ensembles:
        if n_rep is None:
            n_rep = len(ens.replicas)
        elif len(ens.replicas) != n_rep:
            raise MismatchedEpochs(f"epoch {ens.epoch} has {len(ens.replicas)} replicas, expected {n_rep}")
        if rows and ens.epoch <= rows[-1].epoch:
            raise MismatchedEpochs(f"epoch {ens.epoch} follows epoch {rows[-1].epoch}")
        noise, bias, var, err, _ = _kernels.bv_terms(labels.labels, ens.log_preds(labels.inputs))
        rows.append(CurveRow(ens.epoch, float(noise.mean()), float(bias.mean()), float(var.mean()), float(err.mean())))
    return rows


def ensembles_from_snapshots(snapshots, epochs=None):
    """Regroup per-replica snapshot lists (replica-major) into per-epoch ensembles."""
    lengths = {len(s) for s in snapshots}
    if len(lengths) != 1:
        raise MismatchedEpochs(f"replicas have differing snapshot counts {sorted(lengths)}")
    n = lengths.pop()
    epochs = list(epochs) if epochs is not None else list(range(1, n + 1))
    if len(epochs) != n:
        raise MismatchedEpochs("epoch labels do not match snapshot count")
    return [ReplicaEnsemble(e, [s[i] for s in snapshots]) for i, e in enumerate(epochs)]


def replica_seed(config: TrainConfig, r: int) -> int:
    return int(np.random.SeedSequence([config.seed, 7919, r]).generate_state(1, np.uint64)[0])


@dataclass
class OracleResult:
    curves: list
    train_loss: np.ndarray  # (epochs,) mean over replicas
    replicas: int


def run_oracle(config: TrainConfig, replicas: int = 10, out_dir=None, n_eval=None) -> OracleResult:
    """Train ``replicas`` models in lockstep on independent draws and decompose every epoch.

    Evaluation targets are the Bayes posteriors of a shared held-out set, so the
    noise term is the true intrinsic noise. Early stopping is not applied.
    """
    if replicas < 2:
        raise ValueError("the oracle needs at least two replicas")
    eval_set = make_test_set(config, n=n_eval, soft=True)
    runs = []
    for r in range(replicas):
        seed = replica_seed(config, r)
        train, _ = make_synthetic_dataset(config, seed=seed)
        runs.append(iter_epochs(config, train, seed=seed))

    curves, train_loss = [], []
    for steps in zip(*runs):
        epoch = steps[0][0]
        ens = ReplicaEnsemble(epoch, [model for _, model, _ in steps])
        curves.extend(decompose_set(eval_set, [ens]))
        train_loss.append(float(np.mean([tl for _, _, tl in steps])))
        if epoch % 50 == 0:
            log.info("oracle epoch %d: bias=%.4f variance=%.4f", epoch, curves[-1].bias, curves[-1].variance)

    result = OracleResult(curves, np.array(train_loss), replicas)
    if out_dir is not None:
        write_oracle(result, out_dir)
    return result


def write_curves(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for r in rows:
            w.writerow([r.epoch] + [f"{v:.17g}" for v in (r.noise, r.bias, r.variance, r.error)])


def write_oracle(result: OracleResult, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_curves(result.curves, out / CURVES_FILE)
    with open(out / LOSSES_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("epoch", "train_loss"))
        for row, tl in zip(result.curves, result.train_loss):
            w.writerow([row.epoch, f"{tl:.17g}"])
