"""Synthetic Gaussian-mixture classification data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SizeTooLarge

TRAIN, VALID, SUT, TEST = "train", "valid", "sut", "test"

# stream ids for SeedSequence spawn keys
_TASK, _DRAW, _TEST, _SUT = 0, 1, 2, 3


def rng_for(seed: int, *stream) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(stream)))


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray  # (n, n_features) f64
    labels: np.ndarray  # (n, n_classes) rows sum to 1
    split: str
    indices: np.ndarray | None = None  # rows of the parent set, for SUT subsets

    def __post_init__(self):
        if self.inputs.shape[0] == 0 or self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError("dataset must be non-empty with one label row per input")
        if not np.allclose(self.labels.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("label rows must sum to 1")

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def classes(self):
        return self.labels.argmax(axis=1)


class GaussianMixture:
    """Equal-weight mixture of unit-covariance Gaussians; means fixed by the task seed."""

    def __init__(self, n_features, n_classes, class_sep, task_seed):
        rng = rng_for(task_seed, _TASK)
        self.means = rng.standard_normal((n_classes, n_features)) * class_sep
        self.n_classes = n_classes

    @classmethod
    def from_config(cls, config):
        return cls(config.n_features, config.n_classes, config.class_sep, config.seed)

    def sample(self, n, rng):
        comp = rng.integers(0, self.n_classes, size=n)
        x = self.means[comp] + rng.standard_normal((n, self.means.shape[1]))
        return x, comp

    def posterior(self, x):
        """Bayes class posterior p(c | x) under equal priors."""
        logits = -0.5 * ((x[:, None, :] - self.means[None]) ** 2).sum(axis=2)
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        return p / p.sum(axis=1, keepdims=True)


def one_hot(idx, n_classes):
    out = np.zeros((len(idx), n_classes))
    out[np.arange(len(idx)), idx] = 1.0
    return out


def make_synthetic_dataset(config, seed=None):
    """Draw (train, valid) i.i.d. from the task mixture.

    The mixture means depend on ``config.seed`` only; ``seed`` controls the draw,
    so different seeds give independent training sets of the same task.
    """
    seed = config.seed if seed is None else seed
    gm = GaussianMixture.from_config(config)
    rng = rng_for(seed, _DRAW)
    x_tr, c_tr = gm.sample(config.n_train, rng)
    x_va, c_va = gm.sample(config.n_valid, rng)
    if config.label_noise_p > 0:
        flip = rng.random(config.n_train) < config.label_noise_p
        shift = rng.integers(1, config.n_classes, size=config.n_train)
        c_tr = np.where(flip, (c_tr + shift) % config.n_classes, c_tr)
    return (
        Dataset(x_tr, one_hot(c_tr, config.n_classes), TRAIN),
        Dataset(x_va, one_hot(c_va, config.n_classes), VALID),
    )


def make_test_set(config, n=None, soft=False):
    """Held-out evaluation set; ``soft`` labels are the Bayes posteriors."""
    gm = GaussianMixture.from_config(config)
    x, comp = gm.sample(n or config.n_test, rng_for(config.seed, _TEST))
    labels = gm.posterior(x) if soft else one_hot(comp, config.n_classes)
    return Dataset(x, labels, TEST)


def sample_unaugmented_subset(train: Dataset, size: int, seed: int) -> Dataset:
    """Fixed uniform subset without replacement, drawn once per run."""
    if size > len(train):
        raise SizeTooLarge(f"requested {size} samples from a training set of {len(train)}")
    if size < 1:
        raise ValueError("subset size must be positive")
    idx = rng_for(seed, _SUT).permutation(len(train))[:size]
    return Dataset(train.inputs[idx], train.labels[idx], SUT, indices=idx)
