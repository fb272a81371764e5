from .config import TrainConfig, format_config, load_config, parse_config
from .data import (
    Dataset,
    GaussianMixture,
    make_synthetic_dataset,
    make_test_set,
    sample_unaugmented_subset,
)
from .mlp import EvalResult, Model, evaluate, loss_and_grads
from .trainer import iter_epochs, prepare, train_run

__all__ = [
    "Dataset",
    "EvalResult",
    "GaussianMixture",
    "Model",
    "TrainConfig",
    "evaluate",
    "format_config",
    "iter_epochs",
    "load_config",
    "loss_and_grads",
    "make_synthetic_dataset",
    "make_test_set",
    "parse_config",
    "prepare",
    "sample_unaugmented_subset",
    "train_run",
]
