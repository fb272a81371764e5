"""Loss-ledger driven early stopping and checkpoint averaging (ApproBiVT recipe)."""

from .averaging import AveragingPlan, average, resolve_plan, run_averaging
from .ledger import EpochRecord, Ledger, approbivt_score, k_best, load_csv, save_csv
from .stopping import Decision, StoppingMonitor, find_stop_point
from .tensor_store import TensorMap, read_checkpoint, validate_compatible, write_checkpoint

__version__ = "0.1.0"

__all__ = [
    "AveragingPlan",
    "Decision",
    "EpochRecord",
    "Ledger",
    "StoppingMonitor",
    "TensorMap",
    "approbivt_score",
    "average",
    "find_stop_point",
    "k_best",
    "load_csv",
    "read_checkpoint",
    "resolve_plan",
    "run_averaging",
    "save_csv",
    "validate_compatible",
    "write_checkpoint",
]
