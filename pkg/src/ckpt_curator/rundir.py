"""Run-directory consistency checks (``verify`` subcommand)."""

from __future__ import annotations

from pathlib import Path

from . import _kernels
from .averaging import list_checkpoints
from .errors import CuratorError
from .ledger import load_csv
from .tensor_store import checkpoint_meta, read_checkpoint
from .toy.config import load_config
from .toy.mlp import Model, evaluate
from .toy.trainer import CHECKSUM_FILE, CONFIG_FILE, LEDGER_FILE, prepare

LOSS_TOL = 1e-12


def _read_checksums(path):
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            digest, name = line.split(None, 1)
            out[name.strip()] = int(digest, 16)
    return out


def verify_run(run_dir, reevaluate=True) -> list[str]:
    """Return a list of problems; empty means the run directory is consistent."""
    run_dir = Path(run_dir)
    problems = []
    try:
        ledger = load_csv(run_dir / LEDGER_FILE)
    except (OSError, CuratorError) as exc:
        return [f"ledger unreadable: {exc}"]
    ckpts = list_checkpoints(run_dir)
    in_ledger = set(ledger.epochs)
    for e in sorted(in_ledger - set(ckpts)):
        problems.append(f"epoch {e}: checkpoint file missing")
    for e in sorted(set(ckpts) - in_ledger):
        problems.append(f"epoch {e}: checkpoint has no ledger row")

    sums_path = run_dir / CHECKSUM_FILE
    if sums_path.is_file():
        for name, digest in _read_checksums(sums_path).items():
            path = run_dir / name
            if not path.is_file():
                continue  # reported above for checkpoints
            try:
                actual = (
                    _kernels.fnv1a64(path.read_bytes()) if name == LEDGER_FILE else checkpoint_meta(path).content_digest
                )
            except CuratorError as exc:
                problems.append(f"{name}: unreadable ({exc})")
                continue
            if actual != digest:
                problems.append(f"{name}: digest {actual:016x} != recorded {digest:016x}")
    else:
        problems.append(f"{CHECKSUM_FILE} missing")

    if reevaluate and (run_dir / CONFIG_FILE).is_file():
        _, valid, sut = prepare(load_config(run_dir / CONFIG_FILE, env=False))
        for rec in ledger:
            path = ckpts.get(rec.epoch)
            if path is None:
                continue
            try:
                model = Model.from_tensormap(read_checkpoint(path))
            except CuratorError as exc:
                problems.append(f"epoch {rec.epoch}: unreadable checkpoint ({exc})")
                continue
            sutl, val = evaluate(model, sut).loss, evaluate(model, valid).loss
            if abs(sutl - rec.sutl) > LOSS_TOL or abs(val - rec.val_loss) > LOSS_TOL:
                problems.append(
                    f"epoch {rec.epoch}: ledger (sutl={rec.sutl!r}, val={rec.val_loss!r}) "
                    f"!= re-evaluated (sutl={sutl!r}, val={val!r})"
                )
    return problems
