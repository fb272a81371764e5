"""Command-line entry point.

Exit codes: 0 success, 1 operational error (one ``error: <kind>: <detail>``
line on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import _kernels
from .averaging import SCHEMES, resolve_plan, run_averaging
from .bv_oracle import CURVES_FILE, run_oracle
from .errors import CuratorError
from .ledger import EpochRecord, approbivt_score, load_csv
from .report import ablation, curves, resolve_endpoint, run_eval_set
from .rundir import verify_run
from .stopping import DEFAULT_PATIENCE, find_stop_point, trailing_run_length
from .toy.config import load_config
from .toy.trainer import LEDGER_FILE, train_run


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
        print(out)
    else:
        sys.stdout.write(text)


def cmd_train_toy(args):
    cfg = load_config(args.config, seed=args.seed)
    ledger = train_run(cfg, args.out)
    last = ledger.records[-1]
    print(f"epochs={len(ledger)} last_epoch={last.epoch} approbivt={approbivt_score(last)!r} out={args.out}")


def cmd_score(args):
    if args.ledger:
        print("epoch,approbivt")
        for r in load_csv(args.ledger):
            print(f"{r.epoch},{approbivt_score(r)!r}")
        return
    if args.sutl is None or args.val is None:
        raise SystemExit("score: give --sutl and --val, or --ledger")
    rec = EpochRecord(1, 0.0, args.sutl, args.val)
    print(repr(approbivt_score(rec)))


def cmd_stop_check(args):
    ledger = load_csv(args.ledger)
    losses = ledger.column(args.metric)
    idx = find_stop_point(losses, args.patience)
    if idx is None:
        print(f"CONTINUE run_length={trailing_run_length(list(losses))}")
    else:
        print(f"STOP epoch={ledger.records[idx].epoch}")


def cmd_average(args):
    ledger = load_csv(Path(args.run) / LEDGER_FILE)
    plan = resolve_plan(ledger, args.scheme, args.k, args.endpoint)
    meta = run_averaging(args.run, plan)
    print("epochs=" + ",".join(str(e) for e in plan.resolved_epochs))
    print(f"output={meta.path} digest={meta.digest_hex}")


def cmd_decompose(args):
    cfg = load_config(args.config, seed=args.seed)
    run_oracle(cfg, args.replicas, args.out, n_eval=args.n_eval)
    print(Path(args.out) / CURVES_FILE)


def cmd_report_curves(args):
    _emit(curves(load_csv(args.ledger), args.patience), args.out)


def _split(values):
    out = []
    for v in values:
        out.extend(t for t in v.split(",") if t)
    return out


def cmd_report_ablation(args):
    ledger = load_csv(Path(args.run) / LEDGER_FILE)
    endpoints = [resolve_endpoint(t, ledger, args.patience) for t in _split(args.endpoints)]
    ks = [int(k) for k in _split(args.ks)]
    grid = ablation(
        args.run, endpoints, ks, _split(args.schemes), run_eval_set(args.run),
        ledger=ledger, skip_infeasible=args.skip_infeasible,
    )
    _emit(grid.to_csv(), args.out)


def cmd_verify(args):
    problems = verify_run(args.run, reevaluate=not args.no_reeval)
    if problems:
        raise CuratorErrorWithLines(problems)
    print("OK")


class CuratorErrorWithLines(CuratorError):
    kind = "VerifyFailed"

    def __init__(self, lines):
        super().__init__(f"{len(lines)} problem(s): " + "; ".join(lines))


def build_parser():
    p = argparse.ArgumentParser(prog="ckpt-curator", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("train-toy", help="train the toy model, writing checkpoints and ledger.csv")
    s.add_argument("--config", required=True, help="key = value config file")
    s.add_argument("--out", required=True, help="run directory")
    s.add_argument("--seed", type=int, default=None, help="override seed (beats CKPT_CURATOR_SEED and the file)")
    s.set_defaults(func=cmd_train_toy)

    s = sub.add_parser("score", help="ApproBiVT score = SUTL + validation loss")
    s.add_argument("--sutl", type=float, help="sampled unaugmented training loss")
    s.add_argument("--val", type=float, help="validation loss")
    s.add_argument("--ledger", help="score every row of a ledger CSV instead")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("stop-check", help="run the stopping rule over a ledger")
    s.add_argument("--ledger", required=True)
    s.add_argument("--metric", choices=("approbivt", "val"), default="approbivt")
    s.add_argument("--patience", type=int, default=DEFAULT_PATIENCE, help="S: non-decreasing steps (default 5)")
    s.set_defaults(func=cmd_stop_check)

    s = sub.add_parser("average", help="average checkpoints selected by LK, KBVL or KBABVT")
    s.add_argument("--run", required=True, help="run directory")
    s.add_argument("--scheme", required=True, choices=SCHEMES)
    s.add_argument("-k", type=int, required=True, help="number of checkpoints")
    s.add_argument("--endpoint", type=int, default=None, help="only consider epochs <= this one")
    s.set_defaults(func=cmd_average)

    s = sub.add_parser("decompose", help="Monte Carlo bias-variance curves over training epochs")
    s.add_argument("--replicas", type=int, default=10)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--n-eval", type=int, default=None, help="evaluation samples (default: n_test)")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("report", help="emit plot-ready CSVs")
    rsub = s.add_subparsers(dest="report", required=True, metavar="KIND")
    r = rsub.add_parser("curves", help="loss curves with ApproBiVT column and summary footer")
    r.add_argument("--ledger", required=True)
    r.add_argument("--patience", type=int, default=DEFAULT_PATIENCE)
    r.add_argument("--out", default=None, help="write here instead of stdout")
    r.set_defaults(func=cmd_report_curves)
    r = rsub.add_parser("ablation", help="endpoint x scheme x k grid evaluated on the held-out split")
    r.add_argument("--run", required=True)
    r.add_argument(
        "--endpoints", nargs="+", default=["val-stop", "approbivt-stop"],
        help="epoch ids or last / val-stop / approbivt-stop (comma or space separated)",
    )
    r.add_argument("--ks", nargs="+", default=["5,10,20"])
    r.add_argument("--schemes", nargs="+", default=list(SCHEMES))
    r.add_argument("--patience", type=int, default=DEFAULT_PATIENCE)
    r.add_argument("--skip-infeasible", action="store_true", help="drop cells whose k exceeds the eligible epochs")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report_ablation)

    s = sub.add_parser("verify", help="check ledger, checkpoints and checksums agree")
    s.add_argument("--run", required=True)
    s.add_argument("--no-reeval", action="store_true", help="skip re-evaluating checkpoint losses")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    logging.getLogger(__name__).debug("kernel backend: %s", _kernels.backend())
    try:
        args.func(args)
    except CuratorError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IOError: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: ValueError: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
