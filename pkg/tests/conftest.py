from pathlib import Path

import numpy as np
import pytest

from ckpt_curator.toy import load_config, train_run

ROOT = Path(__file__).resolve().parents[1]
REFERENCE_CFG = ROOT / "configs" / "reference.cfg"
ORACLE_CFG = ROOT / "configs" / "oracle.cfg"
GOLDEN = Path(__file__).resolve().parent / "golden"

# filled by test_acceptance, echoed after the run
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def reference_config():
    return load_config(REFERENCE_CFG, env=False)


@pytest.fixture(scope="session")
def reference_run(tmp_path_factory, reference_config):
    """The pinned reference training run: (run_dir, ledger)."""
    run_dir = tmp_path_factory.mktemp("reference_run")
    ledger = train_run(reference_config, run_dir)
    return run_dir, ledger


@pytest.fixture(scope="session")
def oracle_config():
    return load_config(ORACLE_CFG, env=False)


@pytest.fixture(scope="session")
def oracle_result(oracle_config):
    from ckpt_curator.bv_oracle import run_oracle

    return run_oracle(oracle_config, replicas=10)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
