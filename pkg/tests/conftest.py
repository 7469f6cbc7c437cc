import numpy as np
import pytest

from switchseq.ambiguity import AmbiguityGrid, TxAmbiguity
from switchseq.presets import default_config, reference_array
from switchseq.seqopt import AnnealParams, anneal
from switchseq.sounding import Sounder

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def ref_array():
    return reference_array()


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def amb_grid(config):
    return AmbiguityGrid.default(config)


@pytest.fixture(scope="session")
def tx_amb(ref_array, config, amb_grid):
    return TxAmbiguity(ref_array, config, amb_grid)


@pytest.fixture(scope="session")
def annealed(ref_array, config, amb_grid, tx_amb):
    """Annealing run with the default hyperparameters and seed."""
    return anneal(ref_array, config, amb_grid, AnnealParams(), amb=tx_amb)


@pytest.fixture(scope="session")
def optimized_schedule(annealed):
    return annealed.schedule


@pytest.fixture(scope="session")
def uniform_sounder(ref_array, config):
    return Sounder(config, ref_array, ref_array)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report(request):
    """Attach a measured-values line to the running acceptance criterion."""
    def _report(text):
        _ACCEPTANCE.setdefault(request.node.name, {})["detail"] = text
        print(text)
    return _report


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        crit = report.nodeid.split("::")[-1]
        _ACCEPTANCE.setdefault(crit, {})["outcome"] = report.outcome


def pytest_terminal_summary(terminalreporter):
    names = [k for k in _ACCEPTANCE if "outcome" in _ACCEPTANCE[k]]
    if not names:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(names, key=lambda n: int(n.split("_")[1][1:])):
        entry = _ACCEPTANCE[name]
        status = "PASS" if entry["outcome"] == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {entry.get('detail', '')}")
