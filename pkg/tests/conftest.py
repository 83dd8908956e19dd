import pytest

from byzfc.decoder import build_decoder_config
from byzfc.examples_lib import (three_user_erasure_f_uv, three_user_erasure_f_uvw,
                                three_user_erasure_pmf)
from byzfc.structures import AdversaryStructure

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def erasure_pmf():
    return three_user_erasure_pmf()


@pytest.fixture(scope="session")
def erasure_f_uv():
    return three_user_erasure_f_uv()


@pytest.fixture(scope="session")
def erasure_f_uvw():
    return three_user_erasure_f_uvw()


@pytest.fixture(scope="session")
def threshold_3_2():
    return AdversaryStructure.threshold(3, 2)


@pytest.fixture(scope="session")
def erasure_config(erasure_pmf, erasure_f_uv, threshold_3_2):
    """Decoder config for the three-user example, shared across suites."""
    return build_decoder_config(erasure_pmf, erasure_f_uv, threshold_3_2, delta=0.1)
