import numpy as np
import pytest

from properboost.losses import LOSS_NAMES, make_loss


@pytest.fixture(params=LOSS_NAMES)
def loss(request):
    return make_loss(request.param)


@pytest.fixture(params=[n for n in LOSS_NAMES if make_loss(n).symmetric])
def symmetric_loss(request):
    return make_loss(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[k])
