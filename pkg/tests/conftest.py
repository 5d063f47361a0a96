import math

import pytest

from streamwave.model import Gain, ModelParams
from streamwave.stimulus import Stimulus

# reference heatmap parameters
REF = dict(a=2.0, b=2.8, theta=0.5, tau=0.025, tau_i=0.25, D=0.015)
REF_STIM = dict(TD=0.022, c=5.5, m=6)
# short-delay worked example parameters
SHORT = dict(a=1.0, b=2.0, theta=0.5, tau_i=0.2, D=0.01)
SHORT_STIM = dict(TD=0.03, c=5.0, m=6)


def ref_params(**kw) -> ModelParams:
    return ModelParams(**{**REF, "gain": Gain(30.0), **kw})


def short_params(tau: float = 0.001, **kw) -> ModelParams:
    return ModelParams(**{**SHORT, "tau": tau, "gain": Gain(None), **kw})


def short_stim(pr: float, df: float = 0.0) -> Stimulus:
    return Stimulus.from_pr(SHORT_STIM["TD"], pr, c=SHORT_STIM["c"], df=df, m=SHORT_STIM["m"])


def ref_stim(pr: float = 10.0, df: float = 0.0) -> Stimulus:
    return Stimulus.from_pr(REF_STIM["TD"], pr, c=REF_STIM["c"], df=df, m=REF_STIM["m"])


def close(x, y, tol):
    return math.isclose(x, y, rel_tol=0.0, abs_tol=tol)


@pytest.fixture
def ref():
    return ref_params()


# acceptance criterion number -> (passed, detail)
_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def report():
    def record(number: int, passed: bool, detail: str) -> None:
        _ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
