import warnings

import hypothesis
import pytest

hypothesis.settings.register_profile("deterministic", derandomize=True)
hypothesis.settings.load_profile("deterministic")


@pytest.fixture(autouse=True)
def _quiet_expected_warnings():
    # perturbativity and truncation advisories fire by design in several
    # stress-parameter tests; keep the signal-to-noise of the output high
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="g1 is not perturbative")
        yield
