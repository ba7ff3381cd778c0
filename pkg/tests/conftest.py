import hypothesis
import pytest

from capspec.certify import CertifyConfig, run_certificate

hypothesis.settings.register_profile(
    "ci", max_examples=120, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("ci")


# the paper-reproduction scenario: exact decimal boxes for the mode-8 crossing
RHO_BOX = ("0.594723480694931", "0.594723480694970")
LAM_BOX = ("154.191574494505", "154.191574494520")
A_BOX = ("0.47743656824152", "0.47743656824159")
NU_BOX = ("11.9274524539225", "11.9274524539232")
LAM_AUX = "154.1914"


@pytest.fixture(scope="session")
def default_certificate():
    """One full run of the default certificate, shared across tests."""
    return run_certificate(CertifyConfig())
