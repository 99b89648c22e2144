import hypothesis
import pytest

from expalign.benchmarks import fixtures

hypothesis.settings.register_profile(
    "suite", max_examples=25, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("suite")


@pytest.fixture(scope="session")
def fx():
    return fixtures()
