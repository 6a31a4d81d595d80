import pytest

from soliton_lab import fixtures


@pytest.fixture(scope="session")
def koiso_chart():
    """Assembled 4-dimensional soliton chart, shared across the session."""
    return fixtures.calabi_fixture("koiso-m2-A1B0")
