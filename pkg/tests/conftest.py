"""Shared fixtures: one profile build per session, small reusable networks."""

import pytest

from alphaduplex import default_profile


@pytest.fixture(scope="session")
def profile():
    return default_profile()
