import pytest

from clusterselect.dataset import synth_blobs


@pytest.fixture
def two_blobs():
    """Two tight blobs ten units apart, five points each, with their generating partition."""
    return synth_blobs([[0.0, 0.0], [10.0, 10.0]], 5, sd=0.01, seed=1)


@pytest.fixture
def three_blobs():
    return synth_blobs([[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]], 20, sd=0.5, seed=2)
