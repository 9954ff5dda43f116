import pytest

from pracsim.geometry import DramGeometry


@pytest.fixture
def geometry():
    """Default full-size device."""
    return DramGeometry()


@pytest.fixture
def toy_geometry():
    """Small device for exhaustive sweeps: 2 banks, 4x4 counters."""
    return DramGeometry(
        banks=2, rows_per_bank=16, counter_rows_per_bank=4, counters_per_counter_row=4
    )
