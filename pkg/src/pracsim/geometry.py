"""DRAM organization and the data-row to counter-slot mapping.

Each bank reserves a small region of counter rows; every data row owns
one 1-byte activation counter in that region.  Consecutive data rows
map to consecutive bytes of the same counter row, so one counter row
covers ``counters_per_counter_row`` data rows.
"""

from dataclasses import dataclass
from typing import NamedTuple

from .errors import GeometryError

ROW_ID_BITS = 6
BYTE_ID_BITS = 10


@dataclass(frozen=True)
class DramGeometry:
    """Shape of the simulated DRAM and its per-bank counter region."""

    banks: int = 64
    rows_per_bank: int = 65536
    counter_rows_per_bank: int = 64
    counters_per_counter_row: int = 1024

    def __post_init__(self):
        if self.banks < 1:
            raise GeometryError("banks must be at least 1")
        if not 1 <= self.counter_rows_per_bank <= (1 << ROW_ID_BITS):
            raise GeometryError(
                f"counter_rows_per_bank must be in [1, {1 << ROW_ID_BITS}] "
                f"(row ids are {ROW_ID_BITS} bits), got {self.counter_rows_per_bank}"
            )
        if not 1 <= self.counters_per_counter_row <= (1 << BYTE_ID_BITS):
            raise GeometryError(
                f"counters_per_counter_row must be in [1, {1 << BYTE_ID_BITS}] "
                f"(byte ids are {BYTE_ID_BITS} bits), got {self.counters_per_counter_row}"
            )
        expected = self.counter_rows_per_bank * self.counters_per_counter_row
        if self.rows_per_bank != expected:
            raise GeometryError(
                f"rows_per_bank ({self.rows_per_bank}) must equal "
                f"counter_rows_per_bank * counters_per_counter_row ({expected})"
            )

    @property
    def counters_per_bank(self) -> int:
        return self.rows_per_bank


class CounterRef(NamedTuple):
    """Location of one activation counter: bank, counter row, byte slot."""

    bank: int
    row_id: int
    byte_id: int


def map_row(geometry: DramGeometry, bank: int, data_row: int) -> CounterRef:
    """Return the counter tracking ``data_row`` of ``bank``.

    The mapping is the bijection row_id = data_row // counters_per_counter_row,
    byte_id = data_row % counters_per_counter_row.
    """
    if not 0 <= bank < geometry.banks:
        raise GeometryError(f"bank {bank} out of range [0, {geometry.banks})")
    if not 0 <= data_row < geometry.rows_per_bank:
        raise GeometryError(
            f"data_row {data_row} out of range [0, {geometry.rows_per_bank})"
        )
    row_id, byte_id = divmod(data_row, geometry.counters_per_counter_row)
    return CounterRef(bank, row_id, byte_id)


def unmap(geometry: DramGeometry, ref: CounterRef) -> int:
    """Inverse of :func:`map_row`: the data row tracked by ``ref``."""
    if not 0 <= ref.row_id < geometry.counter_rows_per_bank:
        raise GeometryError(
            f"row_id {ref.row_id} out of range [0, {geometry.counter_rows_per_bank})"
        )
    if not 0 <= ref.byte_id < geometry.counters_per_counter_row:
        raise GeometryError(
            f"byte_id {ref.byte_id} out of range [0, {geometry.counters_per_counter_row})"
        )
    return ref.row_id * geometry.counters_per_counter_row + ref.byte_id
