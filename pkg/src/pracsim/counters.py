"""Ground-truth per-row activation counters with alert-driven mitigation.

Counters are 1-byte saturating values laid out as one numpy array per
device: shape (banks, counter_rows, bytes_per_row).  Servicing a counter
request applies its pending increments in one read-modify-write; a value
crossing the back-off threshold raises an alert, which mitigates (and
resets) that counter.  Additional refreshes granted per alert, and the
periodic proactive refresh, always target the currently largest counter
in the bank, modeling an ideal mitigation queue.
"""

from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .geometry import CounterRef, DramGeometry

COUNTER_MAX = 255
BASE_BACKOFF = 32


class CounterArray:
    """Stored counter values for every bank, plus alert bookkeeping.

    ``n_bo`` is the effective back-off threshold; None disables the
    alert path entirely (counters still accumulate and saturate).
    ``slot`` is maintained by the caller so recorded events carry time.
    """

    def __init__(
        self,
        geometry: DramGeometry,
        n_bo: Optional[int] = None,
        rfms_per_alert: int = 1,
        record_events: bool = False,
    ):
        if n_bo is not None and not 1 <= n_bo <= COUNTER_MAX:
            raise ConfigError(f"n_bo must be in [1, {COUNTER_MAX}], got {n_bo}")
        if rfms_per_alert < 1:
            raise ConfigError(f"rfms_per_alert must be positive, got {rfms_per_alert}")
        self.geometry = geometry
        self.n_bo = n_bo
        self.rfms_per_alert = rfms_per_alert
        self.values = np.zeros(
            (
                geometry.banks,
                geometry.counter_rows_per_bank,
                geometry.counters_per_counter_row,
            ),
            dtype=np.uint8,
        )
        self.alerts = 0
        self.mitigations = 0
        self.slot = -1
        self.events: Optional[List[tuple]] = [] if record_events else None
        self._nonzero = [0] * geometry.banks

    def get(self, bank: int, row_id: int, byte_id: int) -> int:
        return int(self.values[bank, row_id, byte_id])

    def _set(self, bank: int, row_id: int, byte_id: int, value: int) -> None:
        old = int(self.values[bank, row_id, byte_id])
        if old == 0 and value > 0:
            self._nonzero[bank] += 1
        elif old > 0 and value == 0:
            self._nonzero[bank] -= 1
        self.values[bank, row_id, byte_id] = value

    def apply_rmw(self, bank: int, row_id: int, byte_id: int, increments: int = 1) -> int:
        """Add pending increments to one counter; returns the post-add value.

        The returned value is pre-reset: if it crossed the threshold the
        stored counter has already been mitigated back to zero.
        """
        if increments < 0:
            raise ConfigError(f"increments must be non-negative, got {increments}")
        value = min(COUNTER_MAX, int(self.values[bank, row_id, byte_id]) + increments)
        self._set(bank, row_id, byte_id, value)
        if self.n_bo is not None and value >= self.n_bo:
            self._alert(bank, row_id, byte_id, value)
        return value

    def apply_writeback(self, bank: int, row_id: int, byte_id: int, value: int) -> int:
        """Overwrite one counter with an absolute value, alert check included."""
        if not 0 <= value <= COUNTER_MAX:
            raise ConfigError(f"writeback value {value} out of range [0, {COUNTER_MAX}]")
        self._set(bank, row_id, byte_id, value)
        if self.n_bo is not None and value >= self.n_bo:
            self._alert(bank, row_id, byte_id, value)
        return value

    def external_alert(self, bank: int, row_id: int, byte_id: int, value: int) -> None:
        """Alert raised by a cached copy of this counter crossing the threshold.

        The reset writes through: the stored counter is mitigated along
        with the cached copy the caller resets.
        """
        self._alert(bank, row_id, byte_id, value)

    def _alert(self, bank: int, row_id: int, byte_id: int, value: int) -> None:
        self.alerts += 1
        if self.events is not None:
            self.events.append(("alert", self.slot, bank, row_id, byte_id, value))
        self._mitigate(bank, row_id, byte_id)
        for _ in range(self.rfms_per_alert - 1):
            if self._mitigate_max(bank) is None:
                break

    def _mitigate(self, bank: int, row_id: int, byte_id: int) -> None:
        self._set(bank, row_id, byte_id, 0)
        self.mitigations += 1
        if self.events is not None:
            self.events.append(("mitigation", self.slot, bank, row_id, byte_id))

    def _mitigate_max(self, bank: int) -> Optional[CounterRef]:
        """Mitigate the largest counter of ``bank``; None if the bank is clean.

        Ties break toward the lowest (row_id, byte_id): numpy argmax
        returns the first maximum in row-major order.
        """
        if self._nonzero[bank] == 0:
            return None
        flat = int(self.values[bank].argmax())
        row_id, byte_id = divmod(flat, self.geometry.counters_per_counter_row)
        self._mitigate(bank, row_id, byte_id)
        return CounterRef(bank, row_id, byte_id)

    def proactive_tick(self, bank: int) -> Optional[CounterRef]:
        """Periodic refresh: mitigate the bank's current maximum counter.

        Counts as one mitigation and zero alerts; a no-op on a clean bank.
        """
        return self._mitigate_max(bank)

    def nonzero_count(self, bank: int) -> int:
        return self._nonzero[bank]

    def state_equal(self, other: "CounterArray") -> bool:
        return np.array_equal(self.values, other.values)

    def nonzero_items(self) -> List[Tuple[int, int, int, int]]:
        """All nonzero counters as (bank, row_id, byte_id, value), sorted."""
        banks, rows, bytes_ = np.nonzero(self.values)
        out = []
        for b, r, c in zip(banks.tolist(), rows.tolist(), bytes_.tolist()):
            out.append((b, r, c, int(self.values[b, r, c])))
        return out

    def dump(self, stream) -> None:
        """Write nonzero counters as CSV: bank,row_id,byte_id,value."""
        stream.write("bank,row_id,byte_id,value\n")
        for b, r, c, v in self.nonzero_items():
            stream.write(f"{b},{r},{c},{v}\n")


def effective_backoff(design: str, k_limit: int) -> int:
    """Back-off threshold lowered by the worst-case buffered staleness.

    The baseline design services every request immediately and keeps the
    full threshold; buffered designs give up ``k_limit`` of headroom so a
    counter whose updates are maximally stale still alerts in time.
    """
    if design == "chronus":
        return BASE_BACKOFF
    adjusted = BASE_BACKOFF - k_limit
    if adjusted < 1:
        raise ConfigError(
            f"k_limit {k_limit} leaves no alert headroom below {BASE_BACKOFF}"
        )
    return adjusted
