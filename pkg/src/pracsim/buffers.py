"""Counter-request buffers: per-activation baseline and coalescing designs.

Counter updates queue in a small buffer and are serviced in batches, one
batch at most in the shadow of each data activation.  An entry records
how many repeated activations it has absorbed; batches are bounded by
the per-row burst size M.  Three conditions trigger service, in
priority order:

  k_limit      an entry's pending updates reached the staleness limit K,
               so its whole row is flushed before counters drift too far
  buffer_full  an insertion found no free slot; a victim row chosen by
               the design is flushed to make room
  m_ready      a row accumulated M entries and is serviced as one batch

A row that reaches M entries while the current shadow is already taken
(the insertion that filled it also evicted a victim, or a cache
writeback landed in it) is held and serviced at the next opportunity.

The designs differ only in victim selection: per-row buffers never fill
a shared pool, FCFS evicts the row of the oldest entry, sorted eviction
picks the row with the most entries, and approx-max tracks a running
(row, count) pair instead of sorting.
"""

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

from .errors import ConfigError

TRIG_M_READY = "m_ready"
TRIG_BUFFER_FULL = "buffer_full"
TRIG_K_LIMIT = "k_limit"
TRIG_DRAIN = "drain"

TRIGGERS = (TRIG_M_READY, TRIG_BUFFER_FULL, TRIG_K_LIMIT, TRIG_DRAIN)

DESIGNS = ("chronus", "perrow", "unified_fcfs", "unified_sorted", "unified_approxmax")

K_TRIGGER_MODES = ("pending", "repcount")


@dataclass(frozen=True)
class BufferConfig:
    """Shared buffer parameters; ``capacity`` is ignored by per-row buffers."""

    design: str = "unified_approxmax"
    capacity: int = 64
    m_batch: int = 4
    k_limit: int = 4
    k_trigger: str = "pending"

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ConfigError(f"unknown design {self.design!r}, expected one of {DESIGNS}")
        if self.m_batch < 1:
            raise ConfigError(f"m_batch must be positive, got {self.m_batch}")
        if self.k_limit < 1:
            raise ConfigError(f"k_limit must be positive, got {self.k_limit}")
        if self.capacity < self.m_batch:
            raise ConfigError(
                f"capacity {self.capacity} must be at least m_batch {self.m_batch}"
            )
        if self.k_trigger not in K_TRIGGER_MODES:
            raise ConfigError(
                f"unknown k_trigger {self.k_trigger!r}, expected one of {K_TRIGGER_MODES}"
            )


class BatchItem(NamedTuple):
    """One serviced counter: pending increments and an optional absolute write.

    A writeback that coalesced with queued increments yields a single
    item; the absolute value is written first, then the increments.
    """

    byte_id: int
    increments: int
    wb_value: Optional[int] = None


class ServiceBatch(NamedTuple):
    """One counter-row activation worth of work."""

    bank: int
    row_id: int
    items: Tuple[BatchItem, ...]
    trigger: str


class _Entry:
    __slots__ = ("row_id", "byte_id", "rep_count", "is_wb", "wb_value", "arrival")

    def __init__(self, row_id, byte_id, is_wb, wb_value, arrival):
        self.row_id = row_id
        self.byte_id = byte_id
        self.rep_count = 0
        self.is_wb = is_wb
        self.wb_value = wb_value
        self.arrival = arrival


class RequestBuffer:
    """Interface shared by all designs; one instance per bank."""

    def __init__(self, bank: int, config: BufferConfig):
        self.bank = bank
        self.config = config

    def insert(self, row_id: int, byte_id: int) -> Optional[ServiceBatch]:
        """Queue one activation's counter update; maybe service a batch."""
        raise NotImplementedError

    def try_insert_writeback(self, row_id: int, byte_id: int, value: int) -> bool:
        """Queue an absolute counter write; False if no slot can take it."""
        raise NotImplementedError

    def victim_row(self) -> int:
        """The row this design would evict next; buffer must be nonempty."""
        raise NotImplementedError

    def drain(self) -> List[ServiceBatch]:
        """Flush everything in deterministic order (rows ascending)."""
        raise NotImplementedError

    def __len__(self) -> int:
        raise NotImplementedError


class ChronusBuffer(RequestBuffer):
    """Baseline: every activation's counter update is serviced on the spot."""

    def insert(self, row_id, byte_id):
        return ServiceBatch(
            self.bank, row_id, (BatchItem(byte_id, 1),), TRIG_M_READY
        )

    def try_insert_writeback(self, row_id, byte_id, value):
        raise RuntimeError("the immediate-service baseline takes no writebacks")

    def victim_row(self):
        raise RuntimeError("the immediate-service baseline holds no entries")

    def drain(self):
        return []

    def __len__(self):
        return 0


class _BufferedBase(RequestBuffer):
    """Common machinery for all coalescing designs.

    Entries are kept per row as {(byte_id, is_wb): entry}; ``_capacity``
    None means no shared pool (per-row design).  ``_full_rows`` holds
    rows at M entries whose service had to be deferred.
    """

    _capacity: Optional[int]

    def __init__(self, bank, config):
        super().__init__(bank, config)
        self._rows: Dict[int, Dict[tuple, _Entry]] = {}
        self._total = 0
        self._arrival = 0
        self._full_rows = set()
        self._capacity = config.capacity
        # Pending updates at which an entry forces a row flush.
        if config.k_trigger == "pending":
            self._pending_limit = config.k_limit
        else:
            self._pending_limit = config.k_limit + 1

    def __len__(self):
        return self._total

    def entry_counts(self) -> Dict[int, int]:
        """Rows currently buffered and how many entries each holds."""
        return {row: len(entries) for row, entries in self._rows.items()}

    def insert(self, row_id, byte_id):
        entries = self._rows.get(row_id)
        if entries is not None:
            entry = entries.get((byte_id, False))
            if entry is not None:
                entry.rep_count += 1
                self._after_insert(row_id)
                if entry.rep_count + 1 >= self._pending_limit:
                    return self._flush_row(row_id, TRIG_K_LIMIT)
                return self._service_deferred()
        if row_id in self._full_rows:
            # Deferred from an earlier shadow; service it before growing it.
            batch = self._flush_row(row_id, TRIG_M_READY)
            self._allocate(row_id, byte_id)
            return batch
        if self._capacity is not None and self._total >= self._capacity:
            batch = self._flush_row(self._victim_row(), TRIG_BUFFER_FULL)
            self._allocate(row_id, byte_id)
            return batch
        self._allocate(row_id, byte_id)
        if self._pending_limit <= 1:
            return self._flush_row(row_id, TRIG_K_LIMIT)
        if len(self._rows[row_id]) >= self.config.m_batch:
            return self._flush_row(row_id, TRIG_M_READY)
        return self._service_deferred()

    def try_insert_writeback(self, row_id, byte_id, value):
        entries = self._rows.get(row_id)
        if entries is not None:
            existing = entries.get((byte_id, True))
            if existing is not None:
                existing.wb_value = value
                return True
        count = len(entries) if entries is not None else 0
        if count >= self.config.m_batch:
            return False
        if self._capacity is not None and self._total >= self._capacity:
            return False
        self._allocate(row_id, byte_id, is_wb=True, wb_value=value)
        if len(self._rows[row_id]) >= self.config.m_batch:
            self._full_rows.add(row_id)
        return True

    def victim_row(self):
        if self._total == 0:
            raise RuntimeError("victim_row on an empty buffer")
        return self._victim_row()

    def drain(self):
        batches = []
        for row_id in sorted(self._rows):
            items = _merge_items(self._rows[row_id])
            m = self.config.m_batch
            for start in range(0, len(items), m):
                batches.append(
                    ServiceBatch(
                        self.bank, row_id, tuple(items[start : start + m]), TRIG_DRAIN
                    )
                )
        self._rows.clear()
        self._total = 0
        self._full_rows.clear()
        self._reset_metadata()
        return batches

    def _allocate(self, row_id, byte_id, is_wb=False, wb_value=None):
        entries = self._rows.get(row_id)
        if entries is None:
            entries = self._rows[row_id] = {}
        entries[(byte_id, is_wb)] = _Entry(
            row_id, byte_id, is_wb, wb_value, self._arrival
        )
        self._arrival += 1
        self._total += 1
        if len(entries) >= self.config.m_batch:
            self._full_rows.add(row_id)
        self._after_insert(row_id)

    def _flush_row(self, row_id, trigger):
        entries = self._rows.pop(row_id)
        self._total -= len(entries)
        self._full_rows.discard(row_id)
        batch = ServiceBatch(
            self.bank, row_id, tuple(_merge_items(entries)), trigger
        )
        self._after_flush(row_id)
        return batch

    def _service_deferred(self):
        if self._full_rows:
            return self._flush_row(min(self._full_rows), TRIG_M_READY)
        return None

    # Design-specific hooks.

    def _victim_row(self) -> int:
        raise NotImplementedError

    def _after_insert(self, row_id) -> None:
        pass

    def _after_flush(self, row_id) -> None:
        pass

    def _reset_metadata(self) -> None:
        pass

    def _oldest_entry(self) -> Optional[_Entry]:
        best = None
        for entries in self._rows.values():
            for entry in entries.values():
                if best is None or entry.arrival < best.arrival:
                    best = entry
        return best


def _merge_items(entries: Dict[tuple, _Entry]) -> List[BatchItem]:
    """Collapse a row's entries into batch items, oldest first.

    An increment entry carries rep_count + 1 pending updates.  A
    writeback and an increment entry for the same byte merge into one
    item keyed at the earlier arrival.
    """
    by_byte: Dict[int, list] = {}
    for entry in sorted(entries.values(), key=lambda e: e.arrival):
        pending = 0 if entry.is_wb else entry.rep_count + 1
        slot = by_byte.get(entry.byte_id)
        if slot is None:
            by_byte[entry.byte_id] = [
                entry.arrival,
                pending,
                entry.wb_value if entry.is_wb else None,
            ]
        else:
            slot[1] += pending
            if entry.is_wb:
                slot[2] = entry.wb_value
    merged = sorted(by_byte.items(), key=lambda kv: kv[1][0])
    return [BatchItem(byte_id, inc, wb) for byte_id, (_, inc, wb) in merged]


class PerRowBuffer(_BufferedBase):
    """One M-entry buffer per counter row; no shared pool to fill."""

    def __init__(self, bank, config):
        super().__init__(bank, config)
        self._capacity = None

    def _victim_row(self):
        raise RuntimeError("per-row buffers never evict")


class UnifiedFcfsBuffer(_BufferedBase):
    """Shared pool; eviction flushes the row of the oldest buffered entry."""

    def _victim_row(self):
        return self._oldest_entry().row_id


class UnifiedSortedBuffer(_BufferedBase):
    """Shared pool; eviction flushes the row with the most entries.

    Ties break toward the lowest row id.
    """

    def _victim_row(self):
        return max(self._rows.items(), key=lambda kv: (len(kv[1]), -kv[0]))[0]


class UnifiedApproxMaxBuffer(_BufferedBase):
    """Shared pool; a tracked (row, count) pair approximates the sorted pick.

    Every insertion compares the inserted row's recomputed entry count
    against the tracked count and promotes on strict improvement.  When
    the tracked row's entries leave the buffer, the pair defaults to the
    oldest remaining entry's row, so the estimate can go stale low until
    later insertions catch it up.
    """

    def __init__(self, bank, config):
        super().__init__(bank, config)
        self._meta_row: Optional[int] = None
        self._meta_count = 0

    def _victim_row(self):
        return self._meta_row

    def _after_insert(self, row_id):
        count = len(self._rows[row_id])
        if count > self._meta_count:
            self._meta_row = row_id
            self._meta_count = count

    def _after_flush(self, row_id):
        if row_id != self._meta_row:
            return
        if self._total == 0:
            self._reset_metadata()
            return
        oldest = self._oldest_entry()
        self._meta_row = oldest.row_id
        self._meta_count = len(self._rows[oldest.row_id])

    def _reset_metadata(self):
        self._meta_row = None
        self._meta_count = 0


_DESIGN_CLASSES = {
    "chronus": ChronusBuffer,
    "perrow": PerRowBuffer,
    "unified_fcfs": UnifiedFcfsBuffer,
    "unified_sorted": UnifiedSortedBuffer,
    "unified_approxmax": UnifiedApproxMaxBuffer,
}


def make_buffer(bank: int, config: BufferConfig) -> RequestBuffer:
    """Instantiate the configured design for one bank."""
    return _DESIGN_CLASSES[config.design](bank, config)
