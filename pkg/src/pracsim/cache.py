"""Optional byte-granular counter cache in front of the request buffer.

A hit absorbs the increment entirely inside the cache (no buffer
insertion, no counter-row activation); the cached copy is the live
value and the stored counter goes stale until the line is written back.
Lines are installed only when a serviced counter already proved warm,
i.e. after its batch applies, never on the miss itself.  Fills are best
effort: if the displaced dirty line's writeback cannot take a buffer
slot, the fill is abandoned rather than losing the delta.

Two kinds are provided: plain 4-way set-associative LRU, and the same
structure gated by a frequency-sketch admission filter that only evicts
a line for a candidate that has been seen more often.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional

from .errors import ConfigError
from .geometry import DramGeometry

CACHE_KINDS = ("none", "lru4way", "tinylfu")
ASSOC = 4
SKETCH_CAP = 15
_M64 = (1 << 64) - 1
_SEED_BASE = 0xA0761D6478BD642F
_SEED_STEP = 0xE7037ED1A0B428DB


@dataclass(frozen=True)
class CacheConfig:
    """Cache shape; ``kind`` "none" disables the cache entirely."""

    kind: str = "none"
    entries: int = 64
    sketch_width: int = 1024
    sketch_rows: int = 2
    halving_period: int = 0

    def __post_init__(self):
        if self.kind not in CACHE_KINDS:
            raise ConfigError(
                f"unknown cache kind {self.kind!r}, expected one of {CACHE_KINDS}"
            )
        if self.kind == "none":
            return
        if self.entries < ASSOC or self.entries % ASSOC != 0:
            raise ConfigError(
                f"cache entries must be a positive multiple of {ASSOC}, got {self.entries}"
            )
        if self.sketch_width < 1:
            raise ConfigError(f"sketch_width must be positive, got {self.sketch_width}")
        if self.sketch_rows < 1:
            raise ConfigError(f"sketch_rows must be positive, got {self.sketch_rows}")
        if self.halving_period < 0:
            raise ConfigError(
                f"halving_period must be non-negative, got {self.halving_period}"
            )


class _Line:
    __slots__ = ("flat", "value", "dirty")

    def __init__(self, flat, value):
        self.flat = flat
        self.value = value
        self.dirty = False


def _mix(x: int) -> int:
    x &= _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


class CounterCache:
    """Per-bank counter cache; the engine owns alert side effects.

    ``on_alert(row_id, byte_id, value)`` is invoked when a cached copy
    crosses ``n_bo``; the line is then reset clean, mirroring the
    write-through reset of the stored counter.
    """

    def __init__(
        self,
        bank: int,
        config: CacheConfig,
        geometry: DramGeometry,
        n_bo: Optional[int] = None,
        on_alert: Optional[Callable[[int, int, int], None]] = None,
    ):
        if config.kind == "none":
            raise ConfigError("cannot instantiate a cache of kind 'none'")
        self.bank = bank
        self.config = config
        self.n_bo = n_bo
        self.on_alert = on_alert
        self._cpc = geometry.counters_per_counter_row
        self.num_sets = config.entries // ASSOC
        self.sets: List[List[_Line]] = [[] for _ in range(self.num_sets)]
        self.hits = 0
        self.misses = 0
        self.writebacks = 0
        self.admission_rejects = 0
        self.fills_rejected = 0
        self._lfu = config.kind == "tinylfu"
        if self._lfu:
            self._sketch = [
                [0] * config.sketch_width for _ in range(config.sketch_rows)
            ]
            self._seeds = [
                (_SEED_BASE + r * _SEED_STEP) & _M64 for r in range(config.sketch_rows)
            ]
            self._halve_every = config.halving_period or 10 * config.entries
            self._accesses = 0

    def _flat(self, row_id: int, byte_id: int) -> int:
        return row_id * self._cpc + byte_id

    def access(self, row_id: int, byte_id: int) -> bool:
        """Look up one activation's counter; on a hit, absorb the increment."""
        flat = self._flat(row_id, byte_id)
        if self._lfu:
            self._sketch_add(flat)
        ways = self.sets[flat % self.num_sets]
        for i, line in enumerate(ways):
            if line.flat != flat:
                continue
            self.hits += 1
            value = min(255, line.value + 1)
            line.value = value
            line.dirty = True
            if i != 0:
                ways.insert(0, ways.pop(i))
            if self.n_bo is not None and value >= self.n_bo:
                if self.on_alert is not None:
                    self.on_alert(row_id, byte_id, value)
                line.value = 0
                line.dirty = False
            return True
        self.misses += 1
        return False

    def fill_clean(
        self,
        row_id: int,
        byte_id: int,
        value: int,
        wb_sink: Callable[[int, int, int], bool],
    ) -> bool:
        """Install a clean copy of a just-serviced counter, best effort.

        A dirty victim's value goes through ``wb_sink``; if the sink
        refuses, the fill is abandoned and the victim stays put.
        """
        flat = self._flat(row_id, byte_id)
        ways = self.sets[flat % self.num_sets]
        for i, line in enumerate(ways):
            if line.flat == flat:
                line.value = value
                line.dirty = False
                if i != 0:
                    ways.insert(0, ways.pop(i))
                return True
        if len(ways) < ASSOC:
            ways.insert(0, _Line(flat, value))
            return True
        victim = ways[-1]
        if self._lfu and self._estimate(flat) <= self._estimate(victim.flat):
            self.admission_rejects += 1
            return False
        if victim.dirty:
            vrow, vbyte = divmod(victim.flat, self._cpc)
            if not wb_sink(vrow, vbyte, victim.value):
                self.fills_rejected += 1
                return False
            self.writebacks += 1
        ways.pop()
        ways.insert(0, _Line(flat, value))
        return True

    def dirty_lines(self) -> List[tuple]:
        """All dirty lines as (row_id, byte_id, value), sorted by location."""
        out = []
        for ways in self.sets:
            for line in ways:
                if line.dirty:
                    row_id, byte_id = divmod(line.flat, self._cpc)
                    out.append((row_id, byte_id, line.value))
        out.sort()
        return out

    @property
    def accesses(self) -> int:
        return self.hits + self.misses

    @property
    def hit_rate(self) -> Optional[float]:
        total = self.hits + self.misses
        return self.hits / total if total else None

    def stats(self) -> dict:
        return {
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": self.hit_rate,
            "writebacks": self.writebacks,
            "admission_rejects": self.admission_rejects,
            "fills_rejected": self.fills_rejected,
        }

    # Frequency sketch: small saturating counters, periodically halved so
    # stale popularity ages out.

    def _sketch_add(self, flat: int) -> None:
        for row, seed in zip(self._sketch, self._seeds):
            idx = _mix(flat * 0x9E3779B97F4A7C15 + seed) % self.config.sketch_width
            if row[idx] < SKETCH_CAP:
                row[idx] += 1
        self._accesses += 1
        if self._accesses % self._halve_every == 0:
            for row in self._sketch:
                for i, v in enumerate(row):
                    row[i] = v >> 1

    def _estimate(self, flat: int) -> int:
        return min(
            row[_mix(flat * 0x9E3779B97F4A7C15 + seed) % self.config.sketch_width]
            for row, seed in zip(self._sketch, self._seeds)
        )
