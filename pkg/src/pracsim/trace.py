"""Activation traces: synthetic generators plus text and binary file formats.

A trace is an ordered sequence of row activations.  The text format is
one ``bank data_row`` pair per line in ASCII decimal; blank lines and
lines starting with ``#`` are ignored.  The binary format is a packed
sequence of 6-byte little-endian records: u16 bank followed by u32
data_row.  Slots are implicit: event i occupies slot i.

All generator randomness flows from the seed in the TraceSpec through a
private random.Random instance, so a (spec, geometry) pair always
produces the same trace on any platform.
"""

import random
import struct
from bisect import bisect_left
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterable, List, NamedTuple

from .errors import ConfigError, TraceError
from .geometry import DramGeometry

GENERATORS = ("uniform", "zipf", "sequential", "hotset", "hammer", "roundrobin")

_RECORD = struct.Struct("<HI")

_KNOWN_PARAMS = {
    "uniform": {"rows", "banks"},
    "zipf": {"exponent", "rows", "banks", "shuffle"},
    "sequential": {"bank", "start_row"},
    "hotset": {"hot_rows", "hot_fraction", "rows", "banks"},
    "hammer": {"row", "gap", "bank"},
    "roundrobin": {"bank"},
}


class ActivationEvent(NamedTuple):
    """One row activation: time slot, bank index, data row index."""

    slot: int
    bank: int
    data_row: int


@dataclass(frozen=True)
class TraceSpec:
    """Recipe for a synthetic trace: generator name, length, seed, params."""

    generator: str
    length: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigError(
                f"unknown generator {self.generator!r}, expected one of {GENERATORS}"
            )
        if self.length < 1:
            raise ConfigError(f"trace length must be positive, got {self.length}")
        unknown = set(self.params) - _KNOWN_PARAMS[self.generator]
        if unknown:
            raise ConfigError(
                f"unknown params for generator {self.generator!r}: {sorted(unknown)}"
            )
        p = self.params
        if "exponent" in p and not p["exponent"] > 0:
            raise ConfigError(f"zipf exponent must be positive, got {p['exponent']}")
        if "hot_fraction" in p and not 0 < p["hot_fraction"] <= 1:
            raise ConfigError(
                f"hot_fraction must be in (0, 1], got {p['hot_fraction']}"
            )
        if "gap" in p and p["gap"] < 0:
            raise ConfigError(f"hammer gap must be non-negative, got {p['gap']}")
        for key in ("rows", "hot_rows"):
            if key in p and p[key] < 1:
                raise ConfigError(f"{key} must be positive, got {p[key]}")
        if "banks" in p and p["banks"] < 1:
            raise ConfigError(f"banks must be positive, got {p['banks']}")


def generate(spec: TraceSpec, geometry: DramGeometry) -> List[ActivationEvent]:
    """Materialize the trace described by ``spec`` under ``geometry``."""
    rng = random.Random(spec.seed)
    p = spec.params
    rows = p.get("rows", geometry.rows_per_bank)
    banks = p.get("banks", 1)
    if rows > geometry.rows_per_bank:
        raise ConfigError(
            f"rows param {rows} exceeds rows_per_bank {geometry.rows_per_bank}"
        )
    if banks > geometry.banks:
        raise ConfigError(f"banks param {banks} exceeds bank count {geometry.banks}")
    fixed_bank = p.get("bank", 0)
    if not 0 <= fixed_bank < geometry.banks:
        raise ConfigError(f"bank param {fixed_bank} out of range [0, {geometry.banks})")

    builder = {
        "uniform": _gen_uniform,
        "zipf": _gen_zipf,
        "sequential": _gen_sequential,
        "hotset": _gen_hotset,
        "hammer": _gen_hammer,
        "roundrobin": _gen_roundrobin,
    }[spec.generator]
    return builder(spec, geometry, rng, rows, banks)


def _pick_bank(rng: random.Random, banks: int) -> int:
    return rng.randrange(banks) if banks > 1 else 0


def _gen_uniform(spec, geometry, rng, rows, banks):
    out = []
    for i in range(spec.length):
        bank = _pick_bank(rng, banks)
        out.append(ActivationEvent(i, bank, rng.randrange(rows)))
    return out


def _gen_zipf(spec, geometry, rng, rows, banks):
    exponent = spec.params.get("exponent", 1.0)
    shuffle = spec.params.get("shuffle", True)
    weights = [(rank + 1) ** -exponent for rank in range(rows)]
    cumulative = list(accumulate(weights))
    total = cumulative[-1]
    mapping = list(range(rows))
    if shuffle:
        # A child generator keeps the rank stream identical with and
        # without shuffling; only the rank-to-row renaming changes.
        random.Random(spec.seed * 0x9E3779B97F4A7C15 + 1).shuffle(mapping)
    out = []
    for i in range(spec.length):
        bank = _pick_bank(rng, banks)
        rank = bisect_left(cumulative, rng.random() * total)
        if rank >= rows:
            rank = rows - 1
        out.append(ActivationEvent(i, bank, mapping[rank]))
    return out


def _gen_sequential(spec, geometry, rng, rows, banks):
    start = spec.params.get("start_row", 0)
    bank = spec.params.get("bank", 0)
    if not 0 <= start < geometry.rows_per_bank:
        raise ConfigError(
            f"start_row {start} out of range [0, {geometry.rows_per_bank})"
        )
    n = geometry.rows_per_bank
    return [
        ActivationEvent(i, bank, (start + i) % n) for i in range(spec.length)
    ]


def _gen_hotset(spec, geometry, rng, rows, banks):
    hot_rows = spec.params.get("hot_rows", 64)
    hot_fraction = spec.params.get("hot_fraction", 0.9)
    if hot_rows > rows:
        raise ConfigError(f"hot_rows {hot_rows} exceeds row population {rows}")
    hot = rng.sample(range(rows), hot_rows)
    out = []
    for i in range(spec.length):
        bank = _pick_bank(rng, banks)
        if rng.random() < hot_fraction:
            row = hot[rng.randrange(hot_rows)]
        else:
            row = rng.randrange(rows)
        out.append(ActivationEvent(i, bank, row))
    return out


def _gen_hammer(spec, geometry, rng, rows, banks):
    """Repeatedly hit one target row, separated by ``gap`` filler rows.

    Fillers walk other counter rows so they never coalesce with the
    target or each other inside a small window.
    """
    target = spec.params.get("row", 0)
    gap = spec.params.get("gap", 1)
    bank = spec.params.get("bank", 0)
    if not 0 <= target < geometry.rows_per_bank:
        raise ConfigError(f"hammer row {target} out of range")
    cpc = geometry.counters_per_counter_row
    target_cr, target_byte = divmod(target, cpc)
    other = [r for r in range(geometry.counter_rows_per_bank) if r != target_cr]
    out = []
    filler_idx = 0
    for i in range(spec.length):
        if i % (gap + 1) == 0:
            row = target
        else:
            if other:
                cr = other[filler_idx % len(other)]
                byte = (filler_idx // len(other)) % cpc
            else:
                cr = target_cr
                byte = (target_byte + 1 + filler_idx) % cpc
            filler_idx += 1
            row = cr * cpc + byte
        out.append(ActivationEvent(i, bank, row))
    return out


def _gen_roundrobin(spec, geometry, rng, rows, banks):
    """Cycle through counter rows so consecutive events never share one."""
    bank = spec.params.get("bank", 0)
    cr = geometry.counter_rows_per_bank
    cpc = geometry.counters_per_counter_row
    return [
        ActivationEvent(i, bank, (i % cr) * cpc + (i // cr) % cpc)
        for i in range(spec.length)
    ]


def write_text(events: Iterable[ActivationEvent], stream) -> None:
    """Write the text format to a text-mode stream."""
    for ev in events:
        stream.write(f"{ev.bank} {ev.data_row}\n")


def write_binary(events: Iterable[ActivationEvent], stream) -> None:
    """Write packed 6-byte records to a binary-mode stream."""
    for ev in events:
        stream.write(_RECORD.pack(ev.bank, ev.data_row))


def read_text(stream, geometry: DramGeometry) -> List[ActivationEvent]:
    """Parse the text format, reporting the first bad line by number."""
    events = []
    slot = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TraceError(
                f"expected 'bank data_row', got {line!r}", line=lineno
            )
        try:
            bank, data_row = int(parts[0]), int(parts[1])
        except ValueError:
            raise TraceError(f"non-integer field in {line!r}", line=lineno) from None
        _check_range(geometry, bank, data_row, lineno)
        events.append(ActivationEvent(slot, bank, data_row))
        slot += 1
    return events


def read_binary(stream, geometry: DramGeometry) -> List[ActivationEvent]:
    """Parse packed records, reporting the first bad record by number."""
    data = stream.read()
    if len(data) % _RECORD.size != 0:
        raise TraceError(
            f"truncated record: {len(data)} bytes is not a multiple of {_RECORD.size}",
            line=len(data) // _RECORD.size + 1,
        )
    events = []
    for slot, (bank, data_row) in enumerate(_RECORD.iter_unpack(data)):
        _check_range(geometry, bank, data_row, slot + 1)
        events.append(ActivationEvent(slot, bank, data_row))
    return events


def _check_range(geometry, bank, data_row, lineno):
    if not 0 <= bank < geometry.banks:
        raise TraceError(f"bank {bank} out of range [0, {geometry.banks})", line=lineno)
    if not 0 <= data_row < geometry.rows_per_bank:
        raise TraceError(
            f"data_row {data_row} out of range [0, {geometry.rows_per_bank})",
            line=lineno,
        )


def load(path: str, geometry: DramGeometry, fmt: str = "auto") -> List[ActivationEvent]:
    """Read a trace file; ``fmt`` is ``text``, ``binary``, or ``auto``.

    Auto-detection is by extension: ``.bin`` is binary, anything else text.
    """
    if fmt == "auto":
        fmt = "binary" if path.endswith(".bin") else "text"
    if fmt == "binary":
        with open(path, "rb") as f:
            return read_binary(f, geometry)
    if fmt == "text":
        with open(path, "r", encoding="ascii") as f:
            return read_text(f, geometry)
    raise ConfigError(f"unknown trace format {fmt!r}")


def save(events, path: str, fmt: str = "auto") -> None:
    """Write a trace file in the chosen format (see :func:`load`)."""
    if fmt == "auto":
        fmt = "binary" if path.endswith(".bin") else "text"
    if fmt == "binary":
        with open(path, "wb") as f:
            write_binary(events, f)
    elif fmt == "text":
        with open(path, "w", encoding="ascii") as f:
            write_text(events, f)
    else:
        raise ConfigError(f"unknown trace format {fmt!r}")
