"""Workload-shape metrics and the serialized run report.

Metrics describe how activations spread over counter rows: skew is the
max/mean ratio of per-counter-row activation counts within a bank,
window locality is the mean of per-window maximum same-counter-row
request counts, and the footprint percentiles say how few distinct rows
carry a given share of all activations.
"""

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import ConfigError

WINDOW_MODES = ("tumbling", "sliding")

COMPARE_COLUMNS = (
    "policy",
    "data_acts",
    "counter_acts",
    "normalized_acts",
    "rmw_bytes",
    "alerts",
    "mitigations",
    "cache_hit_rate",
    "energy_overhead",
)


def skew(row_counts: Sequence[int]) -> float:
    """Max over mean of per-counter-row activation counts for one bank.

    Rows with zero activations still count toward the mean; a bank with
    no activations at all has no defined skew.
    """
    if not row_counts:
        raise ConfigError("skew of an empty row-count vector is undefined")
    total = sum(row_counts)
    if total == 0:
        raise ConfigError("skew undefined for a bank with no activations")
    return max(row_counts) * len(row_counts) / total


def window_maxima(stream: Sequence[int], window: int, mode: str = "tumbling") -> List[int]:
    """Per-window maximum count of requests to a single counter row.

    Tumbling windows partition the stream (remainder discarded);
    sliding windows advance one request at a time.
    """
    if window < 1:
        raise ConfigError(f"window must be positive, got {window}")
    if mode not in WINDOW_MODES:
        raise ConfigError(f"unknown window mode {mode!r}, expected one of {WINDOW_MODES}")
    n = len(stream)
    if n < window:
        return []
    if mode == "tumbling":
        out = []
        for start in range(0, n - window + 1, window):
            counts = Counter(stream[start : start + window])
            out.append(max(counts.values()))
        return out
    counts = Counter(stream[:window])
    out = [max(counts.values())]
    for i in range(window, n):
        old = stream[i - window]
        counts[old] -= 1
        if counts[old] == 0:
            del counts[old]
        counts[stream[i]] += 1
        out.append(max(counts.values()))
    return out


def window_locality(
    stream: Sequence[int], window: int = 64, mode: str = "tumbling"
) -> Optional[float]:
    """Mean of the per-window maxima; None when no full window fits."""
    maxima = window_maxima(stream, window, mode)
    if not maxima:
        return None
    return sum(maxima) / len(maxima)


def footprint_percentiles(
    counts: Iterable[int], percentiles: Sequence[int] = (25, 50, 75, 90)
) -> Dict[int, int]:
    """Distinct rows needed to cover each percentile of all activations.

    For each percentile p, the smallest k such that the k most-activated
    rows together carry at least p percent of the activations.
    """
    ordered = sorted((c for c in counts if c > 0), reverse=True)
    if not ordered:
        raise ConfigError("footprint undefined with no activations")
    total = sum(ordered)
    out = {}
    for p in percentiles:
        if not 0 < p <= 100:
            raise ConfigError(f"percentile must be in (0, 100], got {p}")
        target = total * p / 100
        running = 0.0
        for k, c in enumerate(ordered, start=1):
            running += c
            if running >= target:
                out[p] = k
                break
    return out


@dataclass
class SimReport:
    """Everything one run produces, serializable to stable JSON."""

    policy: str
    data_acts: int
    counter_acts: int
    normalized_acts: float
    rmw_bytes: int
    alerts: int
    mitigations: int
    batch_triggers: Dict[str, int]
    energy: Dict[str, float]
    cache: Optional[Dict] = None
    skew_by_bank: Dict[int, float] = field(default_factory=dict)
    skew_mean: Optional[float] = None
    window_locality: Optional[float] = None
    footprint: Dict[int, int] = field(default_factory=dict)
    config: Dict[str, str] = field(default_factory=dict)
    schema_version: int = 1

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "policy": self.policy,
            "data_acts": self.data_acts,
            "counter_acts": self.counter_acts,
            "normalized_acts": self.normalized_acts,
            "rmw_bytes": self.rmw_bytes,
            "alerts": self.alerts,
            "mitigations": self.mitigations,
            "batch_triggers": dict(sorted(self.batch_triggers.items())),
            "energy": self.energy,
            "cache": self.cache,
            "skew_by_bank": {str(k): v for k, v in sorted(self.skew_by_bank.items())},
            "skew_mean": self.skew_mean,
            "window_locality": self.window_locality,
            "footprint": {str(k): v for k, v in sorted(self.footprint.items())},
            "config": dict(sorted(self.config.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def compare_csv(reports: Sequence[SimReport]) -> str:
    """Side-by-side comparison table with a frozen column set."""
    lines = [",".join(COMPARE_COLUMNS)]
    for r in reports:
        row = {
            "policy": r.policy,
            "data_acts": r.data_acts,
            "counter_acts": r.counter_acts,
            "normalized_acts": r.normalized_acts,
            "rmw_bytes": r.rmw_bytes,
            "alerts": r.alerts,
            "mitigations": r.mitigations,
            "cache_hit_rate": (r.cache or {}).get("hit_rate"),
            "energy_overhead": r.energy.get("overhead"),
        }
        lines.append(",".join(_csv_cell(row[c]) for c in COMPARE_COLUMNS))
    return "\n".join(lines) + "\n"
