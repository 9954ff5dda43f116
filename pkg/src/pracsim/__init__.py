"""Trace-driven simulator of in-DRAM activation-counter request coalescing.

The package models a DRAM device that keeps one 1-byte activation
counter per data row inside a reserved counter region of each bank.
Counter updates queue in a small request buffer and are serviced in
coalesced batches in the shadow of data activations; several victim
selection designs are provided along with an immediate-service
baseline, an optional counter cache, energy accounting, workload
metrics, and a replay-based verifier for service logs.
"""

from .buffers import (
    BatchItem,
    BufferConfig,
    DESIGNS,
    RequestBuffer,
    ServiceBatch,
    make_buffer,
)
from .cache import CacheConfig, CounterCache
from .config import SimConfig, parse_file, resolve
from .counters import CounterArray, effective_backoff
from .energy import EnergyBreakdown, EnergyLedger, EnergyParams, breakdown, overhead
from .engine import Engine, compare, run
from .errors import (
    ConfigError,
    GeometryError,
    LogFormatError,
    SimError,
    TraceError,
    VerificationFailure,
)
from .geometry import CounterRef, DramGeometry, map_row, unmap
from .metrics import (
    SimReport,
    footprint_percentiles,
    skew,
    window_locality,
    window_maxima,
)
from .oracle import LoggedBatch, Verdict, ensure, read_log, verify, write_log
from .trace import ActivationEvent, TraceSpec, generate

__version__ = "0.1.0"

__all__ = [
    "ActivationEvent",
    "BatchItem",
    "BufferConfig",
    "CacheConfig",
    "ConfigError",
    "CounterArray",
    "CounterCache",
    "CounterRef",
    "DESIGNS",
    "DramGeometry",
    "Engine",
    "EnergyBreakdown",
    "EnergyLedger",
    "EnergyParams",
    "GeometryError",
    "LogFormatError",
    "LoggedBatch",
    "RequestBuffer",
    "ServiceBatch",
    "SimConfig",
    "SimError",
    "SimReport",
    "TraceError",
    "TraceSpec",
    "Verdict",
    "VerificationFailure",
    "breakdown",
    "compare",
    "effective_backoff",
    "ensure",
    "footprint_percentiles",
    "generate",
    "make_buffer",
    "map_row",
    "overhead",
    "parse_file",
    "read_log",
    "resolve",
    "run",
    "skew",
    "unmap",
    "verify",
    "window_locality",
    "window_maxima",
    "write_log",
]
