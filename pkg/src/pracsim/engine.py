"""Trace-driven simulation loop tying the pieces together.

Each activation event increments ground truth bookkeeping, consults the
optional cache, and otherwise inserts a counter request into its bank's
buffer; a returned batch is serviced against the stored counters in the
shadow of that same activation.  After the last event every buffer is
drained, which models idle time at the end of the run.
"""

from typing import Dict, List, Optional

from .buffers import TRIGGERS, RequestBuffer, ServiceBatch, make_buffer
from .cache import CounterCache
from .config import SimConfig
from .counters import CounterArray
from .energy import EnergyLedger, breakdown
from .errors import ConfigError, TraceError
from .metrics import (
    SimReport,
    footprint_percentiles,
    skew,
    window_maxima,
)
from .oracle import LoggedBatch
from .trace import ActivationEvent, generate, load


class Engine:
    """One run's mutable state; step events, then finalize into a report."""

    def __init__(
        self,
        config: SimConfig,
        collect_log: bool = False,
        record_events: bool = False,
    ):
        self.config = config
        self.geometry = config.geometry
        self.store = CounterArray(
            config.geometry,
            n_bo=config.n_bo,
            rfms_per_alert=config.rfms_per_alert,
            record_events=record_events,
        )
        self.ledger = EnergyLedger()
        self.trigger_counts = {t: 0 for t in TRIGGERS}
        self.batch_log: Optional[List[LoggedBatch]] = [] if collect_log else None
        self._buffers: Dict[int, RequestBuffer] = {}
        self._caches: Dict[int, Optional[CounterCache]] = {}
        self._row_counts: Dict[int, List[int]] = {}
        self._streams: Dict[int, List[int]] = {}
        self._footprint: Dict[tuple, int] = {}
        self._cpc = config.geometry.counters_per_counter_row
        self._finalized = False

    def buffer(self, bank: int) -> RequestBuffer:
        buf = self._buffers.get(bank)
        if buf is None:
            buf = self._buffers[bank] = make_buffer(bank, self.config.buffer)
        return buf

    def cache(self, bank: int) -> Optional[CounterCache]:
        if bank not in self._caches:
            if self.config.cache.kind == "none":
                self._caches[bank] = None
            else:
                self._caches[bank] = CounterCache(
                    bank,
                    self.config.cache,
                    self.geometry,
                    n_bo=self.config.n_bo,
                    on_alert=lambda r, c, v, b=bank: self.store.external_alert(
                        b, r, c, v
                    ),
                )
        return self._caches[bank]

    def step(self, ev: ActivationEvent) -> Optional[ServiceBatch]:
        """Process one activation; returns the batch it serviced, if any."""
        self.store.slot = ev.slot
        row_id, byte_id = divmod(ev.data_row, self._cpc)
        self.ledger.data_acts += 1
        self.ledger.data_cols += 1
        if self.config.metrics_enabled:
            counts = self._row_counts.get(ev.bank)
            if counts is None:
                counts = self._row_counts[ev.bank] = (
                    [0] * self.geometry.counter_rows_per_bank
                )
                self._streams[ev.bank] = []
            counts[row_id] += 1
            self._streams[ev.bank].append(row_id)
            key = (ev.bank, ev.data_row)
            self._footprint[key] = self._footprint.get(key, 0) + 1

        serviced = None
        cache = self.cache(ev.bank)
        if cache is None or not cache.access(row_id, byte_id):
            batch = self.buffer(ev.bank).insert(row_id, byte_id)
            if batch is not None:
                self._service(batch, ev.slot)
                serviced = batch

        interval = self.config.proactive_interval
        if interval and (ev.slot + 1) % interval == 0:
            for bank in range(self.geometry.banks):
                self.store.proactive_tick(bank)
        return serviced

    def _service(self, batch: ServiceBatch, slot: int) -> None:
        self.ledger.counter_acts += 1
        self.trigger_counts[batch.trigger] += 1
        if self.batch_log is not None:
            self.batch_log.append(
                LoggedBatch(
                    slot,
                    batch.bank,
                    batch.row_id,
                    batch.trigger,
                    tuple(item.byte_id for item in batch.items),
                )
            )
        cache = self._caches.get(batch.bank)
        buf = self._buffers[batch.bank]
        for item in batch.items:
            if item.wb_value is not None:
                self.store.apply_writeback(
                    batch.bank, batch.row_id, item.byte_id, item.wb_value
                )
                self.ledger.rmw_bytes += 1
            if item.increments:
                self.store.apply_rmw(
                    batch.bank, batch.row_id, item.byte_id, item.increments
                )
                self.ledger.rmw_bytes += item.increments
                # No fills while draining: an eviction writeback enqueued
                # after drain() would never be serviced.
                if cache is not None and not self._finalized:
                    value = self.store.get(batch.bank, batch.row_id, item.byte_id)
                    cache.fill_clean(
                        batch.row_id, item.byte_id, value, buf.try_insert_writeback
                    )

    def finalize(self) -> SimReport:
        """Drain all buffers and assemble the report."""
        if self._finalized:
            raise ConfigError("finalize called twice on one engine")
        self._finalized = True
        if self.ledger.data_acts == 0:
            raise TraceError("cannot simulate an empty trace")
        drain_slot = self.ledger.data_acts
        self.store.slot = drain_slot
        for bank in sorted(self._buffers):
            for batch in self._buffers[bank].drain():
                self._service(batch, drain_slot)
        self.ledger.mitigation_acts = self.store.mitigations

        skew_by_bank: Dict[int, float] = {}
        skew_mean = None
        locality = None
        footprint: Dict[int, int] = {}
        if self.config.metrics_enabled:
            for bank in sorted(self._row_counts):
                counts = self._row_counts[bank]
                if sum(counts) > 0:
                    skew_by_bank[bank] = skew(counts)
            if skew_by_bank:
                skew_mean = sum(skew_by_bank.values()) / len(skew_by_bank)
            maxima: List[int] = []
            for bank in sorted(self._streams):
                maxima.extend(
                    window_maxima(
                        self._streams[bank], self.config.window, self.config.window_mode
                    )
                )
            if maxima:
                locality = sum(maxima) / len(maxima)
            footprint = footprint_percentiles(self._footprint.values())

        cache_stats = None
        if self.config.cache.kind != "none":
            totals = {
                "hits": 0,
                "misses": 0,
                "writebacks": 0,
                "admission_rejects": 0,
                "fills_rejected": 0,
            }
            for bank in sorted(self._caches):
                c = self._caches[bank]
                if c is None:
                    continue
                for key in totals:
                    totals[key] += getattr(c, key)
            accesses = totals["hits"] + totals["misses"]
            totals["hit_rate"] = totals["hits"] / accesses if accesses else None
            cache_stats = totals

        return SimReport(
            policy=self.config.buffer.design,
            data_acts=self.ledger.data_acts,
            counter_acts=self.ledger.counter_acts,
            normalized_acts=self.ledger.counter_acts / self.ledger.data_acts,
            rmw_bytes=self.ledger.rmw_bytes,
            alerts=self.store.alerts,
            mitigations=self.store.mitigations,
            batch_triggers=dict(self.trigger_counts),
            energy=breakdown(self.ledger, self.config.energy).to_dict(),
            cache=cache_stats,
            skew_by_bank=skew_by_bank,
            skew_mean=skew_mean,
            window_locality=locality,
            footprint=footprint,
            config=dict(self.config.flat),
        )

    def load_events(self) -> List[ActivationEvent]:
        if self.config.trace_path is not None:
            return load(
                self.config.trace_path, self.geometry, self.config.trace_format
            )
        return generate(self.config.trace_spec, self.geometry)

    def run(self) -> SimReport:
        for ev in self.load_events():
            self.step(ev)
        return self.finalize()


def run(config: SimConfig) -> SimReport:
    """Simulate one configured run start to finish."""
    return Engine(config).run()


def compare(config: SimConfig, policies) -> List[SimReport]:
    """Run several buffer designs over the identical trace and settings.

    The immediate-service baseline is prepended if absent so normalized
    activation counts always have their denominator in the table.
    """
    policies = list(policies)
    if not policies:
        raise ConfigError("no policies to compare")
    if "chronus" not in policies:
        policies = ["chronus"] + policies
    reports = []
    for policy in policies:
        overrides = {"buffer.design": policy}
        if policy == "chronus":
            overrides["cache.kind"] = "none"
        reports.append(run(config.with_overrides(overrides)))
    for r in reports:
        if r.policy == "chronus" and r.counter_acts != r.data_acts:
            raise ConfigError(
                "baseline invariant broken: counter acts must equal data acts"
            )
    return reports
