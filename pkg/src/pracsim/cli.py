"""Command-line front end.

Subcommands: ``gen`` writes a synthetic trace, ``run`` simulates one
policy, ``compare`` runs several policies over the identical trace,
``analyze`` reports workload-shape metrics without simulating, and
``verify`` replays a service log against its trace.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure, 3 runtime error (bad trace data, unreadable log).
"""

import argparse
import json
import sys
from typing import Dict, List, Optional

from . import config as config_mod
from . import engine, metrics, oracle, trace
from .errors import ConfigError, SimError, VerificationFailure

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# argparse dest -> config key, shared by every subcommand that takes them.
_FLAG_KEYS = {
    "generator": "trace.generator",
    "length": "trace.length",
    "bank": "trace.bank",
    "banks": "trace.banks",
    "rows": "trace.rows",
    "start_row": "trace.start_row",
    "zipf_exponent": "trace.zipf_exponent",
    "hot_rows": "trace.hot_rows",
    "hot_fraction": "trace.hot_fraction",
    "hammer_row": "trace.hammer_row",
    "hammer_gap": "trace.hammer_gap",
    "trace": "trace.path",
    "trace_format": "trace.format",
    "policy": "buffer.design",
    "capacity": "buffer.capacity",
    "m_batch": "buffer.m_batch",
    "k_limit": "buffer.k_limit",
    "k_trigger": "buffer.k_trigger",
    "cache": "cache.kind",
    "cache_entries": "cache.entries",
    "n_bo": "mitigation.n_bo",
    "proactive_interval": "mitigation.proactive_interval",
    "window": "metrics.window",
    "window_mode": "metrics.window_mode",
    "seed": "seed",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="config file of key = value lines")
    p.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="sets",
        help="override any config key (repeatable)",
    )
    p.add_argument(
        "--dump-config",
        action="store_true",
        help="print the resolved configuration and exit",
    )
    p.add_argument(
        "--machine",
        action="store_true",
        help="emit errors as JSON on stderr",
    )
    p.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    p.add_argument("--seed", type=int, help="seed for synthetic traces")


def _add_trace_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trace", metavar="FILE", help="trace file to read")
    p.add_argument(
        "--trace-format",
        choices=("auto", "text", "binary"),
        help="trace file format (auto infers binary from a .bin suffix)",
    )
    _add_gen_flags(p)


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--generator", choices=trace.GENERATORS, help="synthetic workload")
    p.add_argument("--length", type=int, help="number of activations to generate")
    p.add_argument("--bank", type=int, help="fixed bank for single-bank generators")
    p.add_argument("--banks", type=int, help="bank spread for randomized generators")
    p.add_argument("--rows", type=int, help="row population (0 means every row)")
    p.add_argument("--start-row", type=int, help="first row for the sequential sweep")
    p.add_argument("--zipf-exponent", type=float, help="skew of the zipf generator")
    p.add_argument("--hot-rows", type=int, help="hot-set size")
    p.add_argument("--hot-fraction", type=float, help="share of traffic in the hot set")
    p.add_argument("--hammer-row", type=int, help="target row of the hammer generator")
    p.add_argument("--hammer-gap", type=int, help="fillers between hammer hits")


def build_parser() -> _Parser:
    parser = _Parser(prog="pracsim", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_gen = sub.add_parser("gen", help="write a synthetic activation trace")
    _add_common(p_gen)
    _add_gen_flags(p_gen)
    p_gen.add_argument(
        "--trace-format",
        choices=("auto", "text", "binary"),
        help="output format (auto infers binary from a .bin suffix)",
    )

    p_run = sub.add_parser("run", help="simulate one buffer design")
    _add_common(p_run)
    _add_trace_source(p_run)
    from .buffers import DESIGNS

    p_run.add_argument("--policy", choices=DESIGNS, help="buffer design to simulate")
    p_run.add_argument("--capacity", type=int, help="shared buffer entries")
    p_run.add_argument("--m-batch", type=int, help="per-row batch size M")
    p_run.add_argument("--k-limit", type=int, help="staleness limit K")
    p_run.add_argument("--k-trigger", choices=("pending", "repcount"))
    p_run.add_argument("--cache", choices=("none", "lru4way", "tinylfu"))
    p_run.add_argument("--cache-entries", type=int)
    p_run.add_argument("--n-bo", help="back-off threshold, or 'auto'")
    p_run.add_argument("--proactive-interval", type=int)
    p_run.add_argument("--log", metavar="FILE", help="write the service-batch log CSV")
    p_run.add_argument(
        "--dump-state", metavar="FILE", help="write final nonzero counters as CSV"
    )

    p_cmp = sub.add_parser("compare", help="run several designs on one trace")
    _add_common(p_cmp)
    _add_trace_source(p_cmp)
    p_cmp.add_argument(
        "--policies",
        default="chronus,perrow,unified_fcfs,unified_sorted,unified_approxmax",
        help="comma-separated designs to compare",
    )
    p_cmp.add_argument("--capacity", type=int, help="shared buffer entries")
    p_cmp.add_argument("--m-batch", type=int, help="per-row batch size M")
    p_cmp.add_argument("--k-limit", type=int, help="staleness limit K")
    p_cmp.add_argument("--k-trigger", choices=("pending", "repcount"))
    p_cmp.add_argument("--cache", choices=("none", "lru4way", "tinylfu"))
    p_cmp.add_argument("--cache-entries", type=int)
    p_cmp.add_argument("--n-bo", help="back-off threshold, or 'auto'")
    p_cmp.add_argument("--proactive-interval", type=int)
    p_cmp.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="table format"
    )

    p_ana = sub.add_parser("analyze", help="workload-shape metrics for a trace")
    _add_common(p_ana)
    _add_trace_source(p_ana)
    p_ana.add_argument("--window", type=int, help="locality window size")
    p_ana.add_argument("--window-mode", choices=("tumbling", "sliding"))

    p_ver = sub.add_parser("verify", help="replay a service log against its trace")
    _add_common(p_ver)
    _add_trace_source(p_ver)
    p_ver.add_argument("--log", metavar="FILE", required=True, help="service log CSV")
    p_ver.add_argument("--m-batch", type=int, help="per-row batch size M")
    p_ver.add_argument("--k-limit", type=int, help="staleness bound K")
    p_ver.add_argument("--k-trigger", choices=("pending", "repcount"))
    p_ver.add_argument(
        "--report", metavar="FILE", help="run report JSON to cross-check totals"
    )
    p_ver.add_argument(
        "--state", metavar="FILE", help="final counter dump CSV to cross-check"
    )
    return parser


def _overrides_from_args(args: argparse.Namespace) -> Dict[str, str]:
    overrides: Dict[str, str] = {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = config_mod.format_value(value)
    for item in args.sets:
        key, sep, value = item.partition("=")
        if not sep:
            raise _UsageError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def _resolve(args: argparse.Namespace) -> config_mod.SimConfig:
    file_values = config_mod.parse_file(args.config) if args.config else None
    return config_mod.resolve(file_values, _overrides_from_args(args))


def _write_out(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _cmd_gen(args) -> int:
    cfg = _resolve(args)
    if cfg.trace_spec is None:
        raise ConfigError("gen needs generator settings, not trace.path")
    events = trace.generate(cfg.trace_spec, cfg.geometry)
    if args.out:
        trace.save(events, args.out, args.trace_format or "auto")
    else:
        trace.write_text(events, sys.stdout)
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _resolve(args)
    eng = engine.Engine(cfg, collect_log=args.log is not None)
    for ev in eng.load_events():
        eng.step(ev)
    report = eng.finalize()
    if args.log:
        with open(args.log, "w", encoding="utf-8") as f:
            oracle.write_log(eng.batch_log, f)
    if args.dump_state:
        with open(args.dump_state, "w", encoding="utf-8") as f:
            eng.store.dump(f)
    _write_out(report.to_json() + "\n", args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _resolve(args)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    reports = engine.compare(cfg, policies)
    if args.format == "json":
        text = json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
    else:
        text = metrics.compare_csv(reports)
    _write_out(text, args.out)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = _resolve(args)
    events = (
        trace.load(cfg.trace_path, cfg.geometry, cfg.trace_format)
        if cfg.trace_path
        else trace.generate(cfg.trace_spec, cfg.geometry)
    )
    if not events:
        raise ConfigError("cannot analyze an empty trace")
    cpc = cfg.geometry.counters_per_counter_row
    row_counts: Dict[int, List[int]] = {}
    streams: Dict[int, List[int]] = {}
    footprint: Dict[tuple, int] = {}
    for ev in events:
        row_id = ev.data_row // cpc
        counts = row_counts.get(ev.bank)
        if counts is None:
            counts = row_counts[ev.bank] = [0] * cfg.geometry.counter_rows_per_bank
            streams[ev.bank] = []
        counts[row_id] += 1
        streams[ev.bank].append(row_id)
        key = (ev.bank, ev.data_row)
        footprint[key] = footprint.get(key, 0) + 1
    skew_by_bank = {
        bank: metrics.skew(counts) for bank, counts in sorted(row_counts.items())
    }
    maxima: List[int] = []
    for bank in sorted(streams):
        maxima.extend(metrics.window_maxima(streams[bank], cfg.window, cfg.window_mode))
    out = {
        "events": len(events),
        "banks_touched": len(row_counts),
        "skew_by_bank": {str(b): s for b, s in skew_by_bank.items()},
        "skew_mean": sum(skew_by_bank.values()) / len(skew_by_bank),
        "skew_max": max(skew_by_bank.values()),
        "window": cfg.window,
        "window_mode": cfg.window_mode,
        "window_locality": (sum(maxima) / len(maxima)) if maxima else None,
        "footprint": {
            str(p): k
            for p, k in sorted(metrics.footprint_percentiles(footprint.values()).items())
        },
    }
    _write_out(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = _resolve(args)
    events = (
        trace.load(cfg.trace_path, cfg.geometry, cfg.trace_format)
        if cfg.trace_path
        else trace.generate(cfg.trace_spec, cfg.geometry)
    )
    with open(args.log, "r", encoding="utf-8") as f:
        batches = oracle.read_log(f)
    reported = None
    if args.report:
        with open(args.report, "r", encoding="utf-8") as f:
            reported = json.load(f)["counter_acts"]
    final_values = None
    if args.state:
        final_values = {}
        with open(args.state, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("bank,"):
                    continue
                parts = line.split(",")
                if len(parts) != 4:
                    raise SimError(f"state dump line {lineno}: expected 4 fields")
                b, r, c, v = (int(x) for x in parts)
                final_values[(b, r, c)] = v
        final_values = _StateLookup(final_values)
    bound = cfg.buffer.k_limit
    if cfg.buffer.k_trigger == "repcount":
        bound += 1
    verdict = oracle.verify(
        events,
        batches,
        cfg.geometry,
        m_batch=cfg.buffer.m_batch,
        staleness_bound=bound,
        reported_counter_acts=reported,
        final_values=final_values,
    )
    _write_out(str(verdict) + "\n", args.out)
    return EXIT_OK if verdict.ok else EXIT_VERIFY


class _StateLookup:
    """Dict-backed view that reads missing counters as zero."""

    def __init__(self, values):
        self._values = values

    def __getitem__(self, key):
        return self._values.get(key, 0)


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "analyze": _cmd_analyze,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    machine = False
    try:
        args = parser.parse_args(argv)
        machine = getattr(args, "machine", False)
        if args.command is None:
            raise _UsageError("a command is required (gen, run, compare, analyze, verify)")
        if args.dump_config:
            cfg = _resolve(args)
            _write_out(config_mod.dump(cfg.flat), args.out)
            return EXIT_OK
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        _report_error("usage", str(exc), machine)
        return EXIT_USAGE
    except ConfigError as exc:
        _report_error(exc.code, str(exc), machine)
        return EXIT_USAGE
    except VerificationFailure as exc:
        _report_error(exc.code, str(exc), machine)
        return EXIT_VERIFY
    except SimError as exc:
        _report_error(exc.code, str(exc), machine)
        return EXIT_RUNTIME
    except OSError as exc:
        _report_error("io", str(exc), machine)
        return EXIT_RUNTIME


def _report_error(code: str, message: str, machine: bool) -> None:
    if machine:
        sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    else:
        sys.stderr.write(f"error: {message}\n")


if __name__ == "__main__":
    sys.exit(main())
