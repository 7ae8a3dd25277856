"""Command-line entry point.

Exit codes are disjoint and stable so scripts can branch on them:
0 success, 1 invariant violation, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import logging
import os
import sys
import time

import click

from consensus_lens import service as service_mod
from consensus_lens.config import ConfigError, SimConfig, parse_config
from consensus_lens.engine import SimulationEngine
from consensus_lens.telemetry import OrderingError, TelemetryStore, load_stream
from consensus_lens.verify import check_stream

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _setup_logging() -> None:
    level = os.environ.get("CONSENSUS_LENS_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(path: str) -> SimConfig:
    try:
        return parse_config(path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read config: {exc}")
    except ConfigError as exc:
        _fail(EXIT_CONFIG, f"invalid config: {exc}")


def _parse_addr(addr: str) -> tuple[str, int]:
    host, sep, port_text = addr.rpartition(":")
    if not sep:
        host, port_text = "127.0.0.1", addr
    host = host or "127.0.0.1"
    try:
        port = int(port_text)
    except ValueError:
        port = -1
    if not (0 < port < 65536):
        _fail(EXIT_CONFIG, f"invalid --serve address {addr!r}, expected HOST:PORT")
    return host, port


@click.group()
@click.version_option(package_name="consensus-lens", prog_name="consensus-lens")
def cli() -> None:
    """Deterministic consensus-protocol simulator with a telemetry service."""
    _setup_logging()


@cli.command()
@click.option("--config", "config_path", required=True, metavar="FILE",
              help="Scenario config (YAML/JSON key-value tree).")
@click.option("--out", "out_path", default=None, metavar="FILE",
              help="Write the telemetry stream to this JSONL file.")
@click.option("--serve", "serve_addr", default=None, metavar="HOST:PORT",
              help="Serve the query/control API while the simulation runs.")
@click.option("--speed", default=service_mod.DEFAULT_SPEED, show_default=True,
              help="Simulated ms per real ms when serving live.")
def run(config_path: str, out_path: str | None, serve_addr: str | None, speed: float) -> None:
    """Run a simulation from a config file."""
    cfg = _load_config(config_path)
    if speed <= 0:
        _fail(EXIT_CONFIG, "--speed must be positive")

    try:
        store = TelemetryStore(sink_path=out_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot open --out file: {exc}")
    try:
        engine = SimulationEngine(cfg)
    except ConfigError as exc:
        store.close()
        _fail(EXIT_CONFIG, f"invalid config: {exc}")

    if serve_addr is not None:
        host, port = _parse_addr(serve_addr)
        runner = service_mod.LiveRunner(engine, store, speed=speed)
        click.echo(f"serving on http://{host}:{port} (speed {speed} sim-ms/real-ms)")
        try:
            service_mod.serve(runner, host, port)
        except KeyboardInterrupt:
            pass
        finally:
            store.close()
        return

    started = time.perf_counter()
    outcomes = {"finalized": 0, "skip": 0}
    try:
        for event in engine.run():
            store.append(event)
            if event.kind == "slot_outcome":
                outcomes[event.body["kind"]] += 1
    except (OrderingError, RuntimeError) as exc:
        store.close()
        _fail(EXIT_INVARIANT, f"invariant violation during run: {exc}")
    elapsed = time.perf_counter() - started
    store.close()
    stats = engine.stats()
    click.echo(
        f"{cfg.slots} slots in {elapsed:.2f}s: "
        f"{outcomes['finalized']} finalized, {outcomes['skip']} skipped; "
        f"{len(store)} events, {stats['sent']} messages "
        f"({stats['delivered']} delivered, {stats['dropped']} dropped, "
        f"{stats['late_votes']} late votes)"
    )


@cli.command()
@click.option("--in", "in_path", required=True, metavar="FILE",
              help="Recorded JSONL telemetry stream.")
@click.option("--serve", "serve_addr", required=True, metavar="HOST:PORT",
              help="Serve the recorded stream through the query API.")
def replay(in_path: str, serve_addr: str) -> None:
    """Serve a previously recorded stream for inspection."""
    host, port = _parse_addr(serve_addr)
    try:
        events = load_stream(in_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read stream: {exc}")
    except (ValueError, OrderingError) as exc:
        _fail(EXIT_INVARIANT, f"malformed stream: {exc}")

    store = TelemetryStore()
    try:
        store.extend(events)
    except OrderingError as exc:
        _fail(EXIT_INVARIANT, f"stream violates ordering: {exc}")
    runner = service_mod.ReplayRunner(store)
    click.echo(f"replaying {len(store)} events on http://{host}:{port}")
    try:
        service_mod.serve(runner, host, port)
    except KeyboardInterrupt:
        pass


@cli.command()
@click.option("--in", "in_path", required=True, metavar="FILE",
              help="Recorded JSONL telemetry stream.")
def verify(in_path: str) -> None:
    """Check a recorded stream against the integrity invariants."""
    try:
        events = load_stream(in_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read stream: {exc}")
    except (ValueError, OrderingError) as exc:
        click.echo(f"FAIL: malformed stream: {exc}")
        sys.exit(EXIT_INVARIANT)

    violations = check_stream(events)
    if violations:
        for v in violations:
            click.echo(f"violation: {v}", err=True)
        click.echo(f"FAIL: {len(violations)} violation(s) in {len(events)} events")
        sys.exit(EXIT_INVARIANT)
    slots = sum(1 for ev in events if ev.kind == "slot_outcome")
    click.echo(f"OK: {len(events)} events, {slots} slots verified")


def main() -> None:
    cli(prog_name="consensus-lens")


if __name__ == "__main__":
    main()
