"""consensus-lens: a deterministic simulator for vote-based consensus protocols.

The package simulates a slot-based blockchain protocol (seeded role
election, committee attestation routed over a per-slot clustered overlay,
aggregate votes, skip-block liveness) as a single-threaded discrete-event
run, and records everything it does as a timestamped telemetry stream.
The stream feeds a JSONL sink, an HTTP/WebSocket query-and-control
service, and the browser dashboard under ``frontend/``.

Every source of randomness is a counter-mode SHA-256 stream keyed from a
32-byte beacon seed, so a run is a pure function of its configuration:
the same config file always produces a byte-identical stream.
"""

__version__ = "0.1.0"

from consensus_lens.protocol import (
    EntropyProof,
    RoleAssignment,
    SlotOutcome,
    derive_slot_seed,
    elect_roles,
    entropy_step,
    finalize_slot,
    verify_entropy,
)
from consensus_lens.config import SimConfig, ConfigError, parse_config
from consensus_lens.engine import SimulationEngine, simulate
from consensus_lens.telemetry import TelemetryEvent, TelemetryStore, QueryFilter

__all__ = [
    "EntropyProof",
    "RoleAssignment",
    "SlotOutcome",
    "derive_slot_seed",
    "elect_roles",
    "entropy_step",
    "finalize_slot",
    "verify_entropy",
    "SimConfig",
    "ConfigError",
    "parse_config",
    "SimulationEngine",
    "simulate",
    "TelemetryEvent",
    "TelemetryStore",
    "QueryFilter",
]
