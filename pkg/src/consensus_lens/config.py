"""Scenario configuration: one human-editable YAML/JSON document.

Keys mirror SimConfig field names exactly. Unknown keys are rejected so a
typo never silently falls back to a default. ``n``, ``slots`` and
``beacon_seed`` are required; everything else has a documented default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import yaml

from consensus_lens.protocol import seed_from_hex


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


FAULT_ACTIONS = ("kill_node", "revive_node", "set_latency_scale")


@dataclass(frozen=True)
class FaultCommand:
    """A scheduled fault: kill/revive a node or rescale latency at a
    simulated timestamp. Redundant commands apply as recorded no-ops."""

    at_ms: int
    action: str
    target: int | None = None  # kill_node / revive_node
    scale: float | None = None  # set_latency_scale

    def validate(self, n: int) -> None:
        if self.at_ms < 0:
            raise ConfigError("fault at_ms must be >= 0")
        if self.action not in FAULT_ACTIONS:
            raise ConfigError(f"unknown fault action: {self.action!r}")
        if self.action in ("kill_node", "revive_node"):
            if self.target is None or not 0 <= self.target < n:
                raise ConfigError(f"fault target must be a node id in [0, {n})")
        if self.action == "set_latency_scale":
            if self.scale is None or self.scale <= 0:
                raise ConfigError("set_latency_scale requires scale > 0")


def default_committee_size(n: int) -> int:
    return min(math.ceil(n / 3), n - 1)


def default_cluster_count(n: int) -> int:
    return max(1, min(math.ceil(math.sqrt(n)), n))


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation run. Two runs with equal configs
    produce byte-identical telemetry streams."""

    n: int
    slots: int
    beacon_seed: bytes
    committee_size: int = -1  # -1: ceil(n/3) capped at n-1
    k: int = -1  # -1: ceil(sqrt(n))
    quorum: Fraction = Fraction(2, 3)
    slot_duration_ms: int = 1000
    base_latency_ms: float = 20.0
    per_unit_distance_ms: float = 50.0
    bandwidth_bytes_per_ms: float = 1000.0
    jitter_max_ms: float = 10.0
    proposal_payload_bytes: int = 4096
    vote_payload_bytes: int = 96
    aggregate_payload_bytes: int = 256
    vdf_iterations_per_slot: int = 64
    kmeans_max_iters: int = 50
    faults: tuple[FaultCommand, ...] = ()

    def __post_init__(self):
        if self.committee_size == -1:
            object.__setattr__(self, "committee_size", default_committee_size(self.n))
        if self.k == -1:
            object.__setattr__(self, "k", default_cluster_count(self.n))

    def validate(self) -> None:
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.slots < 1:
            raise ConfigError("slots must be >= 1")
        if len(self.beacon_seed) != 32:
            raise ConfigError("beacon_seed must be 32 bytes (64 hex chars)")
        if not 0 <= self.committee_size <= self.n - 1:
            raise ConfigError(
                f"committee_size must be in [0, n-1]={self.n - 1}, "
                f"got {self.committee_size}"
            )
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"k must be in [1, n]={self.n}, got {self.k}")
        if not 0 < self.quorum <= 1:
            raise ConfigError("quorum must be a ratio in (0, 1]")
        if self.slot_duration_ms <= 0:
            raise ConfigError("slot_duration_ms must be > 0")
        for name in (
            "base_latency_ms",
            "per_unit_distance_ms",
            "jitter_max_ms",
        ):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.bandwidth_bytes_per_ms <= 0:
            raise ConfigError("bandwidth_bytes_per_ms must be > 0")
        for name in (
            "proposal_payload_bytes",
            "vote_payload_bytes",
            "aggregate_payload_bytes",
        ):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.vdf_iterations_per_slot < 0:
            raise ConfigError("vdf_iterations_per_slot must be >= 0")
        if self.kmeans_max_iters < 1:
            raise ConfigError("kmeans_max_iters must be >= 1")
        for cmd in self.faults:
            cmd.validate(self.n)

    def echo(self) -> dict:
        """JSON-friendly view of the effective configuration."""
        return {
            "n": self.n,
            "slots": self.slots,
            "beacon_seed": self.beacon_seed.hex(),
            "committee_size": self.committee_size,
            "k": self.k,
            "quorum": f"{self.quorum.numerator}/{self.quorum.denominator}",
            "slot_duration_ms": self.slot_duration_ms,
            "base_latency_ms": self.base_latency_ms,
            "per_unit_distance_ms": self.per_unit_distance_ms,
            "bandwidth_bytes_per_ms": self.bandwidth_bytes_per_ms,
            "jitter_max_ms": self.jitter_max_ms,
            "proposal_payload_bytes": self.proposal_payload_bytes,
            "vote_payload_bytes": self.vote_payload_bytes,
            "aggregate_payload_bytes": self.aggregate_payload_bytes,
            "vdf_iterations_per_slot": self.vdf_iterations_per_slot,
            "kmeans_max_iters": self.kmeans_max_iters,
            "faults": [
                {
                    k: v
                    for k, v in (
                        ("at_ms", c.at_ms),
                        ("action", c.action),
                        ("target", c.target),
                        ("scale", c.scale),
                    )
                    if v is not None
                }
                for c in self.faults
            ],
        }


_INT_KEYS = {
    "n",
    "slots",
    "committee_size",
    "k",
    "slot_duration_ms",
    "proposal_payload_bytes",
    "vote_payload_bytes",
    "aggregate_payload_bytes",
    "vdf_iterations_per_slot",
    "kmeans_max_iters",
}
_FLOAT_KEYS = {
    "base_latency_ms",
    "per_unit_distance_ms",
    "bandwidth_bytes_per_ms",
    "jitter_max_ms",
}
_REQUIRED_KEYS = ("n", "slots", "beacon_seed")


def parse_quorum(value) -> Fraction:
    """Accept "2/3", integers, or decimal literals. Parsed exactly (the
    quorum threshold is exact rational arithmetic, never float)."""
    try:
        if isinstance(value, float):
            # route through str so 0.5 means the decimal 1/2, not its
            # binary expansion
            q = Fraction(str(value))
        else:
            q = Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"invalid quorum: {value!r}") from exc
    if not 0 < q <= 1:
        raise ConfigError(f"quorum must be in (0, 1], got {q}")
    return q


def _parse_fault(entry, index: int) -> FaultCommand:
    if not isinstance(entry, dict):
        raise ConfigError(f"faults[{index}] must be a mapping")
    allowed = {"at_ms", "action", "target", "scale"}
    unknown = set(entry) - allowed
    if unknown:
        raise ConfigError(f"faults[{index}] has unknown keys: {sorted(unknown)}")
    missing = {"at_ms", "action"} - set(entry)
    if missing:
        raise ConfigError(f"faults[{index}] missing keys: {sorted(missing)}")
    try:
        at_ms = int(entry["at_ms"])
        target = int(entry["target"]) if "target" in entry else None
        scale = float(entry["scale"]) if "scale" in entry else None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"faults[{index}] has a malformed field: {exc}") from exc
    return FaultCommand(at_ms=at_ms, action=str(entry["action"]), target=target, scale=scale)


def config_from_mapping(doc: dict) -> SimConfig:
    """Build and validate a SimConfig from a parsed document."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a key-value mapping")
    known = {f.name for f in fields(SimConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")

    kwargs: dict = {}
    for key, value in doc.items():
        if key == "beacon_seed":
            try:
                kwargs[key] = seed_from_hex(str(value))
            except ValueError as exc:
                raise ConfigError(f"beacon_seed: {exc}") from exc
        elif key == "quorum":
            kwargs[key] = parse_quorum(value)
        elif key == "faults":
            if not isinstance(value, list):
                raise ConfigError("faults must be a list")
            kwargs[key] = tuple(_parse_fault(e, i) for i, e in enumerate(value))
        elif key in _INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
            kwargs[key] = value
        elif key in _FLOAT_KEYS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            kwargs[key] = float(value)
        else:  # pragma: no cover - keys are exhausted above
            kwargs[key] = value

    cfg = SimConfig(**kwargs)
    cfg.validate()
    return cfg


def parse_config(path: str | Path) -> SimConfig:
    """Load a scenario file. YAML (JSON is a subset) with SimConfig keys."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file: {exc}") from exc
    return config_from_mapping(doc)
