"""Deterministic discrete-event engine for the per-slot consensus lifecycle.

One strictly single-threaded event loop owns all state. Events are
processed in increasing ``(time_ms, seq)`` order; time is integer
milliseconds of simulated time and no wall clock appears anywhere, so a
config (fault schedule included) maps to exactly one telemetry stream.

Per slot: the beacon advances one entropy-chain step, every node's role
and the overlay topology derive from the shared slot seed, the producer
proposes to the committee, committee members attest along their cluster
route, and the slot finalizes (or skips) when its timeout fires. Faults
(crash, revive, latency scaling) merge into the same event queue whether
they were scheduled in the config or injected live.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from heapq import heappop, heappush
from typing import Iterator

from consensus_lens import overlay, protocol
from consensus_lens.config import FaultCommand, SimConfig
from consensus_lens.telemetry import TelemetryEvent

logger = logging.getLogger("consensus_lens.engine")


class MessageType(str, Enum):
    BLOCK_PROPOSAL = "block_proposal"
    ATTESTATION = "attestation"
    ATTESTATION_FORWARD = "attestation_forward"
    FINAL_BROADCAST = "final_broadcast"


class _Ev(IntEnum):
    # processed in (time, seq) order; the enum only names the payload
    FAULT = 0
    SLOT_START = 1
    SLOT_TIMEOUT = 2
    DELIVERY = 3


@dataclass
class MessageRecord:
    id: int
    slot: int
    msg_type: MessageType
    src: int
    dst: int
    payload_bytes: int
    send_ms: int
    recv_ms: int
    vote_of: int | None = None  # originating voter, attestation hops only
    delivered: bool | None = None  # resolved at delivery time


@dataclass
class _SlotContext:
    slot: int
    start_ms: int
    timeout_ms: int
    slot_seed: bytes
    roles: protocol.RoleAssignment
    topology: overlay.TopologySnapshot
    block_digest: bytes
    jitter: protocol.HashStream
    votes: dict[int, protocol.Vote] = field(default_factory=dict)
    concluded: bool = False


class SimulationEngine:
    """Event-queue simulator. ``pump()`` processes one event and returns
    the telemetry it emitted; ``run()`` drains the whole queue.

    The engine is the stream's single writer. Live steering goes through
    ``inject_fault``, which timestamps the command at the current simulated
    time and merges it into the queue, so a recorded stream replays the
    effective schedule exactly.
    """

    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        self.nodes = tuple(range(config.n))
        self.now_ms = 0
        self.done = False
        self.current_slot = -1

        self._queue: list[tuple[int, int, _Ev, object]] = []
        self._qseq = 0
        self._tel_seq = 0
        self._msg_id = 0
        self._live: set[int] = set(self.nodes)
        self._pending_revive: set[int] = set()
        self._latency_scale = 1.0
        self._beacon = config.beacon_seed
        self._contexts: dict[int, _SlotContext] = {}
        self._late_votes = 0
        self._sent = 0
        self._delivered = 0
        self._dropped = 0

        for cmd in config.faults:
            self._push(cmd.at_ms, _Ev.FAULT, cmd)
        self._push(0, _Ev.SLOT_START, 0)

    # ------------------------------------------------------------------
    # queue plumbing
    # ------------------------------------------------------------------

    def _push(self, time_ms: int, kind: _Ev, payload) -> None:
        heappush(self._queue, (time_ms, self._qseq, kind, payload))
        self._qseq += 1

    def _emit(self, out: list[TelemetryEvent], kind: str, body: dict) -> None:
        out.append(TelemetryEvent(ts_ms=self.now_ms, seq=self._tel_seq, kind=kind, body=body))
        self._tel_seq += 1

    def next_time(self) -> int | None:
        return self._queue[0][0] if self._queue else None

    def pump(self) -> list[TelemetryEvent]:
        """Process the next queued event; returns emitted telemetry."""
        if not self._queue:
            self.done = True
            return []
        time_ms, _, kind, payload = heappop(self._queue)
        self.now_ms = time_ms
        out: list[TelemetryEvent] = []
        if kind is _Ev.SLOT_START:
            self._on_slot_start(out, payload)
        elif kind is _Ev.SLOT_TIMEOUT:
            self._on_slot_timeout(out, payload)
        elif kind is _Ev.DELIVERY:
            self._on_delivery(out, payload)
        elif kind is _Ev.FAULT:
            self._on_fault(out, payload)
        if not self._queue:
            # terminal marker: value equals its own seq (the count of all
            # prior events), making stream truncation detectable
            self._emit(out, "counter", {
                "name": "run_complete",
                "slot": self.current_slot,
                "value": self._tel_seq,
            })
            self.done = True
        return out

    def run(self) -> Iterator[TelemetryEvent]:
        while not self.done:
            yield from self.pump()

    # ------------------------------------------------------------------
    # steering
    # ------------------------------------------------------------------

    def inject_fault(self, action: str, target: int | None = None, scale: float | None = None) -> FaultCommand:
        """Merge a live control command into the queue at the current
        simulated time. Identical semantics to a scheduled fault."""
        cmd = FaultCommand(at_ms=self.now_ms, action=action, target=target, scale=scale)
        cmd.validate(self.config.n)
        self._push(self.now_ms, _Ev.FAULT, cmd)
        return cmd

    def stats(self) -> dict:
        return {
            "sent": self._sent,
            "delivered": self._delivered,
            "dropped": self._dropped,
            "late_votes": self._late_votes,
        }

    # ------------------------------------------------------------------
    # latency model
    # ------------------------------------------------------------------

    def _latency_ms(self, ctx: _SlotContext, src: int, dst: int, payload_bytes: int) -> float:
        """base + distance * per_unit + payload / bandwidth + jitter, all
        scaled by the current latency factor. Jitter is one seeded uniform
        draw in [0, jitter_max_ms) from the originating slot's stream."""
        cfg = self.config
        ps = ctx.topology.points[src]
        pd = ctx.topology.points[dst]
        dx = ps.x - pd.x
        dy = ps.y - pd.y
        dist = math.sqrt(dx * dx + dy * dy)
        jitter = ctx.jitter.unit_float() * cfg.jitter_max_ms
        raw = (
            cfg.base_latency_ms
            + dist * cfg.per_unit_distance_ms
            + payload_bytes / cfg.bandwidth_bytes_per_ms
            + jitter
        )
        return raw * self._latency_scale

    def _send(
        self,
        ctx: _SlotContext,
        msg_type: MessageType,
        src: int,
        dst: int,
        payload_bytes: int,
        vote_of: int | None = None,
    ) -> None:
        # engine invariant: messages only originate from live nodes
        assert src in self._live, f"dead sender {src}"
        delay = math.floor(self._latency_ms(ctx, src, dst, payload_bytes))
        rec = MessageRecord(
            id=self._msg_id,
            slot=ctx.slot,
            msg_type=msg_type,
            src=src,
            dst=dst,
            payload_bytes=payload_bytes,
            send_ms=self.now_ms,
            recv_ms=self.now_ms + delay,
            vote_of=vote_of,
        )
        self._msg_id += 1
        self._sent += 1
        self._push(rec.recv_ms, _Ev.DELIVERY, rec)

    # ------------------------------------------------------------------
    # event handlers
    # ------------------------------------------------------------------

    def _on_slot_start(self, out: list[TelemetryEvent], slot: int) -> None:
        cfg = self.config
        if self._pending_revive:
            self._live |= self._pending_revive
            self._pending_revive.clear()

        proof = protocol.entropy_step(self._beacon, cfg.vdf_iterations_per_slot)
        self._beacon = proof.output
        slot_seed = protocol.derive_slot_seed(self._beacon, slot)
        roles = protocol.elect_roles(slot_seed, self.nodes, cfg.committee_size, slot=slot)
        topology = overlay.build_topology(
            slot, slot_seed, self.nodes, cfg.k, max_iters=cfg.kmeans_max_iters
        )
        ctx = _SlotContext(
            slot=slot,
            start_ms=self.now_ms,
            timeout_ms=self.now_ms + cfg.slot_duration_ms,
            slot_seed=slot_seed,
            roles=roles,
            topology=topology,
            block_digest=protocol.candidate_block_digest(slot, slot_seed, roles.producer),
            jitter=protocol.HashStream(
                protocol.purpose_seed(slot_seed, protocol.DOMAIN_JITTER)
            ),
        )
        self._contexts[slot] = ctx
        self.current_slot = slot

        self._emit(out, "role_assignment", {
            "slot": slot,
            "slot_seed": slot_seed.hex(),
            "producer": roles.producer,
            "committee": list(roles.committee),
            "validators": list(roles.validators),
        })
        reps = [topology.representatives.get(c) for c in range(topology.k)]
        self._emit(out, "topology", {
            "slot": slot,
            "k": topology.k,
            "points": [[p.x, p.y] for p in topology.points],
            "assignment": list(topology.assignment),
            "centroids": [[x, y] for x, y in topology.centroids],
            "representatives": reps,
            "objective_trace": list(topology.objective_trace),
        })

        self._push(ctx.timeout_ms, _Ev.SLOT_TIMEOUT, slot)
        if slot + 1 < cfg.slots:
            self._push((slot + 1) * cfg.slot_duration_ms, _Ev.SLOT_START, slot + 1)

        if roles.producer in self._live:
            for member in roles.committee:
                self._send(
                    ctx, MessageType.BLOCK_PROPOSAL, roles.producer, member,
                    cfg.proposal_payload_bytes,
                )
        else:
            logger.debug("slot %d: producer %d dead at slot start", slot, roles.producer)

    def _on_delivery(self, out: list[TelemetryEvent], rec: MessageRecord) -> None:
        rec.delivered = rec.src in self._live and rec.dst in self._live
        if rec.delivered:
            self._delivered += 1
        else:
            self._dropped += 1
        body = {
            "id": rec.id,
            "slot": rec.slot,
            "msg_type": rec.msg_type.value,
            "src": rec.src,
            "dst": rec.dst,
            "payload_bytes": rec.payload_bytes,
            "send_ms": rec.send_ms,
            "recv_ms": rec.recv_ms,
            "delivered": rec.delivered,
        }
        if rec.vote_of is not None:
            body["vote_of"] = rec.vote_of
        self._emit(out, "message", body)
        if not rec.delivered:
            return

        ctx = self._contexts[rec.slot]
        if rec.msg_type is MessageType.BLOCK_PROPOSAL:
            self._attest(ctx, member=rec.dst)
        elif rec.msg_type in (MessageType.ATTESTATION, MessageType.ATTESTATION_FORWARD):
            if rec.dst == ctx.roles.producer:
                self._receive_vote(out, ctx, voter=rec.vote_of)
            else:
                # cluster representative relays toward the producer
                self._send(
                    ctx, MessageType.ATTESTATION_FORWARD, rec.dst, ctx.roles.producer,
                    self.config.vote_payload_bytes, vote_of=rec.vote_of,
                )
        # FINAL_BROADCAST: terminal, nothing to do

    def _attest(self, ctx: _SlotContext, member: int) -> None:
        """A committee member votes on proposal receipt, sending its
        attestation along the cluster route for its slot."""
        hops = overlay.route_attestation(member, ctx.roles.producer, ctx.topology)
        self._send(
            ctx, MessageType.ATTESTATION, hops[0], hops[1],
            self.config.vote_payload_bytes, vote_of=member,
        )

    def _receive_vote(self, out: list[TelemetryEvent], ctx: _SlotContext, voter: int) -> None:
        vote = protocol.sign_vote(
            protocol.node_key(voter), ctx.block_digest, slot=ctx.slot, voter=voter
        )
        if not protocol.verify_vote(vote, protocol.node_key(voter)):  # pragma: no cover
            raise RuntimeError("vote failed verification")
        if ctx.concluded:
            # arrived at or after the slot timeout: dropped from the count
            self._late_votes += 1
            self._emit(out, "counter", {
                "name": "late_votes", "slot": ctx.slot, "value": self._late_votes,
            })
            return
        if voter not in ctx.votes:
            ctx.votes[voter] = vote

    def _on_slot_timeout(self, out: list[TelemetryEvent], slot: int) -> None:
        cfg = self.config
        ctx = self._contexts[slot]
        ctx.concluded = True
        votes = [ctx.votes[v] for v in sorted(ctx.votes)]
        producer = ctx.roles.producer

        if producer in self._live:
            outcome = protocol.finalize_slot(
                slot, ctx.block_digest, votes, cfg.committee_size, cfg.quorum
            )
        else:
            # liveness fail-safe: a dead producer cannot assemble or
            # broadcast, so the chain records a skip block
            outcome = protocol.SlotOutcome(
                slot=slot, kind=protocol.OutcomeKind.SKIP, vote_count=len(votes)
            )

        body = {
            "slot": slot,
            "kind": outcome.kind.value,
            "vote_count": outcome.vote_count,
            "quorum_threshold": protocol.quorum_threshold(cfg.quorum, cfg.committee_size),
        }
        if outcome.kind is protocol.OutcomeKind.FINALIZED:
            agg = outcome.aggregate
            keys = {v: protocol.node_key(v) for v in agg.signer_list()}
            if not protocol.verify_aggregate(agg, ctx.block_digest, keys):  # pragma: no cover
                raise RuntimeError("aggregate failed verification")
            body["block_digest"] = outcome.block_digest.hex()
            body["aggregate"] = {
                "block_digest": agg.block_digest.hex(),
                "signers": agg.signer_list(),
                "tag": agg.tag.hex(),
            }
            for node in self.nodes:
                if node != producer and node in self._live:
                    self._send(
                        ctx, MessageType.FINAL_BROADCAST, producer, node,
                        cfg.aggregate_payload_bytes,
                    )
        self._emit(out, "slot_outcome", body)

    def _on_fault(self, out: list[TelemetryEvent], cmd: FaultCommand) -> None:
        applied = False
        note = None
        effective_ms = None
        if cmd.action == "kill_node":
            if cmd.target in self._live:
                self._live.discard(cmd.target)
                applied = True
            else:
                note = "already dead"
        elif cmd.action == "revive_node":
            if cmd.target in self._live:
                note = "already live"
            elif cmd.target in self._pending_revive:
                note = "revive already pending"
            else:
                self._pending_revive.add(cmd.target)
                applied = True
            next_slot = self.current_slot + 1
            if applied and next_slot < self.config.slots:
                effective_ms = next_slot * self.config.slot_duration_ms
        elif cmd.action == "set_latency_scale":
            self._latency_scale = cmd.scale
            applied = True
        body = {
            "at_ms": cmd.at_ms,
            "action": cmd.action,
            "applied": applied,
        }
        if cmd.target is not None:
            body["target"] = cmd.target
        if cmd.scale is not None:
            body["scale"] = cmd.scale
        if note is not None:
            body["note"] = note
        if effective_ms is not None:
            body["effective_ms"] = effective_ms
        self._emit(out, "fault", body)


def simulate(config: SimConfig) -> Iterator[TelemetryEvent]:
    """Run a full simulation at maximum speed, yielding telemetry events."""
    engine = SimulationEngine(config)
    yield from engine.run()
