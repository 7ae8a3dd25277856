"""Integrity checks for recorded telemetry streams.

Verification needs no config and no re-simulation. Structural checks
(contiguous sequence numbers, monotone timestamps, known kinds, required
body fields) catch any dropped, reordered, or edited line. Semantic
checks recompute what the stream itself makes recomputable: role
partitions, cluster assignments, attestation membership, quorum
arithmetic, and the aggregate vote tag, which is rebuilt from the listed
signers' keys and must match byte for byte.
"""

from __future__ import annotations

from consensus_lens import overlay, protocol
from consensus_lens.telemetry import EVENT_KINDS, TelemetryEvent

_REQUIRED_KEYS = {
    "role_assignment": ("slot", "slot_seed", "producer", "committee", "validators"),
    "topology": ("slot", "k", "points", "assignment", "centroids",
                 "representatives", "objective_trace"),
    "message": ("id", "slot", "msg_type", "src", "dst", "payload_bytes",
                "send_ms", "recv_ms", "delivered"),
    "slot_outcome": ("slot", "kind", "vote_count", "quorum_threshold"),
    "fault": ("at_ms", "action", "applied"),
    "counter": ("name", "slot", "value"),
}

_MSG_TYPES = {"block_proposal", "attestation", "attestation_forward", "final_broadcast"}


def check_stream(events: list[TelemetryEvent]) -> list[str]:
    """Return a list of violations; an empty list means the stream is
    internally consistent. Every violation names the offending seq."""
    violations: list[str] = []
    bad = violations.append

    if not events:
        bad("stream is empty")
        return violations

    # ---- structural ---------------------------------------------------
    prev_ts = None
    for i, ev in enumerate(events):
        if ev.seq != i:
            bad(f"seq {ev.seq}: expected seq {i}, stream has a gap or reorder")
            return violations  # downstream checks would only cascade
        if prev_ts is not None and ev.ts_ms < prev_ts:
            bad(f"seq {ev.seq}: ts_ms {ev.ts_ms} decreases from {prev_ts}")
        prev_ts = ev.ts_ms
        if ev.kind not in EVENT_KINDS:
            bad(f"seq {ev.seq}: unknown kind {ev.kind!r}")
            continue
        missing = [k for k in _REQUIRED_KEYS[ev.kind] if k not in ev.body]
        if missing:
            bad(f"seq {ev.seq}: {ev.kind} body missing {missing}")
    if violations:
        return violations

    # ---- terminal marker ----------------------------------------------
    last = events[-1]
    if last.kind != "counter" or last.body.get("name") != "run_complete":
        bad(f"seq {last.seq}: stream does not end with its run_complete marker "
            "(truncated?)")
    elif last.body.get("value") != last.seq:
        bad(f"seq {last.seq}: run_complete value {last.body.get('value')} does not "
            f"match its position")
    for ev in events[:-1]:
        if ev.kind == "counter" and ev.body.get("name") == "run_complete":
            bad(f"seq {ev.seq}: run_complete marker before the end of the stream")

    # ---- semantic, per slot -------------------------------------------
    roles: dict[int, TelemetryEvent] = {}
    topologies: dict[int, TelemetryEvent] = {}
    outcomes: dict[int, TelemetryEvent] = {}

    # liveness timeline, replayed from the fault events themselves: kills
    # take hold where they appear in the stream, revives at the first slot
    # boundary at or past their effective_ms (matching slot-start order)
    dead: set[int] = set()
    pending_revive: list[tuple[int, int]] = []  # (effective_ms, node)

    for ev in events:
        if ev.kind == "role_assignment":
            still_pending = []
            for eff, node in pending_revive:
                if eff <= ev.ts_ms:
                    dead.discard(node)
                else:
                    still_pending.append((eff, node))
            pending_revive = still_pending
            _check_roles(ev, bad)
            if ev.body["slot"] in roles:
                bad(f"seq {ev.seq}: duplicate role_assignment for slot {ev.body['slot']}")
            roles[ev.body["slot"]] = ev
        elif ev.kind == "topology":
            _check_topology(ev, roles.get(ev.body["slot"]), bad)
            topologies[ev.body["slot"]] = ev
        elif ev.kind == "message":
            _check_message(ev, roles.get(ev.body["slot"]), bad)
        elif ev.kind == "fault":
            b = ev.body
            if b["action"] == "kill_node" and b["applied"]:
                dead.add(b["target"])
            elif b["action"] == "revive_node" and b.get("effective_ms") is not None:
                pending_revive.append((b["effective_ms"], b["target"]))
        elif ev.kind == "slot_outcome":
            roles_ev = roles.get(ev.body["slot"])
            producer_dead = (
                roles_ev is not None and roles_ev.body["producer"] in dead
            )
            _check_outcome(ev, roles_ev, producer_dead, bad)
            if ev.body["slot"] in outcomes:
                bad(f"seq {ev.seq}: duplicate slot_outcome for slot {ev.body['slot']}")
            outcomes[ev.body["slot"]] = ev

    for slot, ev in roles.items():
        if slot not in topologies:
            bad(f"seq {ev.seq}: slot {slot} has roles but no topology event")
        if slot not in outcomes:
            bad(f"seq {ev.seq}: slot {slot} has roles but no outcome event")
    for slot, ev in outcomes.items():
        if slot not in roles:
            bad(f"seq {ev.seq}: slot {slot} has an outcome but no role_assignment")
    return violations


# ---------------------------------------------------------------------------
# per-kind checks
# ---------------------------------------------------------------------------

def _check_roles(ev: TelemetryEvent, bad) -> None:
    b = ev.body
    members = [b["producer"], *b["committee"], *b["validators"]]
    if len(set(members)) != len(members):
        bad(f"seq {ev.seq}: role assignment repeats a node")
    if sorted(members) != list(range(len(members))):
        bad(f"seq {ev.seq}: roles do not partition the node set")
    try:
        seed = protocol.seed_from_hex(b["slot_seed"])
    except (ValueError, TypeError):
        bad(f"seq {ev.seq}: slot_seed is not a 32-byte hex string")
        return
    derived = protocol.elect_roles(seed, range(len(members)), len(b["committee"]), slot=b["slot"])
    if (derived.producer != b["producer"]
            or list(derived.committee) != list(b["committee"])
            or list(derived.validators) != list(b["validators"])):
        bad(f"seq {ev.seq}: roles do not match the election derived from slot_seed")


def _check_topology(ev: TelemetryEvent, roles_ev: TelemetryEvent | None, bad) -> None:
    b = ev.body
    n = len(b["points"])
    k = b["k"]
    if roles_ev is None:
        bad(f"seq {ev.seq}: topology for slot {b['slot']} precedes its role_assignment")
    if len(b["assignment"]) != n:
        bad(f"seq {ev.seq}: assignment length {len(b['assignment'])} != {n} points")
        return
    if len(b["centroids"]) != k or len(b["representatives"]) != k:
        bad(f"seq {ev.seq}: centroid or representative list is not length k={k}")
        return
    if any(not (0 <= c < k) for c in b["assignment"]):
        bad(f"seq {ev.seq}: assignment references a cluster outside 0..{k - 1}")
        return
    for cluster, rep in enumerate(b["representatives"]):
        if rep is None:
            if cluster in b["assignment"]:
                bad(f"seq {ev.seq}: cluster {cluster} has members but no representative")
        elif not (0 <= rep < n) or b["assignment"][rep] != cluster:
            bad(f"seq {ev.seq}: representative {rep} is not a member of cluster {cluster}")
    trace = b["objective_trace"]
    if any(later > earlier for earlier, later in zip(trace, trace[1:])):
        bad(f"seq {ev.seq}: clustering objective increases along its trace")
    if roles_ev is not None:
        seed = protocol.seed_from_hex(roles_ev.body["slot_seed"])
        derived = [[p.x, p.y] for p in overlay.embed_nodes(seed, range(n))]
        if derived != b["points"]:
            bad(f"seq {ev.seq}: node coordinates do not match the slot_seed embedding")


def _check_message(ev: TelemetryEvent, roles_ev: TelemetryEvent | None, bad) -> None:
    b = ev.body
    if b["msg_type"] not in _MSG_TYPES:
        bad(f"seq {ev.seq}: unknown msg_type {b['msg_type']!r}")
        return
    if b["recv_ms"] < b["send_ms"]:
        bad(f"seq {ev.seq}: message received before it was sent")
    if b["recv_ms"] != ev.ts_ms:
        bad(f"seq {ev.seq}: message event logged at {ev.ts_ms}, not its recv_ms {b['recv_ms']}")
    if b["src"] == b["dst"]:
        bad(f"seq {ev.seq}: message from a node to itself")
    if roles_ev is None:
        return
    rb = roles_ev.body
    committee = set(rb["committee"])
    if b["msg_type"] == "block_proposal":
        if b["src"] != rb["producer"] or b["dst"] not in committee:
            bad(f"seq {ev.seq}: proposal endpoints do not match slot roles")
    elif b["msg_type"] in ("attestation", "attestation_forward"):
        if b.get("vote_of") not in committee:
            bad(f"seq {ev.seq}: attestation vote_of is not a committee member")
        if b["msg_type"] == "attestation" and b["src"] != b.get("vote_of"):
            bad(f"seq {ev.seq}: attestation src is not the voter itself")
        if b["msg_type"] == "attestation_forward" and b["dst"] != rb["producer"]:
            bad(f"seq {ev.seq}: forwarded attestation not addressed to the producer")
    elif b["msg_type"] == "final_broadcast":
        if b["src"] != rb["producer"]:
            bad(f"seq {ev.seq}: final broadcast not sent by the producer")


def _check_outcome(ev: TelemetryEvent, roles_ev: TelemetryEvent | None,
                   producer_dead: bool, bad) -> None:
    b = ev.body
    if b["kind"] not in ("finalized", "skip"):
        bad(f"seq {ev.seq}: unknown outcome kind {b['kind']!r}")
        return
    finalized = b["kind"] == "finalized"
    if finalized != ("aggregate" in b):
        bad(f"seq {ev.seq}: aggregate present iff finalized is violated")
        return
    if finalized and b["vote_count"] < b["quorum_threshold"]:
        bad(f"seq {ev.seq}: finalized with {b['vote_count']} votes below "
            f"threshold {b['quorum_threshold']}")
    if finalized and producer_dead:
        bad(f"seq {ev.seq}: finalized although the producer was dead at the deadline")
    # a dead producer cannot assemble the block, so a skip with enough
    # votes is legitimate only in that case
    if not finalized and b["vote_count"] >= b["quorum_threshold"] and not producer_dead:
        bad(f"seq {ev.seq}: skip recorded despite a quorum of votes")
    if not finalized:
        return

    agg_b = b["aggregate"]
    signers = agg_b["signers"]
    if len(signers) != b["vote_count"]:
        bad(f"seq {ev.seq}: vote_count {b['vote_count']} != {len(signers)} signers")
    if len(set(signers)) != len(signers):
        bad(f"seq {ev.seq}: aggregate lists a duplicate signer")
        return
    if roles_ev is not None:
        committee = set(roles_ev.body["committee"])
        outside = [s for s in signers if s not in committee]
        if outside:
            bad(f"seq {ev.seq}: signers {outside} are not committee members")
    if agg_b["block_digest"] != b["block_digest"]:
        bad(f"seq {ev.seq}: aggregate digest differs from the outcome digest")
        return
    try:
        digest = bytes.fromhex(b["block_digest"])
        tag = bytes.fromhex(agg_b["tag"])
    except ValueError:
        bad(f"seq {ev.seq}: digest or tag is not valid hex")
        return
    bitmap = 0
    for s in signers:
        bitmap |= 1 << s
    agg = protocol.AggregateVote(block_digest=digest, signers=bitmap, tag=tag)
    keys = {s: protocol.node_key(s) for s in signers}
    if not protocol.verify_aggregate(agg, digest, keys):
        bad(f"seq {ev.seq}: aggregate tag does not verify against its signers")
