"""Consensus protocol core: entropy beacon, role election, votes, finalization.

Everything in this module is a pure function of 32-byte seeds and small
integers. The designated hash is SHA-256 throughout; randomness is drawn
from counter-mode hash streams with per-purpose domain separation, so any
node holding the shared seed reproduces the exact same elections and
topologies without communicating.

The signature scheme is a deterministic stand-in, not cryptography:
tag = SHA256(key || digest), combined by byte-wise XOR. It keeps the
algebra the simulator cares about (determinism, commutative aggregation,
signer-set binding) and hides behind ``TagScheme`` so a pairing-based
scheme can be dropped in.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

SEED_LEN = 32

# Domain-separation labels for per-purpose hash streams derived from a
# slot seed. Adding a label never perturbs draws under existing labels.
DOMAIN_ROLE_ELECTION = b"role-election"
DOMAIN_OVERLAY_INIT = b"overlay-init"
DOMAIN_JITTER = b"jitter"

_KEY_PREFIX = b"consensus-lens/node-key/"
_BLOCK_PREFIX = b"consensus-lens/block/"


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def be8(value: int) -> bytes:
    """Encode a non-negative integer as 8 big-endian bytes."""
    return value.to_bytes(8, "big")


def seed_to_hex(seed: bytes) -> str:
    """Canonical wire encoding for seeds/digests: 64 lowercase hex chars."""
    return seed.hex()


def seed_from_hex(text: str) -> bytes:
    raw = bytes.fromhex(text)
    if len(raw) != SEED_LEN:
        raise ValueError(f"expected {SEED_LEN}-byte value, got {len(raw)} bytes")
    return raw


def check_seed(seed: bytes, what: str = "seed") -> bytes:
    if not isinstance(seed, (bytes, bytearray)) or len(seed) != SEED_LEN:
        raise ValueError(f"{what} must be exactly {SEED_LEN} bytes")
    return bytes(seed)


# ---------------------------------------------------------------------------
# Entropy beacon (iterated hash chain standing in for a VDF)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntropyProof:
    """Result of evolving the beacon: output = H^iterations(input)."""

    input: bytes
    iterations: int
    output: bytes


def entropy_step(prev: bytes, iterations: int) -> EntropyProof:
    """Advance the entropy beacon by ``iterations`` sequential hash applications.

    The chain is deliberately sequential: it models a delay function whose
    output cannot be computed faster than one hash at a time, while
    verification is a plain recomputation.
    """
    check_seed(prev, "beacon seed")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    out = prev
    for _ in range(iterations):
        out = sha256(out)
    return EntropyProof(input=prev, iterations=iterations, output=out)


def verify_entropy(proof: EntropyProof) -> bool:
    """Recompute the hash chain; True iff it reproduces ``proof.output``."""
    if len(proof.input) != SEED_LEN or len(proof.output) != SEED_LEN:
        return False
    if proof.iterations < 0:
        return False
    out = proof.input
    for _ in range(proof.iterations):
        out = sha256(out)
    return out == proof.output


def derive_slot_seed(beacon: bytes, slot: int) -> bytes:
    """Per-slot seed: H(beacon || slot as 8-byte big-endian)."""
    check_seed(beacon, "beacon")
    if slot < 0:
        raise ValueError("slot must be >= 0")
    return sha256(beacon + be8(slot))


def purpose_seed(slot_seed: bytes, label: bytes) -> bytes:
    """Domain-separated stream key: H(slot_seed || label)."""
    return sha256(check_seed(slot_seed) + label)


# ---------------------------------------------------------------------------
# Counter-mode hash stream
# ---------------------------------------------------------------------------

class HashStream:
    """Deterministic random stream: block i = H(key || be8(i)), read as
    big-endian 64-bit words.

    Bounded draws use rejection sampling, so they are exactly uniform and
    reproduce bit-for-bit in any language with the same hash.
    """

    __slots__ = ("_key", "_counter", "_words")

    def __init__(self, key: bytes):
        self._key = check_seed(key, "stream key")
        self._counter = 0
        self._words: list[int] = []

    def next_u64(self) -> int:
        if not self._words:
            block = sha256(self._key + be8(self._counter))
            self._counter += 1
            # reversed so .pop() yields words in block order
            self._words = [
                int.from_bytes(block[i : i + 8], "big") for i in (24, 16, 8, 0)
            ]
        return self._words.pop()

    def uniform(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % bound

    def unit_float(self) -> float:
        """Uniform float in [0, 1): next 64-bit word divided by 2^64."""
        return self.next_u64() / 18446744073709551616.0


def seeded_shuffle(ids: Iterable[int], stream: HashStream) -> list[int]:
    """Fisher-Yates over the ids sorted ascending, driven by ``stream``.

    Descending variant: for i = n-1 .. 1, swap a[i] with a[uniform(i+1)].
    """
    a = sorted(ids)
    for i in range(len(a) - 1, 0, -1):
        j = stream.uniform(i + 1)
        a[i], a[j] = a[j], a[i]
    return a


def seeded_sample(ids: Iterable[int], k: int, stream: HashStream) -> list[int]:
    """First k draws of an ascending partial Fisher-Yates: k distinct ids,
    uniform without replacement, in selection order."""
    a = sorted(ids)
    if not 0 <= k <= len(a):
        raise ValueError("sample size out of range")
    for i in range(k):
        j = i + stream.uniform(len(a) - i)
        a[i], a[j] = a[j], a[i]
    return a[:k]


# ---------------------------------------------------------------------------
# Roles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Role:
    name: str
    color: str


BUILTIN_ROLES = (
    Role("block_producer", "#2ecc71"),
    Role("committee", "#8e44ad"),
    Role("validator", "#3498db"),
)


class RoleTable:
    """Registry of consensus roles. Built-ins are always present; callers
    may append custom roles but names never collide."""

    def __init__(self) -> None:
        self._roles: dict[str, Role] = {r.name: r for r in BUILTIN_ROLES}

    def add(self, role: Role) -> None:
        if role.name in self._roles:
            raise ValueError(f"role name already registered: {role.name}")
        self._roles[role.name] = role

    def get(self, name: str) -> Role:
        return self._roles[name]

    def names(self) -> list[str]:
        return list(self._roles)


@dataclass(frozen=True)
class RoleAssignment:
    """One slot's partition of the validator set into roles."""

    slot: int
    producer: int
    committee: tuple[int, ...]
    validators: tuple[int, ...]

    def role_of(self, node: int) -> str:
        if node == self.producer:
            return "block_producer"
        if node in self.committee:
            return "committee"
        if node in self.validators:
            return "validator"
        raise KeyError(f"node {node} not in assignment")

    def all_nodes(self) -> frozenset[int]:
        return frozenset((self.producer,)) | frozenset(self.committee) | frozenset(self.validators)


def elect_roles(
    slot_seed: bytes, validator_set: Sequence[int], committee_size: int, slot: int = 0
) -> RoleAssignment:
    """Seeded uniform shuffle of the validator set; position 0 is the
    producer, the next ``committee_size`` are the committee, the rest
    validate.

    The producer sits outside the committee, so committee_size must leave
    at least one node over. ``slot`` only labels the result; the draw
    depends on the seed alone.
    """
    check_seed(slot_seed, "slot seed")
    nodes = list(validator_set)
    n = len(nodes)
    if n < 1:
        raise ValueError("validator set must be nonempty")
    if len(set(nodes)) != n:
        raise ValueError("validator set contains duplicate ids")
    if not 0 <= committee_size <= n - 1:
        raise ValueError(
            f"committee_size must be in [0, n-1]={n - 1}, got {committee_size}"
        )
    stream = HashStream(purpose_seed(slot_seed, DOMAIN_ROLE_ELECTION))
    order = seeded_shuffle(nodes, stream)
    return RoleAssignment(
        slot=slot,
        producer=order[0],
        committee=tuple(order[1 : 1 + committee_size]),
        validators=tuple(order[1 + committee_size :]),
    )


# ---------------------------------------------------------------------------
# Votes and aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vote:
    slot: int
    voter: int
    block_digest: bytes
    tag: bytes


@dataclass(frozen=True)
class AggregateVote:
    """Combined vote: signer bitmap plus the XOR of the member tags.

    The combine is commutative and associative with the all-zero tag as
    identity, so any permutation of the same vote set aggregates to an
    identical value, and the empty aggregate is well defined.
    """

    block_digest: bytes
    signers: int  # bitmap over node indices
    tag: bytes

    def signer_list(self) -> list[int]:
        out = []
        bits = self.signers
        i = 0
        while bits:
            if bits & 1:
                out.append(i)
            bits >>= 1
            i += 1
        return out

    @property
    def vote_count(self) -> int:
        return self.signers.bit_count()


class TagScheme:
    """Deterministic stand-in for an aggregatable signature scheme.

    NOT secure; replace with a pairing-based scheme for real deployments.
    """

    def key_for(self, node: int) -> bytes:
        return sha256(_KEY_PREFIX + be8(node))

    def tag(self, key: bytes, digest: bytes) -> bytes:
        return sha256(key + digest)

    def combine(self, tags: Iterable[bytes]) -> bytes:
        acc = 0
        for t in tags:
            acc ^= int.from_bytes(t, "big")
        return acc.to_bytes(SEED_LEN, "big")


SCHEME = TagScheme()


def node_key(node: int) -> bytes:
    """Per-node key material, a pure function of the node index."""
    return SCHEME.key_for(node)


def sign_vote(voter_key: bytes, block_digest: bytes, *, slot: int, voter: int) -> Vote:
    """Produce the voter's deterministic tag over the block digest."""
    check_seed(block_digest, "block digest")
    return Vote(slot=slot, voter=voter, block_digest=block_digest,
                tag=SCHEME.tag(voter_key, block_digest))


def verify_vote(vote: Vote, voter_key: bytes) -> bool:
    return vote.tag == SCHEME.tag(voter_key, vote.block_digest)


def aggregate_votes(votes: Iterable[Vote]) -> AggregateVote:
    """Combine votes over one block digest into a single aggregate.

    Order-insensitive by construction. Rejects an empty set, mixed
    digests or slots, and duplicate voters.
    """
    votes = list(votes)
    if not votes:
        raise ValueError("cannot aggregate an empty vote set")
    digest = votes[0].block_digest
    slot = votes[0].slot
    signers = 0
    for v in votes:
        if v.block_digest != digest:
            raise ValueError("votes mix block digests")
        if v.slot != slot:
            raise ValueError("votes mix slots")
        bit = 1 << v.voter
        if signers & bit:
            raise ValueError(f"duplicate voter {v.voter}")
        signers |= bit
    return AggregateVote(
        block_digest=digest,
        signers=signers,
        tag=SCHEME.combine(v.tag for v in votes),
    )


def empty_aggregate(block_digest: bytes) -> AggregateVote:
    """Identity aggregate: no signers, all-zero tag. Used when a slot
    finalizes with a zero quorum threshold and no votes."""
    return AggregateVote(block_digest=block_digest, signers=0, tag=bytes(SEED_LEN))


def verify_aggregate(agg: AggregateVote, block_digest: bytes, keys: Mapping[int, bytes]) -> bool:
    """True iff the tag equals the combine of exactly the bitmap's signers'
    expected tags over ``block_digest``."""
    if agg.block_digest != block_digest:
        return False
    try:
        expected = SCHEME.combine(
            SCHEME.tag(keys[i], block_digest) for i in agg.signer_list()
        )
    except KeyError:
        return False
    return agg.tag == expected


# ---------------------------------------------------------------------------
# Slot finalization
# ---------------------------------------------------------------------------

class OutcomeKind(str, Enum):
    FINALIZED = "finalized"
    SKIP = "skip"


@dataclass(frozen=True)
class SlotOutcome:
    slot: int
    kind: OutcomeKind
    vote_count: int
    block_digest: bytes | None = None  # present iff finalized
    aggregate: AggregateVote | None = None  # present iff finalized


def quorum_threshold(quorum: Fraction, committee_size: int) -> int:
    """ceil(quorum * committee_size), in exact rational arithmetic."""
    num = quorum.numerator * committee_size
    den = quorum.denominator
    return -(-num // den)


def candidate_block_digest(slot: int, slot_seed: bytes, producer: int) -> bytes:
    """Digest of the producer's candidate block for the slot. The simulator
    carries no transactions, so the digest binds (slot, producer, seed)."""
    return sha256(_BLOCK_PREFIX + be8(slot) + be8(producer) + slot_seed)


def finalize_slot(
    slot: int,
    block_digest: bytes,
    received_votes: Iterable[Vote],
    committee_size: int,
    quorum: Fraction,
) -> SlotOutcome:
    """Finalize iff the vote count meets ceil(quorum * committee_size);
    otherwise record a skip block so the chain keeps height.

    Callers pass only valid committee votes; a zero threshold finalizes
    producer-only with the identity aggregate.
    """
    votes = list(received_votes)
    threshold = quorum_threshold(quorum, committee_size)
    if len(votes) >= threshold:
        agg = aggregate_votes(votes) if votes else empty_aggregate(block_digest)
        return SlotOutcome(
            slot=slot,
            kind=OutcomeKind.FINALIZED,
            vote_count=len(votes),
            block_digest=block_digest,
            aggregate=agg,
        )
    return SlotOutcome(slot=slot, kind=OutcomeKind.SKIP, vote_count=len(votes))
