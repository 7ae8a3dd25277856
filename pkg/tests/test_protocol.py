"""Protocol core: beacon chain, hash streams, election, votes, quorum.

Expected values marked "frozen" were computed with a standalone
hashlib-only script before this package existed and pasted in verbatim,
so these tests cannot drift along with the implementation.
"""

import hashlib
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_lens import protocol as p

# frozen reference values (independent precomputation)
CHAIN_1 = "630dcd2966c4336691125448bbb25b4ff412a49c732db2c8abc1b8581bd710dd"
CHAIN_1000 = "45cd0d40a72c806c4b78bbeca7a52d9fa6f25751fea57cf1564e7b70b9519db4"
SLOT_SEED_11_0 = "f81644b212d3462ef98c29d15b7238744daf88e7c6622e7fe3cfaaf938f60f88"
SLOT_SEED_11_1 = "1ebd42831ae281e9f44f398b131824280b084e917760862ab6190fee68173783"
SLOT_SEED_22_0 = "f91b337d83bdbe27156e7edd977a126af56ea98b487e19dd6fa114eeac042a8a"

ELECTION_SEED = hashlib.sha256(b"election-oracle-seed").digest()


# ---------------------------------------------------------------------------
# entropy beacon
# ---------------------------------------------------------------------------

def test_entropy_chain_frozen_values():
    start = bytes(range(32))
    one = p.entropy_step(start, 1)
    assert one.output.hex() == CHAIN_1
    thousand = p.entropy_step(start, 1000)
    assert thousand.output.hex() == CHAIN_1000
    assert p.verify_entropy(one)
    assert p.verify_entropy(thousand)


def test_entropy_zero_iterations_is_identity():
    start = bytes(32)
    proof = p.entropy_step(start, 0)
    assert proof.output == start
    assert p.verify_entropy(proof)


def test_entropy_verify_rejects_tampering():
    proof = p.entropy_step(bytes(range(32)), 64)
    wrong_out = p.EntropyProof(proof.input, proof.iterations, bytes(32))
    assert not p.verify_entropy(wrong_out)
    wrong_iters = p.EntropyProof(proof.input, proof.iterations + 1, proof.output)
    assert not p.verify_entropy(wrong_iters)
    wrong_in = p.EntropyProof(bytes(32), proof.iterations, proof.output)
    assert not p.verify_entropy(wrong_in)


def test_entropy_step_rejects_bad_input():
    with pytest.raises(ValueError):
        p.entropy_step(b"short", 1)
    with pytest.raises(ValueError):
        p.entropy_step(bytes(32), -1)


def test_slot_seed_frozen_values():
    assert p.derive_slot_seed(b"\x11" * 32, 0).hex() == SLOT_SEED_11_0
    assert p.derive_slot_seed(b"\x11" * 32, 1).hex() == SLOT_SEED_11_1
    assert p.derive_slot_seed(b"\x22" * 32, 0).hex() == SLOT_SEED_22_0


def test_purpose_seed_is_domain_separated():
    seed = b"\x07" * 32
    role = p.purpose_seed(seed, p.DOMAIN_ROLE_ELECTION)
    overlay = p.purpose_seed(seed, p.DOMAIN_OVERLAY_INIT)
    jitter = p.purpose_seed(seed, p.DOMAIN_JITTER)
    assert len({role, overlay, jitter}) == 3
    # definition check against a direct hashlib computation
    assert role == hashlib.sha256(seed + b"role-election").digest()


# ---------------------------------------------------------------------------
# hash stream
# ---------------------------------------------------------------------------

def test_stream_matches_direct_recomputation():
    key = hashlib.sha256(b"stream-check").digest()
    stream = p.HashStream(key)
    got = [stream.next_u64() for _ in range(9)]
    expected = []
    counter = 0
    while len(expected) < 9:
        block = hashlib.sha256(key + counter.to_bytes(8, "big")).digest()
        counter += 1
        for off in (0, 8, 16, 24):
            expected.append(int.from_bytes(block[off : off + 8], "big"))
    assert got == expected[:9]


def test_stream_same_key_same_sequence():
    key = b"\x42" * 32
    a = p.HashStream(key)
    b = p.HashStream(key)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


@given(st.integers(min_value=1, max_value=2**64 - 1), st.integers(min_value=0, max_value=255))
@settings(max_examples=60, deadline=None)
def test_uniform_always_below_bound(bound, key_byte):
    stream = p.HashStream(bytes([key_byte]) * 32)
    for _ in range(30):
        assert 0 <= stream.uniform(bound) < bound


def test_uniform_rejects_nonpositive_bound():
    stream = p.HashStream(bytes(32))
    with pytest.raises(ValueError):
        stream.uniform(0)


def test_unit_float_range():
    stream = p.HashStream(b"\x0f" * 32)
    values = [stream.unit_float() for _ in range(1000)]
    assert all(0.0 <= v < 1.0 for v in values)
    # not degenerate
    assert len(set(values)) > 990


# ---------------------------------------------------------------------------
# seeded shuffle / sample
# ---------------------------------------------------------------------------

def test_shuffle_frozen_order():
    stream = p.HashStream(p.purpose_seed(ELECTION_SEED, p.DOMAIN_ROLE_ELECTION))
    assert p.seeded_shuffle(range(5), stream) == [1, 4, 3, 0, 2]


def test_sample_frozen_order():
    stream = p.HashStream(p.purpose_seed(ELECTION_SEED, p.DOMAIN_OVERLAY_INIT))
    assert p.seeded_sample(range(5), 2, stream) == [4, 1]


@given(st.sets(st.integers(min_value=0, max_value=500), min_size=1, max_size=40),
       st.binary(min_size=32, max_size=32))
@settings(max_examples=80, deadline=None)
def test_shuffle_is_a_permutation(ids, key):
    out = p.seeded_shuffle(ids, p.HashStream(key))
    assert sorted(out) == sorted(ids)


@given(st.sets(st.integers(min_value=0, max_value=500), min_size=1, max_size=40),
       st.data())
@settings(max_examples=80, deadline=None)
def test_sample_is_distinct_prefix(ids, data):
    k = data.draw(st.integers(min_value=0, max_value=len(ids)))
    key = data.draw(st.binary(min_size=32, max_size=32))
    out = p.seeded_sample(ids, k, p.HashStream(key))
    assert len(out) == k
    assert len(set(out)) == k
    assert set(out) <= set(ids)


def test_sample_out_of_range():
    with pytest.raises(ValueError):
        p.seeded_sample(range(3), 4, p.HashStream(bytes(32)))


# ---------------------------------------------------------------------------
# role election
# ---------------------------------------------------------------------------

def test_election_frozen_case():
    roles = p.elect_roles(ELECTION_SEED, range(5), 2)
    assert roles.producer == 1
    assert roles.committee == (4, 3)
    assert roles.validators == (0, 2)


def test_election_slot_labels_only():
    a = p.elect_roles(ELECTION_SEED, range(8), 3, slot=0)
    b = p.elect_roles(ELECTION_SEED, range(8), 3, slot=7)
    assert (a.producer, a.committee, a.validators) == (b.producer, b.committee, b.validators)
    assert b.slot == 7


@given(st.integers(min_value=1, max_value=64), st.data())
@settings(max_examples=80, deadline=None)
def test_election_partitions_validator_set(n, data):
    c = data.draw(st.integers(min_value=0, max_value=n - 1))
    seed = data.draw(st.binary(min_size=32, max_size=32))
    roles = p.elect_roles(seed, range(n), c)
    members = [roles.producer, *roles.committee, *roles.validators]
    assert sorted(members) == list(range(n))
    assert len(roles.committee) == c
    assert roles.producer not in roles.committee


def test_election_rejects_bad_committee_size():
    with pytest.raises(ValueError):
        p.elect_roles(bytes(32), range(5), 5)
    with pytest.raises(ValueError):
        p.elect_roles(bytes(32), range(5), -1)
    with pytest.raises(ValueError):
        p.elect_roles(bytes(32), [1, 1, 2], 1)


def test_role_of_and_table():
    roles = p.elect_roles(ELECTION_SEED, range(5), 2)
    assert roles.role_of(roles.producer) == "block_producer"
    assert roles.role_of(roles.committee[0]) == "committee"
    assert roles.role_of(roles.validators[0]) == "validator"
    with pytest.raises(KeyError):
        roles.role_of(99)

    table = p.RoleTable()
    assert set(table.names()) == {"block_producer", "committee", "validator"}
    table.add(p.Role("archiver", "#123456"))
    assert table.get("archiver").color == "#123456"
    with pytest.raises(ValueError):
        table.add(p.Role("committee", "#000000"))


# ---------------------------------------------------------------------------
# votes and aggregation
# ---------------------------------------------------------------------------

def _digest(tag: bytes = b"x") -> bytes:
    return hashlib.sha256(tag).digest()


def test_sign_and_verify_vote():
    d = _digest()
    vote = p.sign_vote(p.node_key(3), d, slot=0, voter=3)
    assert p.verify_vote(vote, p.node_key(3))
    assert not p.verify_vote(vote, p.node_key(4))
    # definition: tag = H(key || digest)
    assert vote.tag == hashlib.sha256(p.node_key(3) + d).digest()


def test_aggregate_is_xor_of_tags():
    d = _digest()
    votes = [p.sign_vote(p.node_key(v), d, slot=0, voter=v) for v in (1, 5, 9)]
    agg = p.aggregate_votes(votes)
    expected = 0
    for v in votes:
        expected ^= int.from_bytes(v.tag, "big")
    assert agg.tag == expected.to_bytes(32, "big")
    assert agg.signer_list() == [1, 5, 9]
    assert agg.vote_count == 3
    assert p.verify_aggregate(agg, d, {v: p.node_key(v) for v in (1, 5, 9)})


@given(st.sets(st.integers(min_value=0, max_value=99), min_size=1, max_size=12),
       st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_aggregate_order_invariant(voters, rng):
    d = _digest(b"perm")
    votes = [p.sign_vote(p.node_key(v), d, slot=2, voter=v) for v in voters]
    shuffled = list(votes)
    rng.shuffle(shuffled)
    assert p.aggregate_votes(votes) == p.aggregate_votes(shuffled)


def test_aggregate_rejects_bad_sets():
    d = _digest()
    v1 = p.sign_vote(p.node_key(1), d, slot=0, voter=1)
    with pytest.raises(ValueError):
        p.aggregate_votes([])
    with pytest.raises(ValueError):
        p.aggregate_votes([v1, v1])
    other = p.sign_vote(p.node_key(2), _digest(b"y"), slot=0, voter=2)
    with pytest.raises(ValueError):
        p.aggregate_votes([v1, other])
    wrong_slot = p.sign_vote(p.node_key(2), d, slot=1, voter=2)
    with pytest.raises(ValueError):
        p.aggregate_votes([v1, wrong_slot])


def test_verify_aggregate_rejects_tamper():
    d = _digest()
    votes = [p.sign_vote(p.node_key(v), d, slot=0, voter=v) for v in (0, 2)]
    agg = p.aggregate_votes(votes)
    keys = {0: p.node_key(0), 2: p.node_key(2)}
    assert p.verify_aggregate(agg, d, keys)
    assert not p.verify_aggregate(agg, _digest(b"other"), keys)
    forged = p.AggregateVote(d, agg.signers | (1 << 5), agg.tag)
    assert not p.verify_aggregate(forged, d, {**keys, 5: p.node_key(5)})
    assert not p.verify_aggregate(agg, d, {0: p.node_key(0)})  # missing key


def test_empty_aggregate_is_identity():
    d = _digest()
    agg = p.empty_aggregate(d)
    assert agg.vote_count == 0
    assert agg.tag == bytes(32)
    assert p.verify_aggregate(agg, d, {})


# ---------------------------------------------------------------------------
# quorum and finalization
# ---------------------------------------------------------------------------

def test_quorum_threshold_exact_arithmetic():
    assert p.quorum_threshold(Fraction(2, 3), 9) == 6
    assert p.quorum_threshold(Fraction(2, 3), 1) == 1
    assert p.quorum_threshold(Fraction(1, 2), 1) == 1
    assert p.quorum_threshold(Fraction(1, 2), 8) == 4
    assert p.quorum_threshold(Fraction(3, 4), 16) == 12
    assert p.quorum_threshold(Fraction(2, 3), 6) == 4
    assert p.quorum_threshold(Fraction(2, 3), 0) == 0
    # 2/3 of 3 is exactly 2: ceil must not round it up to 3
    assert p.quorum_threshold(Fraction(2, 3), 3) == 2


def test_finalize_slot_at_boundary():
    d = _digest(b"slot")
    committee = list(range(1, 10))  # c = 9, threshold 6 at 2/3
    votes = [p.sign_vote(p.node_key(v), d, slot=4, voter=v) for v in committee]

    below = p.finalize_slot(4, d, votes[:5], 9, Fraction(2, 3))
    assert below.kind is p.OutcomeKind.SKIP
    assert below.vote_count == 5
    assert below.aggregate is None and below.block_digest is None

    at = p.finalize_slot(4, d, votes[:6], 9, Fraction(2, 3))
    assert at.kind is p.OutcomeKind.FINALIZED
    assert at.vote_count == 6
    assert at.block_digest == d
    assert p.verify_aggregate(at.aggregate, d, {v: p.node_key(v) for v in committee})


def test_finalize_zero_threshold_uses_identity_aggregate():
    d = _digest(b"empty")
    out = p.finalize_slot(0, d, [], 0, Fraction(2, 3))
    assert out.kind is p.OutcomeKind.FINALIZED
    assert out.vote_count == 0
    assert out.aggregate == p.empty_aggregate(d)


def test_candidate_block_digest_definition():
    seed = b"\x33" * 32
    got = p.candidate_block_digest(7, seed, 12)
    expected = hashlib.sha256(
        b"consensus-lens/block/" + (7).to_bytes(8, "big") + (12).to_bytes(8, "big") + seed
    ).digest()
    assert got == expected


# ---------------------------------------------------------------------------
# hex round trips
# ---------------------------------------------------------------------------

def test_seed_hex_round_trip():
    seed = bytes(range(32))
    assert p.seed_from_hex(p.seed_to_hex(seed)) == seed
    with pytest.raises(ValueError):
        p.seed_from_hex("abcd")
