"""Overlay: embedding, dual-backend kernels, clustering, routing.

The Lloyd oracle below is a from-scratch pure-Python reimplementation
(no numpy) used to check the main implementation from an identical
seeded initialization. Frozen constants were precomputed with a
standalone hashlib script.
"""

import hashlib
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_lens import overlay
from consensus_lens import protocol as p
from consensus_lens.overlay import kernels

EMBED_SEED = hashlib.sha256(b"embed-oracle-seed").digest()
DESK_SEED = hashlib.sha256(b"election-oracle-seed").digest()

# frozen: embed_node(EMBED_SEED, 7), computed independently
NODE7_X = 0.8495156399204591
NODE7_Y = 0.28280997038196565


# ---------------------------------------------------------------------------
# embedding
# ---------------------------------------------------------------------------

def test_embed_frozen_point():
    pt = overlay.embed_node(EMBED_SEED, 7)
    assert pt.x == NODE7_X
    assert pt.y == NODE7_Y


def test_embed_definition():
    # axis value = first 8 bytes of H(seed || be8(node) || axis byte) / 2^64
    node = 3
    hx = hashlib.sha256(EMBED_SEED + node.to_bytes(8, "big") + b"\x00").digest()
    pt = overlay.embed_node(EMBED_SEED, node)
    assert pt.x == int.from_bytes(hx[:8], "big") / 2**64
    assert 0.0 <= pt.x < 1.0 and 0.0 <= pt.y < 1.0


def test_embed_nodes_order_and_validation():
    pts = overlay.embed_nodes(EMBED_SEED, [5, 1, 9])
    assert [q.node for q in pts] == [5, 1, 9]
    with pytest.raises(ValueError):
        overlay.embed_nodes(EMBED_SEED, [])
    with pytest.raises(ValueError):
        overlay.embed_nodes(b"short", [1])


# ---------------------------------------------------------------------------
# kernel backends
# ---------------------------------------------------------------------------

def _random_instance(rng, n, k):
    px = rng.random(n)
    py = rng.random(n)
    cx = rng.random(k)
    cy = rng.random(k)
    return px, py, cx, cy


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not importable")
def test_backend_parity_bitwise():
    """numpy and numba kernels must agree bit for bit, not approximately:
    recorded streams carry floats both backends must reproduce."""
    rng = np.random.default_rng(1234)
    a = kernels.NUMPY_KERNELS
    b = kernels.NUMBA_KERNELS
    for n, k in [(2, 1), (7, 3), (30, 5), (64, 9), (200, 14)]:
        px, py, cx, cy = _random_instance(rng, n, k)
        la = a.assign(px, py, cx, cy)
        lb = b.assign(px, py, cx, cy)
        assert np.array_equal(la, lb)
        da = a.assigned_sqdist(px, py, cx, cy, la)
        db = b.assigned_sqdist(px, py, cx, cy, lb)
        assert da.tobytes() == db.tobytes()
        sa = a.accumulate(px, py, la, k)
        sb = b.accumulate(px, py, lb, k)
        for xa, xb in zip(sa, sb):
            assert np.asarray(xa).tobytes() == np.asarray(xb).tobytes()
        assert a.seqsum(da) == b.seqsum(db)
        assert a.seqsum(da).hex() == b.seqsum(db).hex()


def test_assign_tie_goes_to_lowest_cluster():
    px = np.array([0.5])
    py = np.array([0.5])
    cx = np.array([0.4, 0.6])  # equidistant
    cy = np.array([0.5, 0.5])
    krn = kernels.active()
    assert krn.assign(px, py, cx, cy)[0] == 0


def test_seqsum_is_left_fold():
    # pairwise summation would give a different last bit on this input
    rng = np.random.default_rng(7)
    v = rng.random(1001)
    acc = 0.0
    for x in v:
        acc += float(x)
    assert kernels.NUMPY_KERNELS.seqsum(v) == acc
    if kernels.HAVE_NUMBA:
        assert kernels.NUMBA_KERNELS.seqsum(v) == acc


def test_backend_selection_and_env_flag(monkeypatch):
    prev = kernels.backend_name()
    try:
        assert kernels.select_backend("numpy") == "numpy"
        monkeypatch.setenv(kernels.ENV_FLAG, "0")
        assert kernels.select_backend() == "numpy"
        monkeypatch.delenv(kernels.ENV_FLAG)
        auto = kernels.select_backend()
        assert auto == ("numba" if kernels.HAVE_NUMBA else "numpy")
        with pytest.raises(ValueError):
            kernels.select_backend("fortran")
    finally:
        kernels.select_backend(prev)


# ---------------------------------------------------------------------------
# independent Lloyd oracle
# ---------------------------------------------------------------------------

def _oracle_lloyd(xs, ys, init_cx, init_cy, max_iters):
    """Plain-Python Lloyd: nearest centroid (ties to lowest index), mean
    update, stop at assignment fixed point. Asserts no cluster empties;
    instances used with it are chosen so repair never kicks in."""

    def assign(cx, cy):
        labels = []
        for x, y in zip(xs, ys):
            best, best_d = 0, None
            for j, (a, b) in enumerate(zip(cx, cy)):
                dx = x - a
                dy = y - b
                d = dx * dx + dy * dy
                if best_d is None or d < best_d:
                    best, best_d = j, d
            labels.append(best)
        return labels

    def objective(cx, cy, labels):
        acc = 0.0
        for x, y, lbl in zip(xs, ys, labels):
            dx = x - cx[lbl]
            dy = y - cy[lbl]
            acc += dx * dx + dy * dy
        return acc

    cx, cy = list(init_cx), list(init_cy)
    labels = assign(cx, cy)
    trace = [objective(cx, cy, labels)]
    for _ in range(max_iters - 1):
        k = len(cx)
        sx = [0.0] * k
        sy = [0.0] * k
        cnt = [0] * k
        for x, y, lbl in zip(xs, ys, labels):
            sx[lbl] += x
            sy[lbl] += y
            cnt[lbl] += 1
        assert all(c > 0 for c in cnt), "oracle instance hit an empty cluster"
        cx = [sx[j] / cnt[j] for j in range(k)]
        cy = [sy[j] / cnt[j] for j in range(k)]
        new_labels = assign(cx, cy)
        trace.append(objective(cx, cy, new_labels))
        if new_labels == labels:
            break
        labels = new_labels
    return labels, trace


def _seeded_init(points, k, slot_seed):
    node_ids = [q.node for q in points]
    stream = p.HashStream(p.purpose_seed(slot_seed, p.DOMAIN_OVERLAY_INIT))
    seeds = p.seeded_sample(node_ids, k, stream)
    pos = {node: i for i, node in enumerate(node_ids)}
    cx = [points[pos[s]].x for s in seeds]
    cy = [points[pos[s]].y for s in seeds]
    return cx, cy


def test_kmeans_matches_oracle_desk_instance():
    points = overlay.embed_nodes(DESK_SEED, range(5))
    snap = overlay.kmeans_cluster(points, 2, DESK_SEED)
    cx, cy = _seeded_init(points, 2, DESK_SEED)
    labels, trace = _oracle_lloyd(
        [q.x for q in points], [q.y for q in points], cx, cy, 50
    )
    assert list(snap.assignment) == labels
    assert list(snap.objective_trace) == trace


def test_kmeans_matches_oracle_many_seeds():
    for i in range(12):
        seed = hashlib.sha256(b"oracle-sweep-%d" % i).digest()
        n = 6 + (i * 7) % 20
        k = 1 + i % 4
        points = overlay.embed_nodes(seed, range(n))
        snap = overlay.kmeans_cluster(points, k, seed)
        if len(set(snap.assignment)) < k and k > 1:
            continue  # repair path ran; oracle does not model it
        cx, cy = _seeded_init(points, k, seed)
        try:
            labels, trace = _oracle_lloyd(
                [q.x for q in points], [q.y for q in points], cx, cy, 50
            )
        except AssertionError:
            continue
        assert list(snap.assignment) == labels
        assert list(snap.objective_trace) == trace


@given(st.integers(min_value=1, max_value=40), st.data())
@settings(max_examples=60, deadline=None)
def test_kmeans_invariants(n, data):
    k = data.draw(st.integers(min_value=1, max_value=n))
    seed = data.draw(st.binary(min_size=32, max_size=32))
    points = overlay.embed_nodes(seed, range(n))
    snap = overlay.kmeans_cluster(points, k, seed)

    assert len(snap.assignment) == n
    assert set(snap.assignment) == set(range(k))  # every cluster nonempty
    trace = snap.objective_trace
    assert all(b <= a for a, b in zip(trace, trace[1:]))

    # fixed point: assignment is nearest-centroid against final centroids
    for q, lbl in zip(snap.points, snap.assignment):
        dists = [
            (q.x - cx) ** 2 + (q.y - cy) ** 2 for cx, cy in snap.centroids
        ]
        best = min(range(k), key=lambda j: (dists[j], j))
        assert dists[lbl] == dists[best]


def test_kmeans_validation():
    points = overlay.embed_nodes(EMBED_SEED, range(4))
    with pytest.raises(ValueError):
        overlay.kmeans_cluster(points, 0, EMBED_SEED)
    with pytest.raises(ValueError):
        overlay.kmeans_cluster(points, 5, EMBED_SEED)
    with pytest.raises(ValueError):
        overlay.kmeans_cluster(points, 2, EMBED_SEED, max_iters=0)


def test_empty_cluster_repair_keeps_k_clusters():
    # duplicate far-apart groups force ties; high k relative to n makes
    # empties likely. Whatever happens, k nonempty clusters must remain.
    for salt in range(20):
        seed = hashlib.sha256(b"repair-%d" % salt).digest()
        points = overlay.embed_nodes(seed, range(8))
        snap = overlay.kmeans_cluster(points, 7, seed)
        assert set(snap.assignment) == set(range(7))
        trace = snap.objective_trace
        assert all(b <= a for a, b in zip(trace, trace[1:]))


# ---------------------------------------------------------------------------
# representatives and routing
# ---------------------------------------------------------------------------

def _build(seed_label: bytes, n: int, k: int):
    seed = hashlib.sha256(seed_label).digest()
    return overlay.build_topology(0, seed, range(n), k)


def test_representatives_minimize_distance():
    topo = _build(b"reps", 30, 5)
    for cluster in range(topo.k):
        members = topo.members(cluster)
        assert members, "repair guarantees nonempty clusters"
        rep = topo.representatives[cluster]
        ccx, ccy = topo.centroids[cluster]

        def d2(node):
            q = topo.points[topo.nodes.index(node)]
            return (q.x - ccx) ** 2 + (q.y - ccy) ** 2

        best = min(d2(m) for m in members)
        assert d2(rep) == best
        assert rep == min(m for m in members if d2(m) == best)


def test_route_shapes():
    topo = _build(b"routes", 30, 5)
    producer = 11
    for src in topo.nodes:
        route = overlay.route_attestation(src, producer, topo)
        assert route[0] == src
        assert route[-1] == producer
        assert len(route) <= 3
        assert all(a != b for a, b in zip(route, route[1:]))
        rep = topo.representatives[topo.cluster_of(src)]
        if src == producer:
            assert route == (src,)
        elif rep in (src, producer):
            assert route == (src, producer)
        else:
            assert route == (src, rep, producer)


def test_route_rejects_unknown_nodes():
    topo = _build(b"routes", 10, 3)
    with pytest.raises(ValueError):
        overlay.route_attestation(99, 1, topo)
    with pytest.raises(ValueError):
        overlay.route_attestation(1, 99, topo)


def test_representative_is_its_own_route_hub():
    topo = _build(b"hub", 20, 4)
    producer = topo.nodes[0]
    for cluster, rep in topo.representatives.items():
        if rep == producer:
            continue
        assert overlay.route_attestation(rep, producer, topo) == (rep, producer)


def test_build_topology_deterministic():
    a = _build(b"same", 30, 5)
    b = _build(b"same", 30, 5)
    assert a == b
