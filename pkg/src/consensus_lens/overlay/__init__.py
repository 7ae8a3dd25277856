"""Per-slot overlay topology: seeded embedding, k-means clusters, routing.

Nodes are embedded into the unit square by hashing (slot seed, node id),
clustered with Lloyd's algorithm from a seeded deterministic
initialization, and each cluster elects the member nearest its centroid
as representative. Committee attestations travel member -> representative
-> producer, at most three hops.

Every step is a pure function of the shared slot seed, so all nodes
rebuild an identical topology locally each slot without exchanging a
byte. Floating-point comparisons are exact (no epsilon): the kernels in
``kernels.py`` pin the evaluation order that makes that safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from consensus_lens.protocol import (
    DOMAIN_OVERLAY_INIT,
    HashStream,
    be8,
    check_seed,
    purpose_seed,
    seeded_sample,
    sha256,
)
from consensus_lens.overlay import kernels

DEFAULT_MAX_ITERS = 50

_TWO_64 = 2.0 ** 64


@dataclass(frozen=True)
class NodePoint:
    node: int
    x: float
    y: float


@dataclass(frozen=True)
class TopologySnapshot:
    """One slot's overlay: embedded points, cluster assignment, centroids,
    representatives, and the objective value after each Lloyd assignment
    step (non-increasing by construction)."""

    slot: int
    k: int
    nodes: tuple[int, ...]
    points: tuple[NodePoint, ...]  # parallel to nodes
    assignment: tuple[int, ...]  # cluster index per node, parallel to nodes
    centroids: tuple[tuple[float, float], ...]
    representatives: dict[int, int]  # cluster -> node id, nonempty clusters only
    objective_trace: tuple[float, ...] = ()

    def cluster_of(self, node: int) -> int:
        return self.assignment[self.nodes.index(node)]

    def members(self, cluster: int) -> list[int]:
        return [n for n, c in zip(self.nodes, self.assignment) if c == cluster]


def embed_node(slot_seed: bytes, node: int) -> NodePoint:
    """Unit-square coordinates: each axis is the first 8 bytes of
    H(seed || be8(node) || axis byte), read big-endian, over 2^64."""
    hx = sha256(slot_seed + be8(node) + b"\x00")
    hy = sha256(slot_seed + be8(node) + b"\x01")
    x = int.from_bytes(hx[:8], "big") / _TWO_64
    y = int.from_bytes(hy[:8], "big") / _TWO_64
    return NodePoint(node=node, x=x, y=y)


def embed_nodes(slot_seed: bytes, nodes: Sequence[int]) -> list[NodePoint]:
    check_seed(slot_seed, "slot seed")
    if not nodes:
        raise ValueError("node set must be nonempty")
    return [embed_node(slot_seed, n) for n in nodes]


def _point_arrays(points: Sequence[NodePoint]) -> tuple[np.ndarray, np.ndarray]:
    px = np.array([p.x for p in points], dtype=np.float64)
    py = np.array([p.y for p in points], dtype=np.float64)
    return px, py


def kmeans_cluster(
    points: Sequence[NodePoint],
    k: int,
    slot_seed: bytes,
    max_iters: int = DEFAULT_MAX_ITERS,
    slot: int = 0,
) -> TopologySnapshot:
    """Lloyd's algorithm with seeded initialization.

    Initial centroids are the points of the k nodes picked by the first k
    draws of a seeded partial Fisher-Yates over node order (stream keyed
    H(slot_seed || "overlay-init")). Iteration alternates nearest-centroid
    assignment (ties to the lowest cluster index) with mean updates until
    the assignment reaches a fixed point or max_iters assignment steps. A
    cluster that empties is reseated at the point currently farthest from
    its assigned centroid.

    The returned assignment always satisfies the nearest-centroid
    invariant against the returned centroids.
    """
    check_seed(slot_seed, "slot seed")
    n = len(points)
    if n == 0:
        raise ValueError("no points to cluster")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, n]={n}, got {k}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    krn = kernels.active()
    px, py = _point_arrays(points)
    node_ids = [p.node for p in points]
    pos_of = {node: i for i, node in enumerate(node_ids)}

    init_stream = HashStream(purpose_seed(slot_seed, DOMAIN_OVERLAY_INIT))
    seeds = seeded_sample(node_ids, k, init_stream)
    cx = np.array([px[pos_of[s]] for s in seeds], dtype=np.float64)
    cy = np.array([py[pos_of[s]] for s in seeds], dtype=np.float64)

    labels = krn.assign(px, py, cx, cy)
    trace = [krn.seqsum(krn.assigned_sqdist(px, py, cx, cy, labels))]

    for _ in range(max_iters - 1):
        cx, cy, labels = _update_and_repair(krn, px, py, labels, cx, cy, k)
        new_labels = krn.assign(px, py, cx, cy)
        trace.append(krn.seqsum(krn.assigned_sqdist(px, py, cx, cy, new_labels)))
        converged = bool(np.array_equal(new_labels, labels))
        labels = new_labels
        if converged:
            break

    return TopologySnapshot(
        slot=slot,
        k=k,
        nodes=tuple(node_ids),
        points=tuple(points),
        assignment=tuple(int(c) for c in labels),
        centroids=tuple((float(x), float(y)) for x, y in zip(cx, cy)),
        representatives={},
        objective_trace=tuple(trace),
    )


def _update_and_repair(krn, px, py, labels, cx, cy, k):
    """Mean update, then reseat any emptied cluster at the point farthest
    from its assigned centroid (first max; the stolen point is relabeled so
    a later repair in the same pass sees the adjustment)."""
    sum_x, sum_y, counts = krn.accumulate(px, py, labels, k)
    new_cx = cx.copy()
    new_cy = cy.copy()
    nonempty = counts > 0
    new_cx[nonempty] = sum_x[nonempty] / counts[nonempty]
    new_cy[nonempty] = sum_y[nonempty] / counts[nonempty]
    labels = labels.copy()
    for j in range(k):
        if counts[j] > 0:
            continue
        d2 = krn.assigned_sqdist(px, py, new_cx, new_cy, labels)
        far = int(np.argmax(d2))
        counts[labels[far]] -= 1
        labels[far] = j
        counts[j] = 1
        new_cx[j] = px[far]
        new_cy[j] = py[far]
    return new_cx, new_cy, labels


def pick_representatives(snapshot: TopologySnapshot) -> dict[int, int]:
    """Representative of each nonempty cluster: the member at minimal
    squared distance to the centroid, ties to the lowest node id."""
    reps: dict[int, int] = {}
    for cluster in range(snapshot.k):
        best_node = None
        best_d = None
        for node, c, p in zip(snapshot.nodes, snapshot.assignment, snapshot.points):
            if c != cluster:
                continue
            ccx, ccy = snapshot.centroids[cluster]
            dx = p.x - ccx
            dy = p.y - ccy
            d = dx * dx + dy * dy
            if best_d is None or d < best_d or (d == best_d and node < best_node):
                best_d = d
                best_node = node
        if best_node is not None:
            reps[cluster] = best_node
    return reps


def build_topology(
    slot: int,
    slot_seed: bytes,
    nodes: Sequence[int],
    k: int,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> TopologySnapshot:
    """embed -> cluster -> representatives, the full per-slot rebuild any
    node runs locally from the shared seed."""
    points = embed_nodes(slot_seed, nodes)
    snap = kmeans_cluster(points, k, slot_seed, max_iters=max_iters, slot=slot)
    reps = pick_representatives(snap)
    return TopologySnapshot(
        slot=snap.slot,
        k=snap.k,
        nodes=snap.nodes,
        points=snap.points,
        assignment=snap.assignment,
        centroids=snap.centroids,
        representatives=reps,
        objective_trace=snap.objective_trace,
    )


def route_attestation(src: int, producer: int, topology: TopologySnapshot) -> tuple[int, ...]:
    """Attestation path: member -> cluster representative -> producer,
    collapsing hops when the source is the producer, is its own
    representative, or its representative is the producer."""
    if src not in topology.nodes:
        raise ValueError(f"unknown node {src}")
    if producer not in topology.nodes:
        raise ValueError(f"unknown producer {producer}")
    if src == producer:
        return (src,)
    rep = topology.representatives[topology.cluster_of(src)]
    if rep == src or rep == producer:
        return (src, producer)
    return (src, rep, producer)
