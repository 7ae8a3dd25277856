"""Numeric kernels for the clustering hot loop, in two backends.

The per-slot overlay rebuild runs Lloyd iterations over the embedded node
set; at large network sizes this is where the simulator spends its time.
The default backend compiles the explicit loops with numba; setting
``CONSENSUS_LENS_NUMBA=0`` (or numba being unavailable) selects a
vectorized pure-numpy fallback. ``benchmarks/bench_kmeans.py`` compares
the two.

Both backends must produce bit-identical float64 results, because
recorded topologies are replayed and re-verified across processes that
may have picked different backends. That constrains evaluation order:
squared distances are dx*dx + dy*dy with no fused or reassociated ops,
sums accumulate sequentially in node-index order (np.add.at / cumsum on
the numpy side, plain loops on the numba side), and ties resolve to the
lowest index. The parity test in tests/test_overlay.py holds both
backends to byte equality.
"""

from __future__ import annotations

import logging
import os
from typing import Callable, NamedTuple

import numpy as np

logger = logging.getLogger("consensus_lens.overlay")

ENV_FLAG = "CONSENSUS_LENS_NUMBA"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False


class Kernels(NamedTuple):
    name: str
    assign: Callable  # (px, py, cx, cy) -> int64 labels, ties to lowest cluster
    assigned_sqdist: Callable  # (px, py, cx, cy, labels) -> float64 distances
    accumulate: Callable  # (px, py, labels, k) -> (sum_x, sum_y, counts)
    seqsum: Callable  # (values) -> float, left-fold in index order


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _assign_np(px, py, cx, cy):
    dx = px[:, None] - cx[None, :]
    dy = py[:, None] - cy[None, :]
    d2 = dx * dx + dy * dy
    # argmin returns the first minimum: lowest cluster index wins ties
    return np.argmin(d2, axis=1).astype(np.int64)


def _assigned_sqdist_np(px, py, cx, cy, labels):
    dx = px - cx[labels]
    dy = py - cy[labels]
    return dx * dx + dy * dy


def _accumulate_np(px, py, labels, k):
    sum_x = np.zeros(k, dtype=np.float64)
    sum_y = np.zeros(k, dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    # ufunc.at applies unbuffered in index order: same fold as the loop backend
    np.add.at(sum_x, labels, px)
    np.add.at(sum_y, labels, py)
    np.add.at(counts, labels, 1)
    return sum_x, sum_y, counts


def _seqsum_np(values):
    if values.shape[0] == 0:
        return 0.0
    # cumsum's last element is the sequential left fold; np.sum pairs up
    return float(np.cumsum(values)[-1])


NUMPY_KERNELS = Kernels("numpy", _assign_np, _assigned_sqdist_np, _accumulate_np, _seqsum_np)


# ---------------------------------------------------------------------------
# numba backend: identical arithmetic, explicit loops
# ---------------------------------------------------------------------------

def _assign_loop(px, py, cx, cy):
    n = px.shape[0]
    k = cx.shape[0]
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = 0
        dx = px[i] - cx[0]
        dy = py[i] - cy[0]
        best_d = dx * dx + dy * dy
        for j in range(1, k):
            dx = px[i] - cx[j]
            dy = py[i] - cy[j]
            d = dx * dx + dy * dy
            if d < best_d:
                best_d = d
                best = j
        labels[i] = best
    return labels


def _assigned_sqdist_loop(px, py, cx, cy, labels):
    n = px.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        dx = px[i] - cx[labels[i]]
        dy = py[i] - cy[labels[i]]
        out[i] = dx * dx + dy * dy
    return out


def _accumulate_loop(px, py, labels, k):
    sum_x = np.zeros(k, dtype=np.float64)
    sum_y = np.zeros(k, dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(labels.shape[0]):
        c = labels[i]
        sum_x[c] += px[i]
        sum_y[c] += py[i]
        counts[c] += 1
    return sum_x, sum_y, counts


def _seqsum_loop(values):
    s = 0.0
    for i in range(values.shape[0]):
        s += values[i]
    return s


if HAVE_NUMBA:
    # default (non-fastmath) compilation keeps strict IEEE order: no FMA
    # contraction, no reassociation, which the parity contract requires
    NUMBA_KERNELS: Kernels | None = Kernels(
        "numba",
        njit(cache=True)(_assign_loop),
        njit(cache=True)(_assigned_sqdist_loop),
        njit(cache=True)(_accumulate_loop),
        njit(cache=True)(_seqsum_loop),
    )
else:  # pragma: no cover
    NUMBA_KERNELS = None


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_active: Kernels = NUMPY_KERNELS


def select_backend(name: str | None = None) -> str:
    """Pick the active backend.

    With no argument, honors the CONSENSUS_LENS_NUMBA env flag ("0", "off",
    "false" force the numpy fallback) and otherwise prefers numba when
    importable. Returns the name of the backend now active.
    """
    global _active
    if name is None:
        flag = os.environ.get(ENV_FLAG, "").strip().lower()
        if flag in ("0", "off", "false", "no"):
            name = "numpy"
        else:
            name = "numba" if HAVE_NUMBA else "numpy"
    if name == "numba":
        if NUMBA_KERNELS is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        _active = NUMBA_KERNELS
    elif name == "numpy":
        _active = NUMPY_KERNELS
    else:
        raise ValueError(f"unknown kernel backend: {name!r}")
    logger.debug("overlay kernel backend: %s", _active.name)
    return _active.name


def active() -> Kernels:
    return _active


def backend_name() -> str:
    return _active.name


def warmup() -> None:
    """Trigger JIT compilation on a tiny instance so the first simulated
    slot doesn't pay it."""
    px = np.array([0.1, 0.9], dtype=np.float64)
    py = np.array([0.2, 0.8], dtype=np.float64)
    cx = np.array([0.0], dtype=np.float64)
    cy = np.array([0.0], dtype=np.float64)
    labels = _active.assign(px, py, cx, cy)
    d2 = _active.assigned_sqdist(px, py, cx, cy, labels)
    _active.accumulate(px, py, labels, 1)
    _active.seqsum(d2)


select_backend()
