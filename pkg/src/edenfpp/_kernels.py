"""Compiled shortest-path kernel.

Binary heap keyed on (distance, vertex index); equal tentative distances are
resolved in favour of the smaller predecessor index so results never depend
on arc order.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, inline="always")
def _less(hd, hv, i, j):
    return hd[i] < hd[j] or (hd[i] == hd[j] and hv[i] < hv[j])


@nb.njit(cache=True)
def _push(hd, hv, size, d, v):
    i = size
    hd[i] = d
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        if _less(hd, hv, i, p):
            hd[i], hd[p] = hd[p], hd[i]
            hv[i], hv[p] = hv[p], hv[i]
            i = p
        else:
            break
    return size + 1


@nb.njit(cache=True)
def _pop(hd, hv, size):
    d = hd[0]
    v = hv[0]
    size -= 1
    hd[0] = hd[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        m = i
        if l < size and _less(hd, hv, l, m):
            m = l
        if r < size and _less(hd, hv, r, m):
            m = r
        if m == i:
            break
        hd[i], hd[m] = hd[m], hd[i]
        hv[i], hv[m] = hv[m], hv[i]
        i = m
    return d, v, size


@nb.njit(cache=True)
def dijkstra(indptr, indices, arc_w, sources, limit):
    """Multi-source Dijkstra over a CSR arc list.

    Returns (dist, pred, pred_arc).  Vertices whose final distance is not
    below ``limit`` may be left with tentative values.
    """
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    pred_arc = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    cap = indices.shape[0] + sources.shape[0] + 1
    hd = np.empty(cap)
    hv = np.empty(cap, dtype=np.int64)
    size = 0
    for s in sources:
        if dist[s] > 0.0:
            dist[s] = 0.0
            size = _push(hd, hv, size, 0.0, s)
    while size > 0:
        d, u, size = _pop(hd, hv, size)
        if done[u] or d > dist[u]:
            continue
        if d >= limit:
            break
        done[u] = True
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if done[v]:
                continue
            nd = dist[u] + arc_w[k]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                pred_arc[v] = k
                size = _push(hd, hv, size, nd, v)
            elif nd == dist[v] and u < pred[v]:
                pred[v] = u
                pred_arc[v] = k
    return dist, pred, pred_arc
