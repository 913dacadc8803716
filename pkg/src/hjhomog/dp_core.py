"""Shared semi-Lagrangian dynamic-programming kernels.

Every DP layer in the package reduces to one Bellman slice on a uniform node
grid: during a slice a node i may move to i + j with |j| <= J, at separable
cost A[i] + B[j + J] (state part plus velocity part, both premultiplied by
dt). Discounted variants scale the whole slice cost by a per-slice weight.
Curves never leave the grid: transitions out of range are simply absent from
the min, which realizes a state constraint. Ties in the min are broken toward
the smallest target index by scanning j in ascending order with strict
improvement.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def metric_value(A, B, J, K, weights, terminal, i_start):
    """Backward DP value from (slice 0, node i_start) to the terminal cost array."""
    n = A.size
    d = terminal.copy()
    d_new = np.empty(n)
    for k in range(K - 1, -1, -1):
        w = weights[k]
        wb = w * B
        for i in range(n):
            jlo = -J if i >= J else -i
            jhi = J if i + J <= n - 1 else n - 1 - i
            best = np.inf
            for j in range(jlo, jhi + 1):
                c = wb[j + J] + d[i + j]
                if c < best:
                    best = c
            d_new[i] = w * A[i] + best
        d, d_new = d_new, d
    return d[i_start]


@njit(cache=True, nogil=True)
def metric_curve(A, B, J, K, weights, terminal, i_start):
    """Backward DP with backpointers; returns (value, node index path of length K+1)."""
    n = A.size
    d = terminal.copy()
    d_new = np.empty(n)
    bp = np.empty((K, n), np.int16)
    for k in range(K - 1, -1, -1):
        w = weights[k]
        wb = w * B
        for i in range(n):
            jlo = -J if i >= J else -i
            jhi = J if i + J <= n - 1 else n - 1 - i
            best = np.inf
            bj = np.int16(0)
            for j in range(jlo, jhi + 1):
                c = wb[j + J] + d[i + j]
                if c < best:
                    best = c
                    bj = np.int16(j)
            d_new[i] = w * A[i] + best
            bp[k, i] = bj
        d, d_new = d_new, d
    nodes = np.empty(K + 1, np.int64)
    nodes[0] = i_start
    for k in range(K):
        nodes[k + 1] = nodes[k] + bp[k, nodes[k]]
    return d[i_start], nodes


@njit(cache=True, nogil=True)
def cauchy_field(u0, A, B, J, n_steps, keep, win_lo, win_hi):
    """Forward semigroup u_{k+1}[i] = A[i] + min_j (B[j+J] + u_k[i+j]).

    Records the slices listed in keep (ascending step indices, 0 allowed).
    Also counts, over nodes in [win_lo, win_hi], how often the argmin move
    saturates |j| = J; the caller turns that into the interiority check.
    """
    n = u0.size
    out = np.empty((keep.size, n))
    u = u0.copy()
    u_new = np.empty(n)
    ptr = 0
    if keep.size > 0 and keep[0] == 0:
        out[0] = u
        ptr = 1
    sat = 0
    tot = 0
    for k in range(1, n_steps + 1):
        for i in range(n):
            jlo = -J if i >= J else -i
            jhi = J if i + J <= n - 1 else n - 1 - i
            best = np.inf
            bj = 0
            for j in range(jlo, jhi + 1):
                c = B[j + J] + u[i + j]
                if c < best:
                    best = c
                    bj = j
            u_new[i] = A[i] + best
            if win_lo <= i <= win_hi:
                tot += 1
                if bj == J or bj == -J:
                    sat += 1
        u, u_new = u_new, u
        if ptr < keep.size and keep[ptr] == k:
            out[ptr] = u
            ptr += 1
    return out, sat, tot
