"""Sequential passes over the dependency arena, compiled with numba."""

import numpy as np
from numba import njit

# Largest count representable exactly in a double; beyond it D/U saturate to +inf.
EXACT_LIMIT = float(2**53)


@njit(cache=True)
def dep_counts(ptr, idx, base):
    n = ptr.size - 1
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        if base[i]:
            out[i] = 1.0
            continue
        s = 0.0
        for k in range(ptr[i], ptr[i + 1]):
            s += out[idx[k]]
        out[i] = np.inf if s > EXACT_LIMIT else s
    return out


@njit(cache=True)
def use_counts(ptr, idx, named):
    n = ptr.size - 1
    acc = np.zeros(n, dtype=np.float64)
    out = np.empty(n, dtype=np.float64)
    for j in range(n - 1, -1, -1):
        v = acc[j]
        if named[j]:
            v = 1.0
        elif v > EXACT_LIMIT:
            v = np.inf
        out[j] = v
        for k in range(ptr[j], ptr[j + 1]):
            acc[idx[k]] += v
    return out


@njit(cache=True)
def longest_chain(ptr, idx, base):
    n = ptr.size - 1
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        if base[i]:
            out[i] = 1
            continue
        best = 0
        for k in range(ptr[i], ptr[i + 1]):
            c = out[idx[k]] + 1
            if c > best:
                best = c
        out[i] = best
    return out


@njit(cache=True)
def dedup_alive(ptr, idx, canonical, duplicate, keep, had_users):
    """Reverse sweep deciding which nodes survive a dedup rewrite.

    A node survives when it is kept outright, was never referenced, or is
    referenced (after redirection to canonical nodes) by a surviving node.
    """
    n = ptr.size - 1
    alive = np.zeros(n, dtype=np.bool_)
    referenced = np.zeros(n, dtype=np.bool_)
    for j in range(n - 1, -1, -1):
        if keep[j]:
            a = True
        elif duplicate[j]:
            a = False
        else:
            a = referenced[j] or not had_users[j]
        alive[j] = a
        if a:
            for k in range(ptr[j], ptr[j + 1]):
                referenced[canonical[idx[k]]] = True
    return alive
