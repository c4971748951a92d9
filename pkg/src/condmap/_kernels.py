"""Compiled inner loops.  Everything here takes plain arrays and pre-drawn
uniforms so that the random stream is owned by the numpy generator."""

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def log_convolve(a, b, length):
    """``c[m] = log sum_j exp(a[j] + b[m-j])`` for ``m < length``."""
    out = np.empty(length)
    for m in range(length):
        hi = -np.inf
        for j in range(m + 1):
            if j < a.shape[0] and m - j < b.shape[0]:
                v = a[j] + b[m - j]
                if v > hi:
                    hi = v
        if hi == -np.inf:
            out[m] = -np.inf
            continue
        acc = 0.0
        for j in range(m + 1):
            if j < a.shape[0] and m - j < b.shape[0]:
                v = a[j] + b[m - j]
                if v > hi - 745.0:
                    acc += np.exp(v - hi)
        out[m] = hi + np.log(acc)
    return out


@njit(cache=True)
def _draw_split(fl, fr, total, u):
    hi = -np.inf
    for m in range(total + 1):
        v = fl[m] + fr[total - m]
        if v > hi:
            hi = v
    acc = 0.0
    for m in range(total + 1):
        v = fl[m] + fr[total - m]
        if v > -np.inf:
            acc += np.exp(v - hi)
    target = u * acc
    run = 0.0
    last = -1
    for m in range(total + 1):
        v = fl[m] + fr[total - m]
        if v > -np.inf:
            run += np.exp(v - hi)
            last = m
            if run > target:
                return m
    return last


@njit(cache=True)
def sample_blocks(tables, node_left_tab, node_right_tab, node_left_child, node_right_child,
                  total, uniforms, out):
    """Fill ``out`` (length = #slots) with one exact draw.

    Internal nodes are listed in preorder.  ``node_*_child`` is a node id
    when ``>= 0`` and ``-(slot + 1)`` for a leaf slot.  ``uniforms`` has one
    entry per internal node.
    """
    n_nodes = node_left_tab.shape[0]
    totals = np.zeros(n_nodes, dtype=np.int64)
    totals[0] = total
    for k in range(n_nodes):
        t = totals[k]
        m = _draw_split(tables[node_left_tab[k]], tables[node_right_tab[k]], t, uniforms[k])
        lc = node_left_child[k]
        rc = node_right_child[k]
        if lc >= 0:
            totals[lc] = m
        else:
            out[-lc - 1] = m
        if rc >= 0:
            totals[rc] = t - m
        else:
            out[-rc - 1] = t - m


@njit(cache=True)
def cycle_lemma_start(d):
    """Index at which the rotation of ``d`` is a Lukasiewicz path."""
    s = 0
    best = 1
    best_k = 0
    for k in range(d.shape[0]):
        s += d[k] - 1
        if s < best:
            best = s
            best_k = k
    return (best_k + 1) % d.shape[0]


@njit(cache=True)
def lukasiewicz_ok(outdeg):
    s = 0
    n = outdeg.shape[0]
    for k in range(n):
        s += outdeg[k] - 1
        if k < n - 1 and s < 0:
            return False
    return s == -1


@njit(cache=True)
def tree_structure(outdeg):
    """``parent``, ``depth``, ``size`` (vertices in subtree) and ``rank``
    (index among siblings) for a preorder outdegree sequence."""
    n = outdeg.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    used = np.empty(n, dtype=np.int64)
    top = -1
    for v in range(n):
        if top >= 0:
            p = stack[top]
            parent[v] = p
            depth[v] = depth[p] + 1
            rank[v] = used[top]
            used[top] += 1
            if used[top] == outdeg[p]:
                top -= 1
        if outdeg[v] > 0:
            top += 1
            stack[top] = v
            used[top] = 0
    for v in range(n - 1, 0, -1):
        size[parent[v]] += size[v]
    return parent, depth, size, rank


@njit(cache=True)
def children_csr(outdeg, parent):
    n = outdeg.shape[0]
    ptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        ptr[v + 1] = ptr[v] + outdeg[v]
    fill = ptr[:-1].copy()
    kids = np.empty(ptr[n], dtype=np.int64)
    for v in range(1, n):
        p = parent[v]
        kids[fill[p]] = v
        fill[p] += 1
    return ptr, kids


@njit(cache=True)
def sample_labels_kernel(outdeg, parent, depth, ptr, kids, uniforms):
    """Uniform labelling: per black vertex a uniform composition by
    selection sampling of ``d-1`` bar positions among ``2d-1`` slots."""
    n = outdeg.shape[0]
    lab = np.zeros(n, dtype=np.int64)
    pos = 0
    for v in range(n):
        if depth[v] % 2 == 0:
            continue
        k = outdeg[v]
        d = k + 1
        base = lab[parent[v]]
        # Knuth's selection sampling: choose d-1 of 2d-1 slots in order.
        need = d - 1
        slots = 2 * d - 1
        prev_bar = -1
        j = 0  # index of the increment being produced
        cur = base
        for s in range(slots):
            if need == 0:
                break
            u = uniforms[pos]
            pos += 1
            if (slots - s) * u < need:
                y = s - prev_bar - 1
                cur += y - 1
                lab[kids[ptr[v] + j]] = cur
                j += 1
                prev_bar = s
                need -= 1
    return lab, pos


@njit(cache=True)
def label_uniform_count(outdeg, depth):
    """Upper bound on the uniforms consumed by :func:`sample_labels_kernel`."""
    total = 0
    for v in range(outdeg.shape[0]):
        if depth[v] % 2 == 1:
            total += 2 * outdeg[v] + 1
    return total


@njit(cache=True)
def contour(outdeg, parent):
    """Full contour sequence (length ``2n + 1``) of a preorder tree."""
    n_v = outdeg.shape[0]
    out = np.empty(2 * (n_v - 1) + 1, dtype=np.int64)
    out[0] = 0
    k = 1
    for v in range(1, n_v):
        # climb from the previous vertex back to the parent of v
        prev = out[k - 1]
        while prev != parent[v]:
            prev = parent[prev]
            out[k] = prev
            k += 1
        out[k] = v
        k += 1
    prev = out[k - 1]
    while prev != 0:
        prev = parent[prev]
        out[k] = prev
        k += 1
    return out


@njit(cache=True)
def successors(lab):
    """``succ[i]`` = first ``j`` after ``i`` (cyclically) with
    ``lab[j] = lab[i] - 1``, or ``-1`` when ``lab[i]`` is the minimum."""
    n = lab.shape[0]
    lo = lab.min()
    hi = lab.max()
    last = np.full(hi - lo + 2, -1, dtype=np.int64)
    succ = np.full(n, -1, dtype=np.int64)
    for k in range(2 * n - 1, -1, -1):
        i = k % n
        t = lab[i] - lo
        if k < n and t > 0:
            j = last[t - 1]
            succ[i] = j % n if j >= 0 else -1
        last[t] = k
    return succ


@njit(cache=True)
def perm_cycles(perm):
    """Cycle id of each element, its position within the cycle and the
    cycle lengths; cycles are numbered by their smallest element."""
    n = perm.shape[0]
    cid = np.full(n, -1, dtype=np.int64)
    pos = np.zeros(n, dtype=np.int64)
    lengths = np.zeros(n, dtype=np.int64)
    c = 0
    for a in range(n):
        if cid[a] >= 0:
            continue
        b = a
        k = 0
        while cid[b] < 0:
            cid[b] = c
            pos[b] = k
            k += 1
            b = perm[b]
        lengths[c] = k
        c += 1
    return cid, pos, lengths[:c]


@njit(cache=True)
def bfs(ptr, nbr, src, dist, queue):
    """Breadth-first distances on a CSR graph into caller-owned buffers."""
    dist[:] = -1
    dist[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(ptr[u], ptr[u + 1]):
            v = nbr[k]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return dist


@njit(cache=True)
def gw_generation_sums(counts, owner, n_trees):
    out = np.zeros(n_trees, dtype=np.int64)
    for k in range(counts.shape[0]):
        out[owner[k]] += counts[k]
    return out
