"""Compiled inner loops for synchronous Boolean network dynamics.

A network reaches these kernels in CSR form:

``indptr``  (N+1,)  links of non-input node ``i`` are ``srcs[indptr[i]:indptr[i+1]]``
``srcs``    (L,)    source node ids, grouped by destination, link-list order kept
``lut_off`` (N+1,)  LUT of node ``i`` is ``luts[lut_off[i]:lut_off[i+1]]``
``luts``    (B,)    concatenated LUT bits

Node ids ``0..I-1`` are inputs, ``I..I+N-1`` the non-input nodes. All input
patterns are simulated side by side: a state is an ``(I+N, P)`` uint8 array.

Random networks are generated from a single 64-bit key with a splitmix64
stream, and their LUT entries are a keyed hash of ``(node, index)``. This
lets ensemble sampling read LUT bits on demand instead of storing tables
whose size grows as ``2**in_degree``.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_NODE = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S63 = np.uint64(63)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _next(st):
    st[0] += _GOLDEN
    return _mix64(st[0])


@njit(cache=True, inline="always")
def _below(st, n):
    return np.int64(np.float64(_next(st) >> _S11) * _INV53 * n)


@njit(cache=True)
def node_keys(lut_key, n_nodes):
    out = np.empty(n_nodes, dtype=np.uint64)
    for i in range(n_nodes):
        out[i] = lut_key + np.uint64(i + 1) * _NODE
    return out


@njit(cache=True, inline="always")
def _hashed_bit(nodekey, idx):
    return np.uint8(_mix64(nodekey + np.uint64(idx) * _GOLDEN) >> _S63)


@njit(cache=True)
def sample_structure(key, n_nodes, n_inputs, n_outputs, n_links, binomial,
                     feedforward, fixed_order):
    """Links, feedforward order and LUT key of the network named by ``key``.

    A non-empty ``fixed_order`` is used instead of drawing a fresh order.
    """
    st = np.empty(1, dtype=np.uint64)
    st[0] = np.uint64(key)
    n_total = n_nodes + n_inputs
    order = np.arange(n_total)
    if fixed_order.shape[0] == n_total:
        order[:] = fixed_order
    elif feedforward:
        n_compute = n_nodes - n_outputs
        perm = np.arange(n_compute)
        for i in range(n_compute - 1, 0, -1):
            j = _below(st, i + 1)
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        for i in range(n_compute):
            order[n_inputs + i] = n_inputs + perm[i]
    links = np.empty((n_links, 2), dtype=np.int64)
    kept = 0
    for _ in range(n_links):
        while True:
            s = _below(st, n_total)
            d = n_inputs + _below(st, n_nodes)
            if not feedforward or order[s] < order[d]:
                break
        if binomial and (_next(st) >> _S63) == 0:
            continue
        links[kept, 0] = s
        links[kept, 1] = d
        kept += 1
    lut_key = _next(st)
    return links[:kept].copy(), order, lut_key


@njit(cache=True)
def hashed_luts(lut_key, in_degrees):
    """Materialise the keyed-hash LUTs for the given in-degrees."""
    n = in_degrees.shape[0]
    total = 0
    for i in range(n):
        total += 1 << in_degrees[i]
    out = np.empty(total, dtype=np.uint8)
    keys = node_keys(lut_key, n)
    pos = 0
    for i in range(n):
        for j in range(1 << in_degrees[i]):
            out[pos] = _hashed_bit(keys[i], j)
            pos += 1
    return out


@njit(cache=True)
def csr(links, n_nodes, n_inputs):
    """Stable counting sort of links by destination."""
    n_links = links.shape[0]
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    for l in range(n_links):
        indptr[links[l, 1] - n_inputs + 1] += 1
    for i in range(n_nodes):
        indptr[i + 1] += indptr[i]
    fill = indptr[:-1].copy()
    srcs = np.empty(n_links, dtype=np.int64)
    for l in range(n_links):
        d = links[l, 1] - n_inputs
        srcs[fill[d]] = links[l, 0]
        fill[d] += 1
    return indptr, srcs


@njit(cache=True)
def _simulate(n_inputs, indptr, srcs, lut_off, luts, nodekeys, hashed,
              out_nodes, state, transient, window, hist, activity):
    """Run clamped trajectories for all patterns and add window activity.

    ``state`` (I+N, P) holds the initial condition and is clobbered. Brent's
    cycle detection on the joint state stops settled trajectories early; the
    rest of the window is read off the recorded cycle.
    """
    n_total, n_pat = state.shape
    n_nodes = indptr.shape[0] - 1
    n_out = out_nodes.shape[0]
    horizon = transient + window

    nxt = state.copy()
    saved = state.copy()
    idx = np.empty(n_pat, dtype=np.int64)
    saved_t = 0
    power = 1
    base = 0
    period = 0

    for o in range(n_out):
        for p in range(n_pat):
            hist[0, o, p] = state[out_nodes[o], p]
    t = 0
    while t < horizon:
        for i in range(n_nodes):
            lo = indptr[i]
            for p in range(n_pat):
                idx[p] = 0
            for k in range(lo, indptr[i + 1]):
                s = srcs[k]
                sh = k - lo
                for p in range(n_pat):
                    idx[p] |= np.int64(state[s, p]) << sh
            row = n_inputs + i
            if hashed:
                nk = nodekeys[i]
                for p in range(n_pat):
                    nxt[row, p] = _hashed_bit(nk, idx[p])
            else:
                off = lut_off[i]
                for p in range(n_pat):
                    nxt[row, p] = luts[off + idx[p]]
        t += 1
        same_prev = True
        same_saved = True
        for r in range(n_inputs, n_total):
            for p in range(n_pat):
                v = nxt[r, p]
                if v != state[r, p]:
                    same_prev = False
                if v != saved[r, p]:
                    same_saved = False
        for o in range(n_out):
            for p in range(n_pat):
                hist[t, o, p] = nxt[out_nodes[o], p]
        tmp = state
        state = nxt
        nxt = tmp
        if same_prev:
            base = t - 1
            period = 1
            break
        if same_saved:
            base = saved_t
            period = t - saved_t
            break
        if t - saved_t == power:
            saved[:, :] = state
            saved_t = t
            power *= 2

    for tau in range(transient + 1, horizon + 1):
        src_t = tau
        if tau > t:
            src_t = base + (tau - base) % period
        for o in range(n_out):
            for p in range(n_pat):
                activity[o, p] += hist[src_t, o, p]


@njit(cache=True)
def _threshold(activity, total, out):
    n_out, n_pat = activity.shape
    for p in range(n_pat):
        for o in range(n_out):
            out[p, o] = 1 if 2 * activity[o, p] >= total else 0


@njit(cache=True)
def run_patterns(n_inputs, indptr, srcs, lut_off, luts, out_nodes, patterns,
                 inits, transient, window):
    """Thresholded output bits, shape ``(P, O)``.

    ``inits`` has one initial compute state per trial; activity is pooled
    over trials and an output reads 1 when it was on for at least half of
    the pooled window steps.
    """
    n_nodes = indptr.shape[0] - 1
    n_pat = patterns.shape[0]
    n_out = out_nodes.shape[0]
    n_total = n_inputs + n_nodes
    hist = np.empty((transient + window + 1, n_out, n_pat), dtype=np.uint8)
    activity = np.zeros((n_out, n_pat), dtype=np.int64)
    state = np.empty((n_total, n_pat), dtype=np.uint8)
    nodekeys = np.empty(0, dtype=np.uint64)
    for r in range(inits.shape[0]):
        for i in range(n_inputs):
            for p in range(n_pat):
                state[i, p] = patterns[p, i]
        for i in range(n_nodes):
            for p in range(n_pat):
                state[n_inputs + i, p] = inits[r, i]
        _simulate(n_inputs, indptr, srcs, lut_off, luts, nodekeys, False,
                  out_nodes, state, transient, window, hist, activity)
    out = np.empty((n_pat, n_out), dtype=np.uint8)
    _threshold(activity, window * inits.shape[0], out)
    return out


@njit(cache=True)
def settle_acyclic(n_inputs, indptr, srcs, lut_off, luts, out_nodes, patterns, topo):
    """Output bits of an acyclic network, shape ``(P, O)``.

    Non-input nodes are visited in ``topo`` order (every source before its
    destination), which yields the fixed point the synchronous dynamics
    reach within ``N`` steps.
    """
    n_nodes = indptr.shape[0] - 1
    n_pat = patterns.shape[0]
    n_out = out_nodes.shape[0]
    state = np.empty((n_inputs + n_nodes, n_pat), dtype=np.uint8)
    for i in range(n_inputs):
        for p in range(n_pat):
            state[i, p] = patterns[p, i]
    idx = np.empty(n_pat, dtype=np.int64)
    for t in range(topo.shape[0]):
        i = topo[t] - n_inputs
        lo = indptr[i]
        for p in range(n_pat):
            idx[p] = 0
        for k in range(lo, indptr[i + 1]):
            s = srcs[k]
            sh = k - lo
            for p in range(n_pat):
                idx[p] |= np.int64(state[s, p]) << sh
        off = lut_off[i]
        for p in range(n_pat):
            state[topo[t], p] = luts[off + idx[p]]
    out = np.empty((n_pat, n_out), dtype=np.uint8)
    for p in range(n_pat):
        for o in range(n_out):
            out[p, o] = state[out_nodes[o], p]
    return out


@njit(cache=True)
def fingerprint_ensemble(keys, n_nodes, n_inputs, n_outputs, n_links,
                         binomial, feedforward, patterns, transient, window):
    """Packed truth tables of the networks named by ``keys``.

    Returns ``(len(keys), W)`` uint64 words; the table is flattened pattern
    by pattern and read as one binary literal split into 64-bit words, most
    significant word first.
    """
    n_pat = patterns.shape[0]
    n_bits = n_pat * n_outputs
    n_words = (n_bits + 63) // 64
    n_total = n_inputs + n_nodes
    out_nodes = np.arange(n_total - n_outputs, n_total)
    words = np.zeros((keys.shape[0], n_words), dtype=np.uint64)
    hist = np.empty((transient + window + 1, n_outputs, n_pat), dtype=np.uint8)
    activity = np.zeros((n_outputs, n_pat), dtype=np.int64)
    state = np.empty((n_total, n_pat), dtype=np.uint8)
    table = np.empty((n_pat, n_outputs), dtype=np.uint8)
    empty_off = np.empty(0, dtype=np.int64)
    empty_lut = np.empty(0, dtype=np.uint8)
    no_order = np.empty(0, dtype=np.int64)
    for b in range(keys.shape[0]):
        links, order, lut_key = sample_structure(
            keys[b], n_nodes, n_inputs, n_outputs, n_links, binomial, feedforward,
            no_order)
        indptr, srcs = csr(links, n_nodes, n_inputs)
        nodekeys = node_keys(lut_key, n_nodes)
        state[:, :] = 0
        for i in range(n_inputs):
            for p in range(n_pat):
                state[i, p] = patterns[p, i]
        activity[:, :] = 0
        _simulate(n_inputs, indptr, srcs, empty_off, empty_lut, nodekeys, True,
                  out_nodes, state, transient, window, hist, activity)
        _threshold(activity, window, table)
        # bit position counted from the least significant end of the literal
        for p in range(n_pat):
            for o in range(n_outputs):
                if table[p, o]:
                    pos = n_bits - 1 - (p * n_outputs + o)
                    w = n_words - 1 - pos // 64
                    words[b, w] |= _ONE << np.uint64(pos % 64)
    return words


@njit(cache=True)
def step_state(n_inputs, indptr, srcs, lut_off, luts, state):
    """One synchronous update of a flat ``(I+N,)`` state."""
    nxt = state.copy()
    for i in range(indptr.shape[0] - 1):
        idx = 0
        lo = indptr[i]
        for k in range(lo, indptr[i + 1]):
            idx |= np.int64(state[srcs[k]]) << (k - lo)
        nxt[n_inputs + i] = luts[lut_off[i] + idx]
    return nxt


@njit(cache=True)
def genome_offsets(ids, n_nodes, n_inputs):
    """In-degrees and LUT offsets implied by a flat link section."""
    deg = np.zeros(n_nodes, dtype=np.int64)
    for l in range(ids.shape[0] // 2):
        deg[ids[2 * l + 1] - n_inputs] += 1
    off = np.zeros(n_nodes + 1, dtype=np.int64)
    for i in range(n_nodes):
        off[i + 1] = off[i] + (1 << deg[i])
    return deg, off


@njit(cache=True)
def refit(ids, old_ids, old_bits, n_nodes, n_inputs):
    """Old tables re-fitted to the in-degrees of ``ids``.

    A table is repeated cyclically when it must grow and truncated when it
    must shrink.
    """
    _, off_old = genome_offsets(old_ids, n_nodes, n_inputs)
    deg, off = genome_offsets(ids, n_nodes, n_inputs)
    bits = np.empty(off[n_nodes], dtype=np.uint8)
    for i in range(n_nodes):
        seg = off_old[i + 1] - off_old[i]
        for j in range(1 << deg[i]):
            bits[off[i] + j] = old_bits[off_old[i] + j % seg]
    return bits


@njit(cache=True)
def cross_child(ids1, bits1, ids2, bits2, cut, n_nodes, n_inputs):
    """Child taking flat positions ``< cut`` from parent 1, the rest from parent 2.

    A link pair split by the cut is rejoined (source from parent 1,
    destination from parent 2) when both parents have it, and dropped
    otherwise. Each node's table is its parent-1 part followed by its
    parent-2 part, re-fitted to the child's in-degree; if both parts are
    empty the node takes parent 2's whole table.
    """
    n1 = ids1.shape[0]
    n2 = ids2.shape[0]
    half = cut // 2
    take1 = min(half, n1 // 2)
    join = 1 if (cut % 2 == 1 and cut < n1 and cut < n2) else 0
    start2 = (cut + 1) // 2
    take2 = max(n2 // 2 - start2, 0)
    ids = np.empty(2 * (take1 + join + take2), dtype=np.int64)
    ids[:2 * take1] = ids1[:2 * take1]
    pos = 2 * take1
    if join:
        ids[pos] = ids1[2 * half]
        ids[pos + 1] = ids2[2 * half + 1]
        pos += 2
    ids[pos:] = ids2[2 * start2:2 * start2 + 2 * take2]

    _, off1 = genome_offsets(ids1, n_nodes, n_inputs)
    _, off2 = genome_offsets(ids2, n_nodes, n_inputs)
    deg, off = genome_offsets(ids, n_nodes, n_inputs)
    bits = np.empty(off[n_nodes], dtype=np.uint8)
    for i in range(n_nodes):
        s1 = off1[i + 1] - off1[i]
        la = min(max(cut - (n1 + off1[i]), 0), s1)
        s2 = off2[i + 1] - off2[i]
        skip = min(max(cut - (n2 + off2[i]), 0), s2)
        lb = s2 - skip
        sb = off2[i] + skip
        if la + lb == 0:
            lb = s2
            sb = off2[i]
        seg = la + lb
        for j in range(1 << deg[i]):
            r = j % seg
            if r < la:
                bits[off[i] + j] = bits1[off1[i] + r]
            else:
                bits[off[i] + j] = bits2[sb + r - la]
    return ids, bits


@njit(cache=True)
def genome_distance(ids, bits, n_nodes, n_inputs, n_outputs, patterns, targets,
                    popcount, transient, window, topo):
    """Summed per-pattern distance of a genome's outputs from ``targets``.

    A non-empty ``topo`` marks the genome as acyclic in that node order.
    """
    links = ids.reshape(-1, 2)
    indptr, srcs = csr(links, n_nodes, n_inputs)
    _, lut_off = genome_offsets(ids, n_nodes, n_inputs)
    n_total = n_nodes + n_inputs
    out_nodes = np.arange(n_total - n_outputs, n_total)
    if topo.shape[0] > 0:
        out = settle_acyclic(n_inputs, indptr, srcs, lut_off, bits, out_nodes,
                             patterns, topo)
    else:
        inits = np.zeros((1, n_nodes), dtype=np.uint8)
        out = run_patterns(n_inputs, indptr, srcs, lut_off, bits, out_nodes,
                           patterns, inits, transient, window)
    dist = 0
    for p in range(out.shape[0]):
        if popcount:
            a = 0
            b = 0
            for o in range(n_outputs):
                a += out[p, o]
                b += targets[p, o]
            dist += abs(a - b)
        else:
            for o in range(n_outputs):
                if out[p, o] != targets[p, o]:
                    dist += 1
    return dist


@njit(cache=True)
def indexed_keys(base, start, count):
    """Keys ``start .. start+count-1`` of the stream named by ``base``.

    Key ``j`` depends only on ``base`` and ``j``, so any chunking of the
    index range yields the same keys.
    """
    out = np.empty(count, dtype=np.uint64)
    for j in range(count):
        out[j] = _mix64(_mix64(base) + np.uint64(start + j + 1) * _GOLDEN)
    return out
