"""Compiled genetic operators and the generational loop.

Every operator draws from a splitmix64 stream ``st`` (a one-element uint64
array), so a whole run is reproducible from one 64-bit key. Feedforward
layouts pass ``order`` (node -> rank) and ``by_rank`` (rank -> node); a
recurrent layout passes empty arrays for both.
"""

import numpy as np
from numba import njit
from numba.typed import List

from rbnlab._kernels import (_INV53, _S11, _below, _next, cross_child,
                             genome_distance, refit)


@njit(cache=True, inline="always")
def _uniform(st):
    return np.float64(_next(st) >> _S11) * _INV53


@njit(cache=True)
def poisson(st, rate):
    """Poisson draw by multiplying uniforms; fine for the small rates used here."""
    if rate <= 0.0:
        return 0
    limit = np.exp(-rate)
    k = 0
    p = _uniform(st)
    while p > limit:
        k += 1
        p *= _uniform(st)
    return k


@njit(cache=True)
def legal_source(st, dst, order, by_rank, n_total):
    if order.shape[0] == 0:
        return _below(st, n_total)
    return by_rank[_below(st, order[dst])]


@njit(cache=True)
def legal_destination(st, src, order, by_rank, n_total, n_inputs):
    """Random node that may receive a link from ``src``; -1 if there is none."""
    if order.shape[0] == 0:
        return n_inputs + _below(st, n_total - n_inputs)
    lo = max(order[src] + 1, n_inputs)
    if lo >= n_total:
        return -1
    return by_rank[lo + _below(st, n_total - lo)]


@njit(cache=True)
def enforce_order(st, ids, order, by_rank, n_total):
    """Redirect order-violating links to a random legal source, in place."""
    if order.shape[0] == 0:
        return
    for l in range(ids.shape[0] // 2):
        if order[ids[2 * l]] >= order[ids[2 * l + 1]]:
            ids[2 * l] = legal_source(st, ids[2 * l + 1], order, by_rank, n_total)


@njit(cache=True)
def point_mutation(st, ids, bits, loc, order, by_rank, n_nodes, n_inputs):
    """One mutation at ``loc``; returns ``(ids, bits)``, sharing unchanged arrays."""
    n_ids = ids.shape[0]
    n_total = n_nodes + n_inputs
    if loc >= n_ids:
        nb = bits.copy()
        nb[loc - n_ids] ^= 1
        return ids, nb
    ni = ids.copy()
    if loc % 2 == 0:
        ni[loc] = legal_source(st, ids[loc + 1], order, by_rank, n_total)
        return ni, bits
    new = legal_destination(st, ids[loc - 1], order, by_rank, n_total, n_inputs)
    if new < 0 or new == ids[loc]:
        return ids, bits
    ni[loc] = new
    return ni, refit(ni, ids, bits, n_nodes, n_inputs)


@njit(cache=True)
def mutate(st, ids, bits, rate, order, by_rank, n_nodes, n_inputs):
    """Poisson(``rate``) point mutations; also returns how many were applied."""
    count = poisson(st, rate)
    for _ in range(count):
        loc = _below(st, ids.shape[0] + bits.shape[0])
        ids, bits = point_mutation(st, ids, bits, loc, order, by_rank,
                                   n_nodes, n_inputs)
    return ids, bits, count


@njit(cache=True)
def crossover(st, ids1, bits1, ids2, bits2, cut, order, by_rank, n_nodes, n_inputs):
    """Both children of a one-point crossover; ``cut < 0`` draws the cut."""
    if cut < 0:
        n = min(ids1.shape[0] + bits1.shape[0], ids2.shape[0] + bits2.shape[0])
        cut = _below(st, n + 1)
    ia, ba = cross_child(ids1, bits1, ids2, bits2, cut, n_nodes, n_inputs)
    ib, bb = cross_child(ids2, bits2, ids1, bits1, cut, n_nodes, n_inputs)
    n_total = n_nodes + n_inputs
    enforce_order(st, ia, order, by_rank, n_total)
    enforce_order(st, ib, order, by_rank, n_total)
    return ia, ba, ib, bb


@njit(cache=True)
def tournament(st, fit):
    """Binary tournament; ties go to the lower index."""
    n = fit.shape[0]
    i = _below(st, n)
    j = _below(st, n - 1)
    if j >= i:
        j += 1
    if fit[i] > fit[j] or (fit[i] == fit[j] and i < j):
        return i
    return j


@njit(cache=True)
def _stats(fit):
    n = fit.shape[0]
    best = fit[0]
    total = 0.0
    for v in fit:
        total += v
        if v > best:
            best = v
    mean = total / n
    var = 0.0
    for v in fit:
        var += (v - mean) ** 2
    return best, mean, np.sqrt(var / n)


@njit(cache=True)
def run_ga(key, ids_flat, ids_off, bits_flat, bits_off, order, by_rank, topo,
           n_nodes, n_inputs, n_outputs, patterns, targets, popcount,
           generations, cx_rate, mut_rate, elitism):
    """Generational GA over an initial population given as concatenated genomes.

    Returns ``(history (G+1, 3), best_ids, best_bits, best_fitness)`` where
    the history columns are best, mean and std fitness per generation.
    """
    st = np.empty(1, dtype=np.uint64)
    st[0] = key
    size = ids_off.shape[0] - 1
    transient = 2 * n_nodes
    denom = patterns.shape[0] * n_outputs
    perfect = 1.0 - 0.5 / denom

    pop_ids = List()
    pop_bits = List()
    fit = np.empty(size)
    for k in range(size):
        ids = ids_flat[ids_off[k]:ids_off[k + 1]].copy()
        bits = bits_flat[bits_off[k]:bits_off[k + 1]].copy()
        pop_ids.append(ids)
        pop_bits.append(bits)
        d = genome_distance(ids, bits, n_nodes, n_inputs, n_outputs, patterns,
                            targets, popcount, transient, n_nodes, topo)
        fit[k] = 1.0 - d / denom

    history = np.empty((generations + 1, 3))
    gen = 0
    while True:
        history[gen, 0], history[gen, 1], history[gen, 2] = _stats(fit)
        if history[gen, 0] >= perfect or gen >= generations:
            break
        new_ids = List()
        new_bits = List()
        new_fit = np.empty(size)
        n = 0
        if elitism:
            b = np.argmax(fit)
            new_ids.append(pop_ids[b])
            new_bits.append(pop_bits[b])
            new_fit[0] = fit[b]
            n = 1
        while n < size:
            a = tournament(st, fit)
            b = tournament(st, fit)
            if _uniform(st) < cx_rate:
                ia, ba, ib, bb = crossover(st, pop_ids[a], pop_bits[a],
                                           pop_ids[b], pop_bits[b], -1,
                                           order, by_rank, n_nodes, n_inputs)
                fa = -1.0
                fb = -1.0
            else:
                ia, ba, ib, bb = pop_ids[a], pop_bits[a], pop_ids[b], pop_bits[b]
                fa = fit[a]
                fb = fit[b]
            for c in range(2):
                if n == size:
                    break
                ids, bits, f = (ia, ba, fa) if c == 0 else (ib, bb, fb)
                mi, mb, hits = mutate(st, ids, bits, mut_rate, order, by_rank,
                                      n_nodes, n_inputs)
                if hits:
                    f = -1.0
                if f < 0.0:
                    d = genome_distance(mi, mb, n_nodes, n_inputs, n_outputs,
                                        patterns, targets, popcount, transient,
                                        n_nodes, topo)
                    f = 1.0 - d / denom
                new_ids.append(mi)
                new_bits.append(mb)
                new_fit[n] = f
                n += 1
        pop_ids = new_ids
        pop_bits = new_bits
        fit = new_fit
        gen += 1
    b = np.argmax(fit)
    return history[:gen + 1].copy(), pop_ids[b], pop_bits[b], fit[b]
