"""Random Boolean networks with clamped inputs and read-out nodes.

Node ids are laid out as ``0..I-1`` for inputs, then the ``N`` non-input
nodes, the last ``O`` of which are the outputs. A node's incoming links are
taken in link-list order and the earliest link addresses the least
significant bit of its lookup-table index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from rbnlab import _kernels

#: Default cap on ``2**I * O`` for exhaustive truth-table enumeration.
ENUMERATION_CAP = 2 ** 20
#: Largest in-degree for which a lookup table is materialised.
MAX_IN_DEGREE = 24


class InputSpaceTooLarge(ValueError):
    """The full input space is too large to enumerate."""


class NodeRole(enum.Enum):
    INPUT = "input"
    COMPUTE = "compute"
    OUTPUT = "output"


class Wiring(str, enum.Enum):
    """How random links are placed.

    ``EXACT`` places exactly ``round(N*K)`` links. ``BINOMIAL`` draws that many
    candidate pairs and keeps each with probability one half.
    """

    EXACT = "exact"
    BINOMIAL = "binomial"


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class NetworkSpec:
    n_nodes: int
    k: float
    n_inputs: int = 3
    n_outputs: int = 1
    wiring: Wiring = Wiring.EXACT
    feedforward: bool = False

    def __post_init__(self):
        object.__setattr__(self, "wiring", Wiring(self.wiring))
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if not 1 <= self.n_outputs <= self.n_nodes:
            raise ValueError("n_outputs must satisfy 1 <= O <= N")
        if self.n_inputs < 1:
            raise ValueError("n_inputs must be >= 1")
        if not self.k >= 0:
            raise ValueError("k must be non-negative")

    @property
    def n_links(self) -> int:
        """Number of candidate link draws, ``round(N*K)``."""
        return round_half_up(self.n_nodes * self.k)


@dataclass(frozen=True, eq=False)
class BooleanNetwork:
    """An immutable Boolean network.

    Parameters
    ----------
    n_nodes, n_inputs, n_outputs : int
        ``N`` non-input nodes (outputs included), ``I`` inputs, ``O`` outputs.
    links : (L, 2) int array
        ``(source, destination)`` rows in link-list order.
    luts : sequence of uint8 arrays
        One table per non-input node, of length ``2**in_degree``.
    order : (I+N,) int array, optional
        Node ranks; present only for feedforward networks.
    """

    n_nodes: int
    n_inputs: int
    n_outputs: int
    links: np.ndarray
    luts: tuple
    order: Optional[np.ndarray] = None

    def __post_init__(self):
        links = np.asarray(self.links, dtype=np.int64).reshape(-1, 2)
        luts = tuple(np.asarray(t, dtype=np.uint8) for t in self.luts)
        links.setflags(write=False)
        for t in luts:
            t.setflags(write=False)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "luts", luts)
        if self.order is not None:
            order = np.asarray(self.order, dtype=np.int64)
            order.setflags(write=False)
            object.__setattr__(self, "order", order)
        self._validate()

    def _validate(self):
        n, i = self.n_nodes, self.n_inputs
        if n < 1 or i < 1 or not 1 <= self.n_outputs <= n:
            raise ValueError("invalid network dimensions")
        if len(self.luts) != n:
            raise ValueError(f"expected {n} lookup tables, got {len(self.luts)}")
        if len(self.links):
            src, dst = self.links[:, 0], self.links[:, 1]
            if src.min() < 0 or src.max() >= n + i:
                raise ValueError("link source out of range")
            if dst.min() < i or dst.max() >= n + i:
                raise ValueError("link destination must be a non-input node")
        deg = self.in_degrees
        for node, (k, table) in enumerate(zip(deg, self.luts)):
            if k > MAX_IN_DEGREE:
                raise ValueError(f"in-degree {k} exceeds MAX_IN_DEGREE")
            if table.shape != (1 << int(k),):
                raise ValueError(
                    f"node {node + i}: LUT length {table.shape} != 2**{k}")
            if table.size and table.max() > 1:
                raise ValueError("LUT entries must be 0 or 1")
        if self.order is not None:
            if self.order.shape != (n + i,):
                raise ValueError("order must have one rank per node")
            if len(self.links) and np.any(
                    self.order[self.links[:, 0]] >= self.order[self.links[:, 1]]):
                raise ValueError("feedforward order violated")

    @property
    def n_total(self) -> int:
        return self.n_nodes + self.n_inputs

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def feedforward(self) -> bool:
        return self.order is not None

    @cached_property
    def in_degrees(self) -> np.ndarray:
        dst = self.links[:, 1] - self.n_inputs
        return np.bincount(dst, minlength=self.n_nodes).astype(np.int64)

    @property
    def output_nodes(self) -> np.ndarray:
        return np.arange(self.n_total - self.n_outputs, self.n_total)

    def role(self, node: int) -> NodeRole:
        if node < self.n_inputs:
            return NodeRole.INPUT
        if node >= self.n_total - self.n_outputs:
            return NodeRole.OUTPUT
        return NodeRole.COMPUTE

    def sources(self, node: int) -> np.ndarray:
        """Sources feeding ``node``, least significant LUT bit first."""
        return self.links[self.links[:, 1] == node, 0]

    @cached_property
    def compiled(self):
        """CSR arrays consumed by the compiled kernels."""
        indptr, srcs = _kernels.csr(np.ascontiguousarray(self.links),
                                    self.n_nodes, self.n_inputs)
        sizes = np.array([t.size for t in self.luts], dtype=np.int64)
        lut_off = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(sizes, out=lut_off[1:])
        luts = np.concatenate(self.luts) if self.luts else np.zeros(0, np.uint8)
        return indptr, srcs, lut_off, luts

    def __eq__(self, other):
        if not isinstance(other, BooleanNetwork):
            return NotImplemented
        same_order = (self.order is None and other.order is None) or (
            self.order is not None and other.order is not None
            and np.array_equal(self.order, other.order))
        return (self.n_nodes == other.n_nodes
                and self.n_inputs == other.n_inputs
                and self.n_outputs == other.n_outputs
                and np.array_equal(self.links, other.links)
                and len(self.luts) == len(other.luts)
                and all(np.array_equal(a, b) for a, b in zip(self.luts, other.luts))
                and same_order)

    __hash__ = None

    def relabel(self, perm: Sequence[int]) -> "BooleanNetwork":
        """Return the network with non-input nodes renamed by ``perm``.

        ``perm[j]`` is the new non-input index of old non-input node ``j``;
        output nodes must map onto output slots. LUTs and link order are
        carried along so every node keeps its function.
        """
        perm = np.asarray(perm, dtype=np.int64)
        i = self.n_inputs
        mapping = np.concatenate([np.arange(i), perm + i])
        links = mapping[self.links]
        luts = [None] * self.n_nodes
        for old, new in enumerate(perm):
            luts[new] = self.luts[old]
        order = None
        if self.order is not None:
            order = np.empty_like(self.order)
            order[mapping] = self.order
        return BooleanNetwork(self.n_nodes, i, self.n_outputs, links, tuple(luts), order)


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` fair coin flips as a uint8 array."""
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(rng.bytes((n + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw)[:n]


def draw_key(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 63, dtype=np.int64))


def network_from_key(spec: NetworkSpec, key: int,
                     order: Optional[np.ndarray] = None) -> BooleanNetwork:
    """The ensemble member of ``spec`` named by a 64-bit ``key``.

    Links are uniform ``(source, destination)`` draws with replacement;
    sources range over every node and destinations over non-input nodes.
    Feedforward networks rank inputs lowest and outputs highest with the
    compute nodes shuffled in between, and order-violating draws are
    redrawn. LUT entries are fair bits from a keyed hash. A given
    ``order`` is used instead of drawing one (an evolving population
    shares a single order).
    """
    fixed = np.empty(0, np.int64) if order is None else np.asarray(order, np.int64)
    links, order, lut_key = _kernels.sample_structure(
        np.uint64(key), spec.n_nodes, spec.n_inputs, spec.n_outputs,
        spec.n_links, spec.wiring is Wiring.BINOMIAL, spec.feedforward, fixed)
    deg = np.bincount(links[:, 1] - spec.n_inputs, minlength=spec.n_nodes)
    if deg.size and deg.max() > MAX_IN_DEGREE:
        raise ValueError(f"sampled in-degree {deg.max()} exceeds MAX_IN_DEGREE")
    bits = _kernels.hashed_luts(np.uint64(lut_key), deg.astype(np.int64))
    sizes = np.left_shift(1, deg)
    luts = tuple(np.split(bits, np.cumsum(sizes)[:-1]))
    return BooleanNetwork(spec.n_nodes, spec.n_inputs, spec.n_outputs, links, luts,
                          order if spec.feedforward else None)


def build_random_network(spec: NetworkSpec, rng: np.random.Generator,
                         order: Optional[np.ndarray] = None) -> BooleanNetwork:
    """Sample a network from the ensemble described by ``spec``.

    In exact wiring exactly ``round(N*K)`` links are placed; in binomial
    wiring each of those candidate pairs is kept with probability 1/2.
    """
    return network_from_key(spec, draw_key(rng), order)


def random_order(spec: NetworkSpec, rng: np.random.Generator) -> np.ndarray:
    """A feedforward rank per node: inputs lowest, outputs highest."""
    n_compute = spec.n_nodes - spec.n_outputs
    i = spec.n_inputs
    order = np.arange(spec.n_nodes + i, dtype=np.int64)
    order[i:i + n_compute] = i + rng.permutation(n_compute)
    return order


def input_space(n_inputs: int) -> np.ndarray:
    """All ``2**I`` input patterns in ascending order; column 0 is the MSB."""
    p = np.arange(1 << n_inputs, dtype=np.int64)
    shifts = np.arange(n_inputs - 1, -1, -1)
    return ((p[:, None] >> shifts) & 1).astype(np.uint8)


def step(net: BooleanNetwork, state) -> np.ndarray:
    """One synchronous update of a full ``(I+N,)`` state; inputs are held."""
    state = np.asarray(state, dtype=np.uint8)
    if state.shape != (net.n_total,):
        raise ValueError(f"state must have length {net.n_total}")
    indptr, srcs, lut_off, luts = net.compiled
    return _kernels.step_state(net.n_inputs, indptr, srcs, lut_off, luts, state)


def trajectory(net: BooleanNetwork, state, steps: int) -> np.ndarray:
    """States at times ``0..steps`` as a ``(steps+1, I+N)`` array."""
    out = [np.asarray(state, dtype=np.uint8)]
    for _ in range(steps):
        out.append(step(net, out[-1]))
    return np.stack(out)


def find_attractor(net: BooleanNetwork, state, max_steps: Optional[int] = None):
    """Return ``(transient, period)`` of the trajectory from ``state``.

    Uses a visited-state table, so it is exact but only suitable for small
    networks. Returns ``None`` if no repeat is seen within ``max_steps``.
    """
    if max_steps is None:
        max_steps = 1 << min(net.n_nodes + 1, 24)
    seen = {}
    cur = np.asarray(state, dtype=np.uint8)
    for t in range(max_steps + 1):
        key = cur.tobytes()
        if key in seen:
            return seen[key], t - seen[key]
        seen[key] = t
        cur = step(net, cur)
    return None


def _initial_states(net, init, trials, rng):
    if init is None:
        if trials == 1:
            return np.zeros((1, net.n_nodes), dtype=np.uint8)
        if rng is None:
            raise ValueError("random initial states need an rng")
        return random_bits(rng, trials * net.n_nodes).reshape(trials, net.n_nodes)
    init = np.asarray(init, dtype=np.uint8)
    return init.reshape(-1, net.n_nodes)


def topological_nodes(order: np.ndarray, n_inputs: int) -> np.ndarray:
    """Non-input node ids sorted by feedforward rank."""
    by_rank = np.argsort(order, kind="stable")
    return np.ascontiguousarray(by_rank[by_rank >= n_inputs], dtype=np.int64)


def evaluate_patterns(net: BooleanNetwork, patterns, *, init=None,
                      trials: int = 1, rng: Optional[np.random.Generator] = None,
                      transient: Optional[int] = None,
                      window: Optional[int] = None) -> np.ndarray:
    """Read-out bits for many input patterns, shape ``(P, O)``.

    Each pattern is clamped, the network runs ``transient`` steps (default
    ``2N``) from the initial compute state and then ``window`` more steps
    (default ``N``); an output reads 1 if it was on for at least half of
    the window. The default initial state is all zeros. ``trials > 1``
    draws that many random initial states from ``rng`` and pools activity.

    Feedforward networks under the default schedule are settled in one
    topological sweep, which gives the same fixed point.
    """
    patterns = np.ascontiguousarray(np.atleast_2d(np.asarray(patterns, dtype=np.uint8)))
    if patterns.shape[1] != net.n_inputs:
        raise ValueError(f"patterns must have {net.n_inputs} columns")
    transient = 2 * net.n_nodes if transient is None else transient
    window = net.n_nodes if window is None else window
    indptr, srcs, lut_off, luts = net.compiled
    if (net.feedforward and transient >= net.n_nodes and window >= 1
            and init is None and trials == 1):
        return _kernels.settle_acyclic(net.n_inputs, indptr, srcs, lut_off, luts,
                                       net.output_nodes, patterns,
                                       topological_nodes(net.order, net.n_inputs))
    inits = np.ascontiguousarray(_initial_states(net, init, trials, rng))
    return _kernels.run_patterns(net.n_inputs, indptr, srcs, lut_off, luts,
                                 net.output_nodes, patterns, inits,
                                 transient, window)


def evaluate(net: BooleanNetwork, bits, **kwargs) -> np.ndarray:
    """Read-out bits for a single input pattern."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (net.n_inputs,):
        raise ValueError(f"input must have {net.n_inputs} bits")
    return evaluate_patterns(net, bits[None, :], **kwargs)[0]


def truth_table(net: BooleanNetwork, cap: int = ENUMERATION_CAP, **kwargs) -> np.ndarray:
    """Outputs over the whole input space, shape ``(2**I, O)``."""
    if (1 << net.n_inputs) * net.n_outputs > cap:
        raise InputSpaceTooLarge(
            f"2**{net.n_inputs} x {net.n_outputs} exceeds cap {cap}")
    return evaluate_patterns(net, input_space(net.n_inputs), **kwargs)


def pack_bits(bits: Iterable[int]) -> int:
    """Read a bit sequence as a binary literal, first bit most significant."""
    key = 0
    for b in bits:
        key = (key << 1) | int(b)
    return key


def realized_function(net: BooleanNetwork, cap: int = ENUMERATION_CAP, **kwargs) -> int:
    """Integer key of the network's truth table.

    The table is flattened pattern by pattern (input ``00..0`` first) and
    read as a binary literal, so the 3-input parity function packs to
    ``0b01101001 == 105``.
    """
    return pack_bits(truth_table(net, cap, **kwargs).ravel())


# -- text serialisation -----------------------------------------------------

def dumps(net: BooleanNetwork) -> str:
    """Line format: ``N I O mode`` header, optional ``order`` line,
    ``src dst`` per link, then one hex LUT line per non-input node
    (bit ``j`` of the integer is table entry ``j``)."""
    mode = "feedforward" if net.feedforward else "recurrent"
    lines = [f"{net.n_nodes} {net.n_inputs} {net.n_outputs} {mode}"]
    if net.feedforward:
        lines.append("order " + " ".join(str(int(r)) for r in net.order))
    lines.extend(f"{int(s)} {int(d)}" for s, d in net.links)
    for table in net.luts:
        value = int.from_bytes(np.packbits(table, bitorder="little").tobytes(), "little")
        lines.append(format(value, "x"))
    return "\n".join(lines) + "\n"


def loads(text: str) -> BooleanNetwork:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 4:
        raise ValueError("missing 'N I O mode' header")
    n, i, o = (int(x) for x in rows[0][:3])
    mode = rows[0][3]
    if mode not in ("recurrent", "feedforward"):
        raise ValueError(f"unknown mode {mode!r}")
    body = rows[1:]
    order = None
    if mode == "feedforward":
        if not body or body[0][0] != "order":
            raise ValueError("feedforward network needs an 'order' line")
        order = np.array([int(x) for x in body[0][1:]], dtype=np.int64)
        body = body[1:]
    link_rows = [r for r in body if len(r) == 2]
    lut_rows = [r[0] for r in body if len(r) == 1]
    if len(link_rows) + len(lut_rows) != len(body) or len(lut_rows) != n:
        raise ValueError("malformed network body")
    links = np.array([[int(a), int(b)] for a, b in link_rows], dtype=np.int64).reshape(-1, 2)
    deg = np.bincount(links[:, 1] - i, minlength=n) if len(links) else np.zeros(n, int)
    luts = []
    for k, hexval in zip(deg, lut_rows):
        size = 1 << int(k)
        value = int(hexval, 16)
        if value >> size:
            raise ValueError("LUT hex value wider than its table")
        luts.append(np.array([(value >> j) & 1 for j in range(size)], dtype=np.uint8)
                    if size <= 64 else
                    np.unpackbits(np.frombuffer(value.to_bytes((size + 7) // 8, "little"),
                                                dtype=np.uint8), bitorder="little")[:size])
    return BooleanNetwork(n, i, o, links, tuple(luts), order)
