"""Genome encoding, genetic operators and the generational GA.

A genome is the link list flattened to ``[src0, dst0, src1, dst1, ...]``
followed by every non-input node's lookup table, node by node. Because a
table has ``2**in_degree`` entries, its position in the bit section follows
from the in-degrees alone.

Operators that change in-degrees re-fit the affected tables: a table that
must grow is repeated cyclically, one that must shrink is truncated.
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from rbnlab import _ga, _kernels
from rbnlab.network import (BooleanNetwork, NetworkSpec, build_random_network,
                            draw_key, random_order, topological_nodes)
from rbnlab.tasks import (PatternSet, SampleSpec, Scorer, TaskSpec, draw_sample,
                          generalization)


@dataclass(frozen=True, eq=False)
class Layout:
    """What a genome needs to be decoded: node counts and the shared order."""

    n_nodes: int
    n_inputs: int
    n_outputs: int
    order: Optional[np.ndarray] = None

    @property
    def n_total(self) -> int:
        return self.n_nodes + self.n_inputs

    @property
    def feedforward(self) -> bool:
        return self.order is not None

    @classmethod
    def of(cls, net: BooleanNetwork) -> "Layout":
        return cls(net.n_nodes, net.n_inputs, net.n_outputs, net.order)


@dataclass(frozen=True, eq=False)
class Genome:
    ids: np.ndarray
    bits: np.ndarray

    def __post_init__(self):
        ids = np.ascontiguousarray(self.ids, dtype=np.int64).ravel()
        if ids.size % 2:
            raise ValueError("link section must hold (src, dst) pairs")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "bits", np.ascontiguousarray(self.bits, dtype=np.uint8))

    def __len__(self):
        return self.ids.size + self.bits.size

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(self.bits, other.bits)

    __hash__ = None

    @property
    def links(self) -> np.ndarray:
        return self.ids.reshape(-1, 2)

    @property
    def n_links(self) -> int:
        return self.ids.size // 2

    def flat(self) -> np.ndarray:
        return np.concatenate([self.ids, self.bits.astype(np.int64)])

    def in_degrees(self, layout: Layout) -> np.ndarray:
        return np.bincount(self.ids[1::2] - layout.n_inputs,
                           minlength=layout.n_nodes).astype(np.int64)

    def lut_offsets(self, layout: Layout) -> np.ndarray:
        """Start of each node's table in ``bits``, plus the end sentinel."""
        off = np.zeros(layout.n_nodes + 1, dtype=np.int64)
        np.cumsum(np.left_shift(1, self.in_degrees(layout)), out=off[1:])
        return off


def encode(net: BooleanNetwork) -> Genome:
    bits = np.concatenate(net.luts) if net.luts else np.zeros(0, np.uint8)
    return Genome(net.links.ravel(), bits)


def decode(genome: Genome, layout: Layout) -> BooleanNetwork:
    off = genome.lut_offsets(layout)
    if off[-1] != genome.bits.size:
        raise ValueError(
            f"LUT section has {genome.bits.size} bits, in-degrees need {off[-1]}")
    luts = tuple(np.split(genome.bits, off[1:-1]))
    return BooleanNetwork(layout.n_nodes, layout.n_inputs, layout.n_outputs,
                          genome.links, luts, layout.order)


def compile_genome(genome: Genome, layout: Layout):
    """CSR arrays for the kernels, skipping network construction."""
    links = np.ascontiguousarray(genome.links)
    indptr, srcs = _kernels.csr(links, layout.n_nodes, layout.n_inputs)
    lut_off = np.zeros(layout.n_nodes + 1, dtype=np.int64)
    np.cumsum(np.left_shift(1, np.diff(indptr)), out=lut_off[1:])
    if lut_off[-1] != genome.bits.size:
        raise ValueError("LUT section inconsistent with in-degrees")
    return indptr, srcs, lut_off, genome.bits


def repair(ids: np.ndarray, old: Genome, layout: Layout) -> Genome:
    """Give ``ids`` the tables of ``old``, each re-fitted to its new in-degree."""
    ids = np.asarray(ids, np.int64)
    return Genome(ids, _kernels.refit(ids, old.ids, old.bits,
                                      layout.n_nodes, layout.n_inputs))


# -- operators ---------------------------------------------------------------
#
# The compiled operators draw from their own splitmix64 stream; the wrappers
# below seed that stream from the caller's numpy generator.

def _stream(rng: np.random.Generator) -> np.ndarray:
    return np.array([draw_key(rng)], dtype=np.uint64)


def _order_arrays(layout: Layout):
    if not layout.feedforward:
        empty = np.empty(0, np.int64)
        return empty, empty
    order = np.ascontiguousarray(layout.order, dtype=np.int64)
    return order, np.argsort(order, kind="stable").astype(np.int64)


def enforce_feedforward(genome: Genome, layout: Layout,
                        rng: np.random.Generator) -> Genome:
    """Redirect every order-violating link to a random legal source."""
    if not layout.feedforward:
        return genome
    order, by_rank = _order_arrays(layout)
    ids = genome.ids.copy()
    _ga.enforce_order(_stream(rng), ids, order, by_rank, layout.n_total)
    return Genome(ids, genome.bits)


def enforce_feedforward_network(net: BooleanNetwork,
                                rng: np.random.Generator) -> BooleanNetwork:
    if not net.feedforward:
        return net
    layout = Layout.of(net)
    return decode(enforce_feedforward(encode(net), layout, rng), layout)


def point_mutation(genome: Genome, layout: Layout, rng: np.random.Generator,
                   loc: Optional[int] = None) -> Genome:
    """Apply one mutation at ``loc`` (uniform over the genome if omitted).

    A link endpoint is replaced by a random legal node; a LUT entry is
    flipped. Moving a link's destination re-fits the affected tables.
    """
    if loc is None:
        loc = int(rng.integers(len(genome)))
    if not 0 <= loc < len(genome):
        raise IndexError(f"locus {loc} outside genome of length {len(genome)}")
    order, by_rank = _order_arrays(layout)
    ids, bits = _ga.point_mutation(_stream(rng), genome.ids, genome.bits, loc,
                                   order, by_rank, layout.n_nodes, layout.n_inputs)
    return Genome(ids, bits)


def mutate(genome: Genome, layout: Layout, rate: float,
           rng: np.random.Generator) -> Genome:
    """A Poisson(``rate``) number of point mutations at uniform loci."""
    order, by_rank = _order_arrays(layout)
    ids, bits, hits = _ga.mutate(_stream(rng), genome.ids, genome.bits, float(rate),
                                 order, by_rank, layout.n_nodes, layout.n_inputs)
    return Genome(ids, bits) if hits else genome


def crossover(g1: Genome, g2: Genome, layout: Layout, rng: np.random.Generator,
              cut: Optional[int] = None) -> Tuple[Genome, Genome]:
    """One-point crossover at a shared cut position.

    Link pairs split by the cut are rejoined across parents. Each child's
    tables are assembled from the parents' bits on either side of the cut
    and re-fitted to the child's in-degrees; in feedforward mode any link
    that ends up violating the order is redirected.
    """
    if cut is None:
        cut = -1
    elif not 0 <= cut <= min(len(g1), len(g2)):
        raise ValueError("cut outside the shorter parent")
    order, by_rank = _order_arrays(layout)
    ia, ba, ib, bb = _ga.crossover(_stream(rng), g1.ids, g1.bits, g2.ids, g2.bits,
                                   cut, order, by_rank, layout.n_nodes,
                                   layout.n_inputs)
    return Genome(ia, ba), Genome(ib, bb)


def tournament_select(fitnesses, rng: np.random.Generator) -> int:
    """Binary deterministic tournament; ties go to the lower index."""
    fit = np.ascontiguousarray(fitnesses, dtype=np.float64)
    if fit.size < 2:
        raise ValueError("tournament needs at least two individuals")
    return int(_ga.tournament(_stream(rng), fit))


# -- GA ----------------------------------------------------------------------

class Termination(str, enum.Enum):
    PERFECT = "perfect"
    GMAX = "gmax"


@dataclass(frozen=True)
class EvolutionConfig:
    network: NetworkSpec
    task: TaskSpec
    sample_size: int
    population: int = 50
    generations: int = 500
    crossover_rate: float = 0.7
    mutation_rate: float = 0.0
    elitism: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover_rate must be in [0, 1]")
        if self.mutation_rate < 0:
            raise ValueError("mutation_rate must be >= 0")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        net, task = self.network, self.task
        if net.n_inputs != task.n_inputs or net.n_outputs != task.n_outputs:
            raise ValueError("network I/O does not match the task")
        SampleSpec(self.sample_size, task.space_size)

    @property
    def s(self) -> float:
        return self.sample_size / self.task.space_size


@dataclass
class RunRecord:
    f_final: float
    g_final: float
    generations: int
    terminated_by: Termination
    best_f: List[float] = field(default_factory=list)
    mean_f: List[float] = field(default_factory=list)
    std_f: List[float] = field(default_factory=list)
    s: float = 1.0
    seed: int = 0
    elitism: bool = True

    def to_json(self) -> str:
        return json.dumps({
            "f_final": self.f_final, "g_final": self.g_final,
            "generations": self.generations,
            "terminated_by": Termination(self.terminated_by).value,
            "s": self.s, "seed": self.seed, "elitism": self.elitism,
            "best_f": self.best_f, "mean_f": self.mean_f, "std_f": self.std_f,
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        d = json.loads(line)
        d["terminated_by"] = Termination(d["terminated_by"])
        return cls(**d)

    def history_csv(self) -> str:
        buf = io.StringIO()
        buf.write("gen,best_f,mean_f,std_f\n")
        for g, row in enumerate(zip(self.best_f, self.mean_f, self.std_f)):
            buf.write(f"{g},{row[0]!r},{row[1]!r},{row[2]!r}\n")
        return buf.getvalue()


class _Evaluator:
    def __init__(self, layout: Layout, sample: PatternSet):
        self.layout = layout
        self.sample = sample
        self.popcount = sample.scorer is Scorer.POPCOUNT
        self.denom = len(sample) * layout.n_outputs
        self.topo = (topological_nodes(layout.order, layout.n_inputs)
                     if layout.feedforward else np.empty(0, np.int64))

    def __call__(self, genome: Genome) -> float:
        lay = self.layout
        dist = _kernels.genome_distance(
            genome.ids, genome.bits, lay.n_nodes, lay.n_inputs, lay.n_outputs,
            self.sample.inputs, self.sample.targets, self.popcount,
            2 * lay.n_nodes, lay.n_nodes, self.topo)
        return 1.0 - dist / self.denom


def genome_fitness(genome: Genome, layout: Layout, sample: PatternSet) -> float:
    """Training score of a genome without building a network object."""
    return _Evaluator(layout, sample)(genome)


def evolve(config: EvolutionConfig) -> RunRecord:
    """Run the GA until a perfect training score or ``config.generations``.

    Each generation the fittest individual is carried over unchanged (when
    elitism is on) and the rest are bred in pairs: two binary tournaments,
    crossover with probability ``crossover_rate``, then Poisson mutation of
    each child. The training sample is drawn once and fixed for the run.
    """
    spec = config.network
    sample_ss, init_ss, ga_ss = np.random.SeedSequence(config.seed).spawn(3)
    sample = draw_sample(config.task, SampleSpec(config.sample_size, config.task.space_size),
                         np.random.default_rng(sample_ss))
    init_rng = np.random.default_rng(init_ss)
    order = random_order(spec, init_rng) if spec.feedforward else None
    layout = Layout(spec.n_nodes, spec.n_inputs, spec.n_outputs, order)
    pop = [encode(build_random_network(spec, init_rng, order))
           for _ in range(config.population)]

    ids_off = np.zeros(len(pop) + 1, np.int64)
    bits_off = np.zeros(len(pop) + 1, np.int64)
    np.cumsum([g.ids.size for g in pop], out=ids_off[1:])
    np.cumsum([g.bits.size for g in pop], out=bits_off[1:])
    order_arr, by_rank = _order_arrays(layout)
    topo = (topological_nodes(order, spec.n_inputs) if spec.feedforward
            else np.empty(0, np.int64))
    history, ids, bits, f = _ga.run_ga(
        np.uint64(draw_key(np.random.default_rng(ga_ss))),
        np.concatenate([g.ids for g in pop]), ids_off,
        np.concatenate([g.bits for g in pop]), bits_off,
        order_arr, by_rank, topo, spec.n_nodes, spec.n_inputs, spec.n_outputs,
        sample.inputs, sample.targets, sample.scorer is Scorer.POPCOUNT,
        config.generations, float(config.crossover_rate),
        float(config.mutation_rate), config.elitism)

    perfect = 1.0 - 0.5 / (len(sample) * spec.n_outputs)
    best = decode(Genome(ids, bits), layout)
    return RunRecord(
        f_final=float(f),
        g_final=generalization(best, config.task),
        generations=len(history) - 1,
        terminated_by=Termination.PERFECT if f >= perfect else Termination.GMAX,
        best_f=history[:, 0].tolist(), mean_f=history[:, 1].tolist(),
        std_f=history[:, 2].tolist(), s=config.s, seed=config.seed,
        elitism=config.elitism)
