"""Target tasks, training samples, and the fitness/generalisation scores."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from rbnlab.network import (ENUMERATION_CAP, BooleanNetwork, InputSpaceTooLarge,
                            evaluate_patterns, input_space)


class TaskName(str, enum.Enum):
    EVEN_ODD = "even-odd"
    BITWISE_AND = "bitwise-and"
    MAPPING = "mapping"


class Scorer(str, enum.Enum):
    """Per-pattern distance used by :func:`fitness`.

    ``HAMMING`` compares against the target bits. ``POPCOUNT`` accepts any
    output with the target's number of ones and scores the popcount gap;
    it is the relational reading of the mapping task.
    """

    HAMMING = "hamming"
    POPCOUNT = "popcount"


def target_even_odd(bits) -> int:
    """1 if the input has an odd number of ones."""
    return int(np.sum(np.asarray(bits, dtype=np.int64)) % 2)


def target_bitwise_and(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError("operands must have equal length")
    return a & b


def target_mapping(bits, perm) -> np.ndarray:
    """Output bit ``j`` is input bit ``perm[j]``."""
    bits = np.asarray(bits, dtype=np.uint8)
    return bits[np.asarray(perm, dtype=np.int64)]


def hamming_distance(x, y) -> int:
    x = np.asarray(x, dtype=np.uint8)
    y = np.asarray(y, dtype=np.uint8)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return int(np.count_nonzero(x != y))


@dataclass(frozen=True)
class TaskSpec:
    """A Boolean mapping from ``n_inputs`` bits to ``n_outputs`` bits.

    Build instances with :meth:`even_odd`, :meth:`bitwise_and` or
    :meth:`mapping` rather than directly.
    """

    name: TaskName
    n_inputs: int
    n_outputs: int
    perm: Optional[tuple] = None
    scorer: Scorer = Scorer.HAMMING

    def __post_init__(self):
        object.__setattr__(self, "name", TaskName(self.name))
        object.__setattr__(self, "scorer", Scorer(self.scorer))
        i, o = self.n_inputs, self.n_outputs
        if i < 1:
            raise ValueError("n_inputs must be >= 1")
        if self.name is TaskName.EVEN_ODD and o != 1:
            raise ValueError("even-odd has one output")
        if self.name is TaskName.BITWISE_AND and (i % 2 or o != i // 2):
            raise ValueError("bitwise-and needs even I and O = I/2")
        if self.name is TaskName.MAPPING:
            if o != i:
                raise ValueError("mapping needs O = I")
            if self.perm is None or sorted(self.perm) != list(range(i)):
                raise ValueError("mapping needs a permutation of the input positions")

    @classmethod
    def even_odd(cls, n_inputs: int) -> "TaskSpec":
        return cls(TaskName.EVEN_ODD, n_inputs, 1)

    @classmethod
    def bitwise_and(cls, n_inputs: int) -> "TaskSpec":
        return cls(TaskName.BITWISE_AND, n_inputs, n_inputs // 2)

    @classmethod
    def mapping(cls, n_inputs: int, perm: Optional[Sequence[int]] = None,
                rng: Optional[np.random.Generator] = None,
                scorer: Scorer = Scorer.HAMMING) -> "TaskSpec":
        """Mapping task; a random permutation is drawn from ``rng`` if none is given."""
        if perm is None:
            if rng is None:
                raise ValueError("need perm or rng")
            perm = rng.permutation(n_inputs)
        return cls(TaskName.MAPPING, n_inputs, n_inputs,
                   tuple(int(p) for p in perm), scorer)

    @classmethod
    def from_name(cls, name: str, n_inputs: int,
                  rng: Optional[np.random.Generator] = None) -> "TaskSpec":
        name = TaskName(name)
        if name is TaskName.EVEN_ODD:
            return cls.even_odd(n_inputs)
        if name is TaskName.BITWISE_AND:
            return cls.bitwise_and(n_inputs)
        return cls.mapping(n_inputs, rng=rng)

    @property
    def space_size(self) -> int:
        return 1 << self.n_inputs

    def target(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != (self.n_inputs,):
            raise ValueError(f"input must have {self.n_inputs} bits")
        if self.name is TaskName.EVEN_ODD:
            return np.array([target_even_odd(bits)], dtype=np.uint8)
        if self.name is TaskName.BITWISE_AND:
            half = self.n_inputs // 2
            return target_bitwise_and(bits[:half], bits[half:])
        return target_mapping(bits, self.perm)

    def targets(self, inputs) -> np.ndarray:
        inputs = np.atleast_2d(np.asarray(inputs, dtype=np.uint8))
        if self.name is TaskName.EVEN_ODD:
            return (inputs.sum(axis=1) % 2).astype(np.uint8)[:, None]
        if self.name is TaskName.BITWISE_AND:
            half = self.n_inputs // 2
            return inputs[:, :half] & inputs[:, half:]
        return inputs[:, list(self.perm)]

    def full_patterns(self, cap: int = ENUMERATION_CAP) -> "PatternSet":
        if self.space_size * self.n_outputs > cap:
            raise InputSpaceTooLarge(f"2**{self.n_inputs} inputs exceed cap {cap}")
        inputs = input_space(self.n_inputs)
        return PatternSet(inputs, self.targets(inputs), self.scorer)


@dataclass(frozen=True)
class SampleSpec:
    """Training-sample size ``m`` out of an input space of ``space`` patterns."""

    m: int
    space: int
    seed: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.m <= self.space:
            raise ValueError(f"need 1 <= m <= {self.space}, got m={self.m}")

    @property
    def s(self) -> float:
        return self.m / self.space

    @classmethod
    def from_fraction(cls, task: TaskSpec, s: float, seed: Optional[int] = None) -> "SampleSpec":
        m = int(round(s * task.space_size))
        return cls(max(1, min(m, task.space_size)), task.space_size, seed)


@dataclass(frozen=True, eq=False)
class PatternSet:
    """Distinct input patterns paired with their targets."""

    inputs: np.ndarray
    targets: np.ndarray
    scorer: Scorer = Scorer.HAMMING

    def __post_init__(self):
        inputs = np.ascontiguousarray(np.atleast_2d(self.inputs), dtype=np.uint8)
        targets = np.ascontiguousarray(np.atleast_2d(self.targets), dtype=np.uint8)
        if len(inputs) != len(targets):
            raise ValueError("inputs and targets differ in length")
        if len(np.unique(inputs, axis=0)) != len(inputs):
            raise ValueError("duplicate input pattern")
        inputs.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "scorer", Scorer(self.scorer))

    def __len__(self):
        return len(self.inputs)

    def __eq__(self, other):
        if not isinstance(other, PatternSet):
            return NotImplemented
        return (np.array_equal(self.inputs, other.inputs)
                and np.array_equal(self.targets, other.targets)
                and self.scorer == other.scorer)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["input_bits", "target_bits"])
        for x, y in zip(self.inputs, self.targets):
            w.writerow(["".join(map(str, x)), "".join(map(str, y))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, scorer: Scorer = Scorer.HAMMING) -> "PatternSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty pattern file")
        inputs = np.array([[int(c) for c in r["input_bits"]] for r in rows], dtype=np.uint8)
        targets = np.array([[int(c) for c in r["target_bits"]] for r in rows], dtype=np.uint8)
        return cls(inputs, targets, scorer)


def draw_sample(task: TaskSpec, spec: SampleSpec,
                rng: Optional[np.random.Generator] = None) -> PatternSet:
    """``spec.m`` distinct inputs drawn uniformly without replacement.

    Uses ``rng`` if given, otherwise a generator seeded from ``spec.seed``.
    Patterns are returned in ascending input order.
    """
    if spec.space != task.space_size:
        raise ValueError("sample space does not match the task's input space")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    idx = np.sort(rng.choice(task.space_size, size=spec.m, replace=False))
    shifts = np.arange(task.n_inputs - 1, -1, -1)
    inputs = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
    return PatternSet(inputs, task.targets(inputs), task.scorer)


def score(outputs, patterns: PatternSet) -> float:
    """``1 - mean(d_j / O)`` for network outputs already computed."""
    outputs = np.asarray(outputs, dtype=np.uint8)
    if len(patterns) == 0:
        raise ValueError("empty pattern set")
    if outputs.shape != patterns.targets.shape:
        raise ValueError("outputs do not match the pattern targets")
    n_out = patterns.targets.shape[1]
    if patterns.scorer is Scorer.HAMMING:
        dist = np.count_nonzero(outputs != patterns.targets, axis=1)
    else:
        dist = np.abs(outputs.sum(axis=1, dtype=np.int64)
                      - patterns.targets.sum(axis=1, dtype=np.int64))
    # summed as integers so the perfect case is exactly 1.0
    return 1.0 - int(dist.sum()) / (len(patterns) * n_out)


def fitness(net: BooleanNetwork, sample: PatternSet, **kwargs) -> float:
    """Training score of ``net`` on ``sample``, in [0, 1]."""
    if len(sample) == 0:
        raise ValueError("empty pattern set")
    if sample.inputs.shape[1] != net.n_inputs or sample.targets.shape[1] != net.n_outputs:
        raise ValueError("task dimensions do not match the network")
    return score(evaluate_patterns(net, sample.inputs, **kwargs), sample)


def generalization(net: BooleanNetwork, task: TaskSpec,
                   cap: int = ENUMERATION_CAP, **kwargs) -> float:
    """Score of ``net`` over the task's entire input space."""
    return fitness(net, task.full_patterns(cap), **kwargs)
