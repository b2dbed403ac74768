"""Functional entropy of random network ensembles and its peak connectivity."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from rbnlab import _kernels
from rbnlab.network import (ENUMERATION_CAP, InputSpaceTooLarge, NetworkSpec, Wiring,
                            input_space)
from rbnlab.seeding import derive_seed

DEFAULT_K_GRID = tuple(np.round(np.arange(0.5, 8.0001, 0.5), 10))
_CHUNK = 4096


@dataclass
class FunctionHistogram:
    """How often each truth-table key was realised in a sample of networks."""

    counts: Dict[int, int] = field(default_factory=dict)

    @property
    def samples(self) -> int:
        return sum(self.counts.values())

    def update(self, keys: Iterable[int]) -> None:
        for k, c in Counter(keys).items():
            self.counts[k] = self.counts.get(k, 0) + c

    def probabilities(self) -> np.ndarray:
        c = np.fromiter(self.counts.values(), dtype=float, count=len(self.counts))
        return c / c.sum()


def entropy(hist: FunctionHistogram) -> float:
    """Plug-in Shannon entropy in bits of the observed frequencies."""
    if hist.samples < 1:
        raise ValueError("empty histogram")
    p = hist.probabilities()
    return float(-np.sum(p * np.log2(p)) + 0.0)


def bootstrap_se(hist: FunctionHistogram, reps: int = 1000,
                 rng: Optional[np.random.Generator] = None) -> float:
    """Standard error of :func:`entropy` from multinomial resamples of ``hist``."""
    rng = np.random.default_rng(rng)
    n = hist.samples
    p = hist.probabilities()
    draws = rng.multinomial(n, p, size=reps).astype(float) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(draws > 0, draws * np.log2(draws), 0.0)
    return float(np.std(-terms.sum(axis=1), ddof=1))


def _words_to_ints(words: np.ndarray) -> List[int]:
    if words.shape[1] == 1:
        return [int(w) for w in words[:, 0]]
    out = []
    for row in words:
        v = 0
        for w in row:
            v = (v << 64) | int(w)
        out.append(v)
    return out


def ensemble_keys(spec: NetworkSpec, seed: int, start: int, count: int) -> np.ndarray:
    """Network keys for sample indices ``start .. start+count-1``."""
    base = derive_seed(seed, "ensemble", spec.n_nodes, float(spec.k), spec.n_inputs,
                       spec.n_outputs, spec.wiring.value, spec.feedforward)
    return _kernels.indexed_keys(np.uint64(base), start, count)


def fingerprints(spec: NetworkSpec, keys: np.ndarray,
                 cap: int = ENUMERATION_CAP) -> List[int]:
    """Truth-table keys of the networks named by ``keys``.

    Each entry equals ``realized_function(network_from_key(spec, key))``;
    the tables are read on the fly so high in-degrees cost no memory.
    """
    if (1 << spec.n_inputs) * spec.n_outputs > cap:
        raise InputSpaceTooLarge(f"2**{spec.n_inputs} inputs exceed cap {cap}")
    words = _kernels.fingerprint_ensemble(
        np.ascontiguousarray(keys, dtype=np.uint64), spec.n_nodes, spec.n_inputs,
        spec.n_outputs, spec.n_links, spec.wiring is Wiring.BINOMIAL, spec.feedforward,
        input_space(spec.n_inputs), 2 * spec.n_nodes, spec.n_nodes)
    return _words_to_ints(words)


def sample_ensemble(n_nodes: int, k: float, n_inputs: int, samples: int, seed: int = 0,
                    wiring: Wiring = Wiring.EXACT, n_outputs: int = 1,
                    feedforward: bool = False, cap: int = ENUMERATION_CAP) -> FunctionHistogram:
    """Histogram of functions realised by ``samples`` random networks.

    Sample ``j`` depends only on ``seed``, the ensemble parameters and
    ``j``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    spec = NetworkSpec(n_nodes, k, n_inputs, n_outputs, Wiring(wiring), feedforward)
    hist = FunctionHistogram()
    for start in range(0, samples, _CHUNK):
        count = min(_CHUNK, samples - start)
        hist.update(fingerprints(spec, ensemble_keys(spec, seed, start, count), cap))
    return hist


@dataclass(frozen=True)
class LandscapeCell:
    n_nodes: int
    k: float
    n_inputs: int
    samples: int
    entropy_bits: float


def entropy_cell(n_nodes: int, k: float, n_inputs: int, samples: int, seed: int = 0,
                 wiring: Wiring = Wiring.EXACT) -> LandscapeCell:
    h = entropy(sample_ensemble(n_nodes, k, n_inputs, samples, seed, wiring))
    return LandscapeCell(n_nodes, float(k), n_inputs, samples, h)


def landscape_to_csv(cells: Iterable[LandscapeCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "K", "I", "samples", "entropy_bits"])
    for c in cells:
        w.writerow([c.n_nodes, repr(c.k), c.n_inputs, c.samples, repr(c.entropy_bits)])
    return buf.getvalue()


def argmax_lowest(ks: Sequence[float], values: Sequence[float]) -> int:
    """Index of the largest value; among equal values the smallest ``k`` wins."""
    best = None
    for i, (k, v) in enumerate(zip(ks, values)):
        if best is None or v > values[best] or (v == values[best] and k < ks[best]):
            best = i
    return best


def refinement_grid(k_peak: float, step: float = 0.1, half_width: float = 0.5) -> List[float]:
    """Grid of spacing ``step`` within ``half_width`` of ``k_peak``, kept positive."""
    n = int(round(half_width / step))
    ks = [round(k_peak + i * step, 10) for i in range(-n, n + 1)]
    return [k for k in ks if k > 0]


@dataclass(frozen=True)
class PeakSearch:
    """Outcome of a max-entropy search over ``K`` at fixed ``N``."""

    n_nodes: int
    k_star: float
    s_star: float
    cells: Tuple[LandscapeCell, ...]


def max_entropy_k(n_nodes: int, k_grid: Sequence[float] = DEFAULT_K_GRID, n_inputs: int = 3,
                  samples: int = 10_000, seed: int = 0, wiring: Wiring = Wiring.EXACT,
                  refine_step: Optional[float] = None) -> PeakSearch:
    """Connectivity with the highest ensemble entropy.

    With ``refine_step`` the coarse peak is re-scanned at that spacing over
    one coarse step on either side. Ties go to the lower ``K``.
    """
    k_grid = sorted(float(k) for k in k_grid)
    if not k_grid:
        raise ValueError("empty K grid")
    cells = {k: entropy_cell(n_nodes, k, n_inputs, samples, seed, wiring) for k in k_grid}
    if refine_step:
        ks = list(cells)
        k0 = ks[argmax_lowest(ks, [cells[k].entropy_bits for k in ks])]
        coarse = (k_grid[1] - k_grid[0]) if len(k_grid) > 1 else refine_step
        for k in refinement_grid(k0, refine_step, coarse):
            if k not in cells:
                cells[k] = entropy_cell(n_nodes, k, n_inputs, samples, seed, wiring)
    ks = sorted(cells)
    i = argmax_lowest(ks, [cells[k].entropy_bits for k in ks])
    return PeakSearch(n_nodes, ks[i], cells[ks[i]].entropy_bits, tuple(cells[k] for k in ks))


# -- power law ---------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    """``K = a * N**b + c`` fitted by least squares."""

    a: float
    b: float
    c: float
    residual: float
    n_points: int
    degenerate: bool = False
    converged: bool = True

    def predict(self, n) -> np.ndarray:
        return self.a * np.power(np.asarray(n, dtype=float), self.b) + self.c

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PowerLawFit":
        return cls(**json.loads(text))


def _sse(params, n, k) -> float:
    a, b, c = params
    return float(np.sum((a * n ** b + c - k) ** 2))


def _grid_candidate(n, k, c_grid):
    best = None
    for c in c_grid:
        lr = stats.linregress(np.log(n), np.log(k - c))
        params = (math.exp(lr.intercept), lr.slope, c)
        err = _sse(params, n, k)
        if best is None or err < best[1]:
            best = (params, err)
    return best


def fit_power_law(points: Sequence[Tuple[float, float]], c_steps: int = 400) -> PowerLawFit:
    """Fit ``K = a N^b + c`` to ``(N, K)`` points.

    A grid over ``c`` (each candidate fitted by log-log regression) picks a
    start for a least-squares refinement of all three coefficients. The
    refinement is kept only if it lowers the squared error.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (N, K) pairs")
    n, k = pts[:, 0], pts[:, 1]
    if len(np.unique(n)) < 2:
        raise ValueError("degenerate data: need at least two distinct N")
    if len(pts) < 4:
        raise ValueError("need at least 4 points")
    if np.any(n <= 0):
        raise ValueError("N must be positive")
    span = float(k.max() - k.min())
    if span <= 1e-12 * max(1.0, abs(float(k.max()))):
        return PowerLawFit(0.0, 0.0, float(k.mean()), _sse((0.0, 0.0, k.mean()), n, k),
                           len(pts), degenerate=True)

    floor = float(k.min())
    c_grid = floor - span * np.geomspace(1e-4, 10.0, c_steps)
    start, grid_err = _grid_candidate(n, k, c_grid)
    res = optimize.least_squares(lambda p: p[0] * n ** p[1] + p[2] - k, start,
                                 method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                 max_nfev=20000)
    refined = tuple(float(x) for x in res.x)
    err = _sse(refined, n, k)
    converged = bool(res.success)
    if not converged:
        warnings.warn(f"power-law refinement did not converge: {res.message}")
    if not np.isfinite(err) or err > grid_err:
        refined, err = start, grid_err
    a, b, c = refined
    return PowerLawFit(a, b, c, err, len(pts), degenerate=False, converged=converged)
