"""Learning and training measures over many GA runs, and their areas over s."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from rbnlab.evolution import RunRecord

MEASURES = ("alpha", "alpha_prime", "delta", "beta", "beta_prime")


def perfection_tolerance(m: int, n_outputs: int = 1) -> float:
    """Half the smallest nonzero error a score over ``m * n_outputs`` bits can carry."""
    return 1.0 / (2 * m * n_outputs)


def is_perfect(score: float, m: int, n_outputs: int = 1) -> bool:
    return score >= 1.0 - perfection_tolerance(m, n_outputs)


@dataclass(frozen=True)
class MeasurePoint:
    """The five run statistics at one sample fraction ``s``.

    ``delta`` is None when no run trained perfectly.
    """

    s: float
    r: int
    alpha: float
    alpha_prime: float
    delta: Optional[float]
    beta: float
    beta_prime: float

    def get(self, measure: str) -> Optional[float]:
        if measure not in MEASURES:
            raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")
        return getattr(self, measure)


def aggregate(runs: Sequence[RunRecord], s: Optional[float] = None, m: Optional[int] = None,
              space: Optional[int] = None, n_outputs: int = 1) -> MeasurePoint:
    """Combine runs that share one sample fraction into a :class:`MeasurePoint`.

    Perfect scores are recognised with a tolerance of half an error quantum.
    The training quantum is ``1/(m*O)`` and the generalisation quantum
    ``1/(space*O)``. When ``m`` or ``space`` is omitted the scores are
    taken to be exact and compared with 1 directly.

    ``delta`` counts runs with both scores perfect among those with a
    perfect training score.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to aggregate")
    if s is None:
        s = runs[0].s
    if any(not math.isclose(r.s, s) for r in runs):
        raise ValueError("runs do not share the sample fraction")
    f = np.array([r.f_final for r in runs], dtype=float)
    g = np.array([r.g_final for r in runs], dtype=float)
    f_ok = f >= 1.0 - (perfection_tolerance(m, n_outputs) if m else 0.0)
    g_ok = g >= 1.0 - (perfection_tolerance(space, n_outputs) if space else 0.0)
    n = len(runs)
    hits = int(f_ok.sum())
    return MeasurePoint(
        s=float(s), r=n,
        alpha=hits / n,
        alpha_prime=int(g_ok.sum()) / n,
        delta=int((f_ok & g_ok).sum()) / hits if hits else None,
        beta=float(f.mean()),
        beta_prime=float(g.mean()),
    )


@dataclass(frozen=True)
class Area:
    """Trapezoid area of one measure and how many undefined points were skipped."""

    value: float
    dropped: int = 0


def trapezoid(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))


def cumulative(curve: Sequence[MeasurePoint], measure: str) -> Area:
    """Trapezoid area under ``measure`` against ``s``.

    Points where the measure is undefined are removed before integrating,
    so their neighbours are joined directly.
    """
    pts = sorted(curve, key=lambda p: p.s)
    for a, b in zip(pts, pts[1:]):
        if a.s == b.s:
            raise ValueError("duplicate s in curve")
    defined = [(p.s, p.get(measure)) for p in pts if p.get(measure) is not None]
    if len(defined) < 2:
        raise ValueError(f"need at least 2 defined points of {measure}, have {len(defined)}")
    xs, ys = zip(*defined)
    return Area(trapezoid(xs, ys), len(pts) - len(defined))


def first_reaching(curve: Sequence[MeasurePoint], measure: str,
                   level: float) -> Optional[float]:
    """Smallest ``s`` at which ``measure`` is defined and at least ``level``."""
    for p in sorted(curve, key=lambda p: p.s):
        v = p.get(measure)
        if v is not None and v >= level:
            return p.s
    return None


def sample_sizes(space: int, max_points: int = 32) -> List[int]:
    """Sample sizes ``m`` for a curve: every size, or ``max_points`` spread to ``space``."""
    if space < 1 or max_points < 2:
        raise ValueError("need space >= 1 and max_points >= 2")
    if space <= max_points:
        return list(range(1, space + 1))
    return sorted({int(round(x)) for x in np.linspace(1, space, max_points)})


def curve_to_csv(curve: Iterable[MeasurePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "r", *MEASURES])
    for p in curve:
        w.writerow([repr(p.s), p.r, repr(p.alpha), repr(p.alpha_prime),
                    "" if p.delta is None else repr(p.delta),
                    repr(p.beta), repr(p.beta_prime)])
    return buf.getvalue()


def curve_from_csv(text: str) -> List[MeasurePoint]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(MeasurePoint(
            s=float(row["s"]), r=int(row["r"]), alpha=float(row["alpha"]),
            alpha_prime=float(row["alpha_prime"]),
            delta=float(row["delta"]) if row["delta"] else None,
            beta=float(row["beta"]), beta_prime=float(row["beta_prime"])))
    return out
