"""Ready-made experiment configs per figure, at ``full`` and ``desk`` scale.

Desk presets divide run and sample counts by roughly ten and thin the
sample-fraction grids. Expect wider scatter: with ``r`` runs a measured
probability has a standard error near ``sqrt(p(1-p)/r)``, so about 0.05 at
``r = 100`` versus 0.02 at ``r = 700``.
"""

from __future__ import annotations

from typing import Dict, Tuple

from rbnlab.harness import ExperimentConfig

K_COARSE = [0.5 * j for j in range(1, 17)]
_FF_GA = dict(feedforward=True, population=50, generations=3000, crossover=0.6, mutation=0.3)
_RBN_GA = dict(population=50, generations=500, crossover=0.7, mutation=0.0)

_FULL: Dict[str, dict] = {
    "fig2": dict(kind="entropy-scan", n_values=[20, 100], k_values=K_COARSE, i_values=[3, 5],
                 samples=10_000),
    "fig3": dict(kind="max-entropy-scaling",
                 n_values=[5, 10, 20, 50, 100, 200, 500, 1000, 2000], k_values=K_COARSE,
                 i_values=[3], samples=10_000, refine_step=0.1),
    "fig4-and": dict(kind="measure-curves", task="bitwise-and", n_values=[50], k_values=[2.0],
                     i_values=[4, 6], runs=700, **_FF_GA),
    "fig4": dict(kind="measure-curves", n_values=[50], k_values=[2.0], i_values=[3, 4, 5],
                 runs=700, **_FF_GA),
    "fig5": dict(kind="measure-curves", n_values=[20], k_values=[2.0], i_values=[3, 4, 5, 7],
                 runs=400, **_RBN_GA),
    "fig5-mapping": dict(kind="measure-curves", task="mapping", n_values=[40], k_values=[2.0],
                         i_values=[3, 4, 5], runs=400, **_RBN_GA),
    "fig6": dict(kind="cumulative-landscape", n_values=[15],
                 k_values=[1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.5, 5.0], i_values=[5], runs=400,
                 **_RBN_GA),
    "fig7": dict(kind="cumulative-landscape", n_values=[15],
                 k_values=[round(1.0 + 0.1 * j, 1) for j in range(40)], i_values=[3],
                 runs=400, **_RBN_GA),
    "fig10": dict(kind="cumulative-landscape", n_values=[10, 15, 20, 30, 40, 50],
                  k_values=[1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0], i_values=[3],
                  runs=400, **_RBN_GA),
    "fig12": dict(kind="evolve-sweep", n_values=[20], k_values=[1.0, 1.5, 2.0, 2.5, 3.0],
                  i_values=[3, 5], s_values=[1.0], runs=400, history=True, **_RBN_GA),
}
# the cumulative figures reuse the grids their curves come from
_FULL["fig8"] = dict(_FULL["fig7"], i_values=[3, 5])
_FULL["fig9"] = _FULL["fig8"]
_FULL["fig11"] = _FULL["fig10"]

_DESK_CHANGES: Dict[str, dict] = {
    "fig2": dict(samples=1000),
    "fig3": dict(n_values=[5, 10, 20, 50, 100, 200, 500], samples=1000),
    "fig4-and": dict(runs=100, s_points=9),
    "fig4": dict(runs=100, i_values=[3, 5], s_points=9),
    "fig5": dict(runs=40, i_values=[3, 5], s_points=9),
    "fig5-mapping": dict(runs=40, s_points=9),
    "fig6": dict(runs=40, s_points=9),
    "fig7": dict(runs=40, k_values=[1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]),
    "fig8": dict(runs=40, k_values=[1.0, 2.0, 3.0, 4.0], s_points=9),
    "fig9": dict(runs=40, k_values=[1.0, 2.0, 3.0, 4.0], s_points=9),
    "fig10": dict(runs=40, n_values=[10, 20, 40], k_values=[1.0, 2.0, 3.0, 4.0], s_points=9),
    "fig11": dict(runs=40, n_values=[10, 20, 40], k_values=[1.0, 2.0, 3.0, 4.0], s_points=9),
    "fig12": dict(runs=40),
}

SCALES = ("full", "desk")


def preset_names() -> Tuple[str, ...]:
    return tuple(f"{fig}:{scale}" for fig in _FULL for scale in SCALES)


def preset_values(name: str) -> dict:
    """Config values of preset ``fig:scale`` (scale defaults to ``desk``)."""
    fig, _, scale = name.partition(":")
    scale = scale or "desk"
    if fig not in _FULL or scale not in SCALES:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    values = dict(_FULL[fig])
    if scale == "desk":
        values.update(_DESK_CHANGES[fig])
    return values


def preset(name: str, seed: int = 1, **overrides) -> ExperimentConfig:
    values = preset_values(name)
    values.update(seed=seed, **overrides)
    return ExperimentConfig(**values)
