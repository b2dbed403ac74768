"""Experiment configs, seeded grid execution, result files and figure tables.

An experiment is a grid of cells. Each finished cell is written to its own
file under ``cells/`` (atomically), so an interrupted sweep resumes at the
first missing cell. The combined outputs are then rebuilt from the cell
files in grid order, which makes them independent of worker count and of
how often the sweep was resumed. ``manifest.json`` is written last.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import enum
import hashlib
import io
import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from rbnlab import __version__
from rbnlab.entropy import (LandscapeCell, PowerLawFit, entropy_cell, fit_power_law,
                            landscape_to_csv, max_entropy_k)
from rbnlab.evolution import EvolutionConfig, RunRecord, evolve
from rbnlab.metrics import MEASURES, MeasurePoint, aggregate, cumulative, sample_sizes
from rbnlab.network import NetworkSpec, Wiring
from rbnlab.seeding import derive_seed
from rbnlab.tasks import Scorer, TaskName, TaskSpec

OUTPUT_ROOT_ENV = "RBNLAB_OUTPUT_ROOT"
LONG_TRANSIENT_K = 5.0


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ResumeMismatch(RuntimeError):
    """Existing partial outputs were produced by a different configuration."""


class ExperimentKind(str, enum.Enum):
    ENTROPY_SCAN = "entropy-scan"
    MAX_ENTROPY_SCALING = "max-entropy-scaling"
    EVOLVE_SWEEP = "evolve-sweep"
    MEASURE_CURVES = "measure-curves"
    CUMULATIVE_LANDSCAPE = "cumulative-landscape"

    @property
    def evolves(self) -> bool:
        return self in (ExperimentKind.EVOLVE_SWEEP, ExperimentKind.MEASURE_CURVES,
                        ExperimentKind.CUMULATIVE_LANDSCAPE)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's result files.

    ``output`` and worker count are excluded from :meth:`config_hash`.
    Sample sizes come from ``s_values`` (fractions of the input space) when
    given, otherwise from ``s_points`` sizes spread over ``1..2**I``.
    """

    kind: ExperimentKind
    seed: int
    n_values: Tuple[int, ...]
    k_values: Tuple[float, ...]
    i_values: Tuple[int, ...]
    output: Optional[str] = None
    task: TaskName = TaskName.EVEN_ODD
    scorer: Scorer = Scorer.HAMMING
    wiring: Wiring = Wiring.EXACT
    feedforward: bool = False
    samples: int = 10_000
    refine_step: float = 0.1
    runs: int = 100
    population: int = 50
    generations: int = 500
    crossover: float = 0.7
    mutation: float = 0.0
    elitism: bool = True
    s_values: Tuple[float, ...] = ()
    s_points: int = 32
    history: bool = False

    def __post_init__(self):
        def fix(name, conv):
            try:
                object.__setattr__(self, name, conv(getattr(self, name)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(name, str(exc)) from None

        fix("kind", ExperimentKind)
        fix("task", TaskName)
        fix("scorer", Scorer)
        fix("wiring", Wiring)
        fix("n_values", lambda v: tuple(int(x) for x in v))
        fix("k_values", lambda v: tuple(float(x) for x in v))
        fix("i_values", lambda v: tuple(int(x) for x in v))
        fix("s_values", lambda v: tuple(float(x) for x in v))
        self.validate()

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("seed", "a master seed is required")
        for name in ("n_values", "k_values", "i_values"):
            if not getattr(self, name):
                raise ConfigError(name, "range is empty")
        if self.kind is ExperimentKind.MAX_ENTROPY_SCALING and len(self.k_values) < 1:
            raise ConfigError("k_values", "range is empty")
        if any(n < 1 for n in self.n_values):
            raise ConfigError("n_values", "N must be >= 1")
        if any(k <= 0 for k in self.k_values):
            raise ConfigError("k_values", "K must be > 0")
        if any(i < 1 for i in self.i_values):
            raise ConfigError("i_values", "I must be >= 1")
        if self.task is TaskName.BITWISE_AND and any(i % 2 for i in self.i_values):
            raise ConfigError("i_values", "bitwise-and needs even I")
        if self.samples < 1:
            raise ConfigError("samples", "must be >= 1")
        if self.refine_step < 0:
            raise ConfigError("refine_step", "must be >= 0")
        if self.runs < 1:
            raise ConfigError("runs", "must be >= 1")
        if self.population < 2:
            raise ConfigError("population", "must be >= 2")
        if self.generations < 0:
            raise ConfigError("generations", "must be >= 0")
        if not 0 <= self.crossover <= 1:
            raise ConfigError("crossover", "must be in [0, 1]")
        if self.mutation < 0:
            raise ConfigError("mutation", "must be >= 0")
        if any(not 0 < s <= 1 for s in self.s_values):
            raise ConfigError("s_values", "fractions must be in (0, 1]")
        if self.s_points < 2:
            raise ConfigError("s_points", "must be >= 2")
        if self.kind.evolves:
            outs = 1 if self.task is TaskName.EVEN_ODD else None
            for n in self.n_values:
                for i in self.i_values:
                    o = outs or (i // 2 if self.task is TaskName.BITWISE_AND else i)
                    if o > n:
                        raise ConfigError("n_values", f"N={n} is smaller than O={o}")

    # -- (de)serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    def to_text(self) -> str:
        lines = []
        for key, v in self.to_dict().items():
            if v is None:
                continue
            if isinstance(v, list):
                v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- grid -----------------------------------------------------------------

    def task_spec(self, n_inputs: int) -> TaskSpec:
        if self.task is TaskName.MAPPING:
            rng = np.random.default_rng(derive_seed(self.seed, "perm", n_inputs))
            return TaskSpec.mapping(n_inputs, rng=rng, scorer=self.scorer)
        return dataclasses.replace(TaskSpec.from_name(self.task, n_inputs), scorer=self.scorer)

    def sample_sizes(self, n_inputs: int) -> List[int]:
        space = 1 << n_inputs
        if self.s_values:
            return sorted({max(1, min(space, int(round(s * space)))) for s in self.s_values})
        return sample_sizes(space, self.s_points)

    def cells(self) -> List[tuple]:
        if self.kind is ExperimentKind.ENTROPY_SCAN:
            return list(itertools.product(self.n_values, self.k_values, self.i_values))
        if self.kind is ExperimentKind.MAX_ENTROPY_SCALING:
            return list(itertools.product(self.n_values, self.i_values))
        return [(n, k, i, m) for n, k, i in
                itertools.product(self.n_values, self.k_values, self.i_values)
                for m in self.sample_sizes(i)]


_INT_FIELDS = {"seed", "samples", "runs", "population", "generations", "s_points"}
_FLOAT_FIELDS = {"refine_step", "crossover", "mutation"}
_BOOL_FIELDS = {"feedforward", "elitism", "history"}
_LIST_FIELDS = {"n_values", "k_values", "i_values", "s_values"}
FIELDS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def _parse_list(text: str) -> List[str]:
    """Comma list; ``a:b:step`` expands to an inclusive arithmetic range."""
    out = []
    for item in (x.strip() for x in text.split(",")):
        if not item:
            continue
        if ":" in item:
            lo, hi, step = (float(x) for x in item.split(":"))
            n = int(round((hi - lo) / step))
            out.extend(repr(round(lo + j * step, 10)) for j in range(n + 1))
        else:
            out.append(item)
    return out


def parse_value(key: str, text: str):
    """Convert one config value from its text form."""
    if key not in FIELDS:
        raise ConfigError(key, "unknown key")
    text = text.strip()
    try:
        if key in _LIST_FIELDS:
            return [float(x) if key in ("k_values", "s_values") else int(float(x))
                    for x in _parse_list(text)]
        if key in _INT_FIELDS:
            return int(text)
        if key in _FLOAT_FIELDS:
            return float(text)
        if key in _BOOL_FIELDS:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"not a boolean: {text!r}")
            return low in ("true", "1", "yes")
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None
    return text


def parse_config_text(text: str) -> Dict[str, object]:
    """Key-value pairs (``key = value``, ``#`` comments) to typed values."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    return {k: parse_value(k, v) for k, v in parser["experiment"].items()}


def build_config(values: Dict[str, object]) -> ExperimentConfig:
    for key in ("kind", "seed", "n_values", "k_values", "i_values"):
        if values.get(key) is None:
            raise ConfigError(key, "missing")
    unknown = set(values) - set(FIELDS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    return ExperimentConfig(**values)


def load_config(path, overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text())
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(values)


# -- cell execution ------------------------------------------------------------

def _cell_name(index: int, cell: tuple) -> str:
    coords = "_".join(str(c) for c in cell)
    return f"{index:05d}_{coords}.jsonl"


def run_cell(config: ExperimentConfig, cell: tuple) -> List[dict]:
    """Compute one grid cell; returns JSON-ready records."""
    kind = config.kind
    if kind is ExperimentKind.ENTROPY_SCAN:
        n, k, i = cell
        c = entropy_cell(n, k, i, config.samples,
                         derive_seed(config.seed, "entropy", n, float(k), i), config.wiring)
        return [dataclasses.asdict(c)]
    if kind is ExperimentKind.MAX_ENTROPY_SCALING:
        n, i = cell
        peak = max_entropy_k(n, config.k_values, i, config.samples,
                             derive_seed(config.seed, "scaling", n, i), config.wiring,
                             config.refine_step or None)
        return [{"peak": {"N": n, "I": i, "K_star": peak.k_star, "entropy_bits": peak.s_star}}] + \
            [dataclasses.asdict(c) for c in peak.cells]
    n, k, i, m = cell
    task = config.task_spec(i)
    spec = NetworkSpec(n, k, i, task.n_outputs, config.wiring, config.feedforward)
    records = []
    for run in range(config.runs):
        ec = EvolutionConfig(spec, task, m, config.population, config.generations,
                             config.crossover, config.mutation, config.elitism,
                             derive_seed(config.seed, "run", n, float(k), i, m, run))
        rec = json.loads(evolve(ec).to_json())
        if not config.history:
            for key in ("best_f", "mean_f", "std_f"):
                rec.pop(key)
        records.append({"N": n, "K": float(k), "I": i, "m": m, "run": run, **rec})
    return records


def _cell_job(config_dict: dict, cell: tuple) -> Tuple[tuple, str]:
    config = ExperimentConfig(**config_dict)
    lines = [json.dumps(r, separators=(",", ":"), sort_keys=True) for r in run_cell(config, cell)]
    return cell, "\n".join(lines) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def resolve_output(config: ExperimentConfig) -> Path:
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "results"))
    if config.output is None:
        return root / f"{config.kind.value}-{config.config_hash()[:12]}"
    out = Path(config.output)
    return out if out.is_absolute() else root / out


@dataclass
class ResultManifest:
    config_hash: str
    version: str
    files: Dict[str, str]
    wall_time: float
    kind: str
    directory: str = ""

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d.pop("directory")
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "ResultManifest":
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        d = json.loads(path.read_text())
        return cls(directory=str(path.parent), **d)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   progress=None) -> ResultManifest:
    """Execute (or resume) ``config`` and write its results and manifest.

    Raises :class:`ResumeMismatch` if the output directory holds partial
    results of a different configuration.
    """
    config.validate()
    start = time.perf_counter()
    out = resolve_output(config)
    chash = config.config_hash()
    lock = out / "config.lock"
    if lock.exists():
        if lock.read_text().strip() != chash:
            raise ResumeMismatch(f"{out} holds results of config {lock.read_text().strip()[:12]}")
    else:
        if out.exists() and any(out.iterdir()):
            raise ResumeMismatch(f"{out} is not empty and has no config lock")
        (out / "cells").mkdir(parents=True, exist_ok=True)
        _write_atomic(lock, chash + "\n")
        _write_atomic(out / "config.txt", config.to_text())
    cells_dir = out / "cells"
    cells = config.cells()
    names = {cell: _cell_name(j, cell) for j, cell in enumerate(cells)}
    todo = [c for c in cells if not (cells_dir / names[c]).exists()]

    def done(cell, text):
        _write_atomic(cells_dir / names[cell], text)
        if progress:
            progress(cell)

    cfg = config.to_dict()
    if workers <= 1 or len(todo) <= 1:
        for cell in todo:
            done(*_cell_job(cfg, cell))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_cell_job, cfg, cell) for cell in todo]
            for fut in as_completed(futures):
                done(*fut.result())

    records = {c: [json.loads(line) for line in (cells_dir / names[c]).read_text().splitlines()]
               for c in cells}
    files = _assemble(config, cells, records, out)
    files.append(_write_metadata(config, out))
    manifest = ResultManifest(chash, __version__, {f: _sha256(out / f) for f in sorted(files)},
                              round(time.perf_counter() - start, 3), config.kind.value, str(out))
    _write_atomic(out / "manifest.json", manifest.to_json())
    return manifest


def _write_metadata(config: ExperimentConfig, out: Path) -> str:
    warnings = []
    long_k = [k for k in config.k_values if k >= LONG_TRANSIENT_K]
    if long_k:
        warnings.append(f"K >= {LONG_TRANSIENT_K:g} ({', '.join(map(repr, long_k))}): "
                        "the 2N-step transient may not reach an attractor")
    if config.wiring is Wiring.BINOMIAL:
        warnings.append("binomial wiring: mean in-degree is K/2")
    meta = {
        "version": __version__,
        "config_hash": config.config_hash(),
        "config": {k: v for k, v in config.to_dict().items() if k != "output"},
        "wiring": config.wiring.value,
        "feedforward": config.feedforward,
        "elitism": config.elitism,
        "initial_state": "zeros",
        "transient_steps": "2N",
        "window_steps": "N",
        "warnings": warnings,
    }
    _write_atomic(out / "metadata.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return "metadata.json"


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else ("" if x is None else x) for x in row])
    return buf.getvalue()


def curves_from_runs(config: ExperimentConfig, cells, records) -> Dict[tuple, List[MeasurePoint]]:
    curves: Dict[tuple, List[MeasurePoint]] = {}
    for cell in cells:
        n, k, i, m = cell
        task = config.task_spec(i)
        runs = [RunRecord(r["f_final"], r["g_final"], r["generations"], r["terminated_by"],
                          s=r["s"], seed=r["seed"], elitism=r["elitism"])
                for r in records[cell]]
        point = aggregate(runs, s=m / task.space_size, m=m, space=task.space_size,
                          n_outputs=task.n_outputs)
        curves.setdefault((n, float(k), i), []).append(point)
    return curves


def _assemble(config: ExperimentConfig, cells, records, out: Path) -> List[str]:
    files = []

    def write(name, text):
        _write_atomic(out / name, text)
        files.append(name)

    kind = config.kind
    if kind is ExperimentKind.ENTROPY_SCAN:
        write("landscape.csv", landscape_to_csv(
            LandscapeCell(**records[c][0]) for c in cells))
        return files
    if kind is ExperimentKind.MAX_ENTROPY_SCALING:
        land, peaks = [], []
        for c in cells:
            peaks.append(records[c][0]["peak"])
            land.extend(LandscapeCell(**r) for r in records[c][1:])
        write("landscape.csv", landscape_to_csv(land))
        write("peaks.csv", _csv_text(["N", "I", "K_star", "entropy_bits"],
                                     [(p["N"], p["I"], p["K_star"], p["entropy_bits"])
                                      for p in peaks]))
        for i in config.i_values:
            pts = [(p["N"], p["K_star"]) for p in peaks if p["I"] == i]
            if len(pts) >= 4 and len({n for n, _ in pts}) >= 2:
                write(f"fit_I{i}.json", fit_power_law(pts).to_json() + "\n")
        return files

    write("runs.jsonl", "".join(
        json.dumps(r, separators=(",", ":"), sort_keys=True) + "\n"
        for c in cells for r in records[c]))
    if kind is ExperimentKind.EVOLVE_SWEEP:
        return files
    curves = curves_from_runs(config, cells, records)
    write("curves.csv", _csv_text(
        ["N", "K", "I", "s", "r", *MEASURES],
        [(n, k, i, p.s, p.r, p.alpha, p.alpha_prime, p.delta, p.beta, p.beta_prime)
         for (n, k, i), pts in curves.items() for p in pts]))
    rows = []
    for (n, k, i), pts in curves.items():
        for measure in MEASURES:
            try:
                area = cumulative(pts, measure)
            except ValueError:
                rows.append((n, k, i, measure, None, len(pts)))
                continue
            rows.append((n, k, i, measure, area.value, area.dropped))
    write("cumulative.csv", _csv_text(["N", "K", "I", "measure", "area", "dropped"], rows))
    return files


# -- figure tables -------------------------------------------------------------

class FigureError(ValueError):
    """The requested figure is unknown or the experiment lacks its axes."""


def _read_csv(path: Path) -> List[dict]:
    return list(csv.DictReader(io.StringIO(path.read_text())))


def _need(manifest: ResultManifest, name: str) -> Path:
    if name not in manifest.files:
        raise FigureError(f"experiment of kind {manifest.kind} has no {name}")
    return Path(manifest.directory) / name


def _distinct(rows, key) -> int:
    return len({r[key] for r in rows})


def _cumulative_table(manifest, axis, measures, names, min_axis):
    rows = _read_csv(_need(manifest, "cumulative.csv"))
    keyed = {}
    for r in rows:
        keyed.setdefault((r["N"], r["K"], r["I"]), {})[r["measure"]] = r["area"]
    if len({k[axis] for k in keyed}) < min_axis:
        raise FigureError(f"needs at least {min_axis} values on the "
                          f"{['N', 'K', 'I'][axis]} axis")
    out = []
    for (n, k, i), vals in keyed.items():
        out.append([n, k, i] + [vals.get(m, "") for m in measures])
    return ["N", "K", "I", *names], out


def _fig2(manifest):
    rows = _read_csv(_need(manifest, "landscape.csv"))
    return (["N", "K", "I", "entropy_bits"], [[r["N"], r["K"], r["I"], r["entropy_bits"]]
                                              for r in rows])


def _fig3(manifest):
    rows = _read_csv(_need(manifest, "peaks.csv"))
    if _distinct(rows, "N") < 2:
        raise FigureError("needs at least 2 values of N")
    return ["N", "I", "K_star", "entropy_bits"], [[r[k] for k in ("N", "I", "K_star",
                                                                  "entropy_bits")]
                                                  for r in rows]


def _curve_fig(columns, names, by="I"):
    def build(manifest):
        rows = _read_csv(_need(manifest, "curves.csv"))
        return ["N", "K", "I", "s", *names], [[r["N"], r["K"], r["I"], r["s"]] +
                                              [r[c] for c in columns] for r in rows]
    return build


def _fig12(manifest):
    path = _need(manifest, "runs.jsonl")
    sums: Dict[tuple, Dict[int, list]] = {}
    for line in path.read_text().splitlines():
        r = json.loads(line)
        if "std_f" not in r:
            raise FigureError("runs were recorded without per-generation history")
        per_gen = sums.setdefault((r["N"], r["K"], r["I"]), {})
        for g, sd in enumerate(r["std_f"]):
            acc = per_gen.setdefault(g, [0.0, 0])
            acc[0] += sd
            acc[1] += 1
    rows = [[n, k, i, g, acc[0] / acc[1]] for (n, k, i), per_gen in sums.items()
            for g, acc in sorted(per_gen.items())]
    return ["N", "K", "I", "gen", "mean_std_f"], rows


FIGURES = {
    "2": ("entropy of G(N,K) ensembles against K", _fig2),
    "3": ("connectivity of maximum entropy against N", _fig3),
    "4": ("learning probability against s, feedforward networks",
          _curve_fig(["delta"], ["learning_prob"])),
    "5": ("learning probability against s, recurrent networks",
          _curve_fig(["delta"], ["learning_prob"])),
    "6": ("learning probability and perfect training likelihood against s per K",
          _curve_fig(["delta", "alpha"], ["learning_prob", "training_likelihood"])),
    "7": ("all four measures against s per K",
          _curve_fig(["delta", "alpha", "beta_prime", "beta"],
                     ["learning_prob", "training_likelihood", "generalization_score",
                      "training_score"])),
    "8": ("cumulative learning probability and training likelihood against K",
          lambda m: _cumulative_table(m, 1, ["delta", "alpha"],
                                      ["cum_learning_prob", "cum_training_likelihood"], 2)),
    "9": ("cumulative generalization and training score against K",
          lambda m: _cumulative_table(m, 1, ["beta_prime", "beta"],
                                      ["cum_generalization_score", "cum_training_score"], 2)),
    "10": ("cumulative learning probability and training likelihood over (N, K)",
           lambda m: _cumulative_table(m, 0, ["delta", "alpha"],
                                       ["cum_learning_prob", "cum_training_likelihood"], 2)),
    "11": ("cumulative generalization and training score over (N, K)",
           lambda m: _cumulative_table(m, 0, ["beta_prime", "beta"],
                                       ["cum_generalization_score", "cum_training_score"], 2)),
    "12": ("population fitness standard deviation per generation, averaged over runs "
           "still running at that generation", _fig12),
}


def emit_figure_data(manifest, figure_id: str, out_path=None) -> str:
    """Plot-ready CSV for figure ``figure_id`` built from an experiment's results.

    Lines starting with ``#`` describe the table. The text is returned and,
    if ``out_path`` is given, also written there.
    """
    if not isinstance(manifest, ResultManifest):
        manifest = ResultManifest.load(manifest)
    fid = str(figure_id).lower().removeprefix("fig").strip()
    if fid not in FIGURES:
        raise FigureError(f"unknown figure id {figure_id!r}; known: {', '.join(FIGURES)}")
    title, build = FIGURES[fid]
    header, rows = build(manifest)
    text = (f"# figure {fid}: {title}\n"
            f"# columns: {','.join(header)}\n"
            f"# source: {manifest.kind} {manifest.config_hash[:12]}\n"
            + _csv_text(header, rows))
    if out_path is not None:
        Path(out_path).write_text(text)
    return text
