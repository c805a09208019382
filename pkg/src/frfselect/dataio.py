"""File formats and run configuration.

Datasets are comma-delimited text with a ``label`` column followed by one
column per frequency line (column names are the frequencies in Hz);
values are written with shortest round-trip decimal strings so a
save/load cycle is bit-exact. Run configuration is a YAML tree validated
at load time with every default resolved, and the resolved tree is echoed
into every report so a run can be reproduced from its own output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .datagen import ModalMode, SyntheticPopulationSpec
from .experiment import EvaluationReport, GridRow, GridSpec, TransferRow
from .model import TaskDataset
from .solver import SolverConfig

__all__ = [
    "DatasetFormatError",
    "ConfigError",
    "save_dataset",
    "load_dataset",
    "TaskFiles",
    "SpectrumSource",
    "TransferSource",
    "ExperimentConfig",
    "load_config",
    "write_report_bundle",
    "emit_weight_plot_table",
    "write_grid_table",
    "write_transfer_table",
    "load_report",
    "load_delimited_table",
]


class DatasetFormatError(ValueError):
    """A dataset file deviates from the expected delimited layout."""


class ConfigError(ValueError):
    """A run configuration is structurally invalid or references missing files."""


def _fmt(x: float) -> str:
    return repr(float(x))


def save_dataset(data: TaskDataset, path) -> None:
    """Write a dataset in the delimited text format (see load_dataset)."""
    header = "label," + ",".join(_fmt(f) for f in data.feature_freqs)
    lines = [header]
    for label, row in zip(data.labels, data.features):
        lines.append(str(int(label)) + "," + ",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path, task_id: str | None = None) -> TaskDataset:
    """Parse a delimited dataset file.

    Header row is ``label,<freq>,<freq>,...`` with strictly increasing
    frequency column names; labels must be the digits 0 or 1. Errors name
    the offending 1-based line.
    """
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[0] != "label":
        raise DatasetFormatError(
            f"{path}: malformed header, line 1: first column must be 'label'"
        )
    if len(header) < 2:
        raise DatasetFormatError(f"{path}: malformed header, line 1: no feature columns")
    freqs = []
    for k, name in enumerate(header[1:], start=1):
        try:
            freqs.append(float(name))
        except ValueError:
            raise DatasetFormatError(
                f"{path}: malformed header, line 1: column {k} name {name!r} is not a frequency"
            ) from None
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        raise DatasetFormatError(
            f"{path}: malformed header, line 1: frequencies must be strictly increasing"
        )

    width = len(header)
    labels: list[int] = []
    rows: list[list[float]] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != width:
            raise DatasetFormatError(
                f"{path}: inconsistent row width, line {lineno}: "
                f"expected {width} cells, got {len(cells)}"
            )
        try:
            label = int(cells[0])
        except ValueError:
            raise DatasetFormatError(
                f"{path}: non-numeric label, line {lineno}"
            ) from None
        if label not in (0, 1):
            raise DatasetFormatError(f"{path}: non-binary label, line {lineno}")
        values = []
        for k, cell in enumerate(cells[1:], start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetFormatError(
                    f"{path}: non-numeric value, line {lineno}, column {k}"
                ) from None
            if not np.isfinite(v):
                raise DatasetFormatError(
                    f"{path}: non-finite value, line {lineno}, column {k}"
                )
            values.append(v)
        labels.append(label)
        rows.append(values)
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    return TaskDataset(
        np.array(rows), np.array(labels), np.array(freqs), task_id or path.stem
    )


@dataclass(frozen=True)
class TaskFiles:
    task_id: str
    train: Path
    test: Path | None


@dataclass(frozen=True)
class SpectrumSource:
    task_id: str
    class0: Path
    class1: Path
    n_avg: int
    n_train_per_class: int
    n_test_per_class: int
    normalize: bool
    freq_min: float | None
    freq_max: float | None


@dataclass(frozen=True)
class TransferSource:
    unseen: Path | None            # dataset file, or None when synthetic
    extra_synthetic_task: bool     # generate one extra synthetic task as the unseen one


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run configuration; ``echo`` reproduces the run."""

    seed: int
    output_dir: Path
    solver: SolverConfig
    n_windows: int
    modes: tuple[str, ...]
    threads: int
    include_traces: bool
    sampling_mode: str
    n_intermediate: int
    tasks: tuple[TaskFiles, ...]
    synthetic: SyntheticPopulationSpec | None
    spectra: tuple[SpectrumSource, ...]
    grid: GridSpec | None
    grid_strategy: str
    transfer: TransferSource | None
    echo: dict = field(repr=False, default_factory=dict)


_TOP_KEYS = {
    "seed", "output_dir", "solver", "n_windows", "modes", "threads",
    "include_traces", "sampling", "tasks", "synthetic", "spectra",
    "grid", "transfer",
}

_MODE_NAMES = ("independent", "mtl")


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _as_mapping(value, name: str) -> dict:
    _require(isinstance(value, dict), f"{name} must be a mapping")
    return value


def _known_keys(mapping: dict, allowed: set[str], name: str):
    unknown = set(mapping) - allowed
    _require(not unknown, f"{name}: unknown keys {sorted(unknown)}")


def _existing(path_value, base: Path, name: str) -> Path:
    _require(isinstance(path_value, str) and path_value, f"{name} must be a path string")
    p = Path(path_value)
    if not p.is_absolute():
        p = base / p
    _require(p.is_file(), f"{name}: file not found: {p}")
    return p


def _parse_solver(node) -> SolverConfig:
    node = _as_mapping(node, "solver")
    _known_keys(node, {"epsilon", "xi", "max_iters", "lambda_floor"}, "solver")
    _require("epsilon" in node and "xi" in node, "solver: epsilon and xi are required")
    try:
        return SolverConfig(
            epsilon=float(node["epsilon"]),
            xi=float(node["xi"]),
            max_iters=int(node.get("max_iters", 2000)),
            lambda_floor=float(node.get("lambda_floor", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from None


def _parse_synthetic(node, seed: int) -> SyntheticPopulationSpec:
    node = _as_mapping(node, "synthetic")
    allowed = {
        "modes", "class_shift", "nuisance_band", "noise_sd", "n_samples",
        "n_test", "n_tasks", "n_features", "freq_range", "nuisance_modes",
        "nuisance_class_shift", "nuisance_damping", "nuisance_amplitude",
        "coherence",
    }
    _known_keys(node, allowed, "synthetic")
    for key in ("modes", "class_shift", "nuisance_band", "noise_sd", "n_samples"):
        _require(key in node, f"synthetic: {key} is required")
    _require(isinstance(node["modes"], list) and node["modes"], "synthetic: modes must be a non-empty list")
    try:
        modes = tuple(
            ModalMode(
                natural_freq=float(m["natural_freq"]),
                damping=float(m["damping"]),
                amplitude=float(m.get("amplitude", 1.0)),
            )
            for m in node["modes"]
        )
        kwargs: dict[str, Any] = {}
        for key in (
            "n_test", "n_tasks", "n_features", "nuisance_modes",
        ):
            if key in node:
                kwargs[key] = int(node[key])
        for key in ("nuisance_class_shift", "nuisance_damping", "nuisance_amplitude", "coherence"):
            if key in node:
                kwargs[key] = float(node[key])
        if "freq_range" in node:
            kwargs["freq_range"] = tuple(float(v) for v in node["freq_range"])
        return SyntheticPopulationSpec(
            modes=modes,
            class_shift=tuple(float(s) for s in node["class_shift"]),
            nuisance_band=tuple(float(b) for b in node["nuisance_band"]),
            noise_sd=float(node["noise_sd"]),
            n_samples=int(node["n_samples"]),
            seed=seed,
            **kwargs,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"synthetic: {exc}") from None


def _parse_grid(node, seed: int) -> tuple[GridSpec, str]:
    node = _as_mapping(node, "grid")
    allowed = {
        "epsilons", "xis", "window_counts", "folds", "strategy",
        "stage_windows", "refine_epsilons",
    }
    _known_keys(node, allowed, "grid")
    strategy = node.get("strategy", "staged")
    _require(strategy in ("staged", "exhaustive"), f"grid: unknown strategy {strategy!r}")
    try:
        spec = GridSpec(
            epsilons=tuple(float(e) for e in node.get("epsilons", (1.0, 0.3, 0.1, 0.03))),
            xis=tuple(float(x) for x in node.get("xis", (0.1, 0.01, 0.001))),
            window_counts=tuple(int(w) for w in node.get("window_counts", (6,))),
            folds=int(node.get("folds", 5)),
            seed=seed,
            stage_windows=int(node.get("stage_windows", 6)),
            refine_epsilons=tuple(float(e) for e in node.get("refine_epsilons", ())),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from None
    return spec, strategy


def load_config(
    path,
    *,
    seed_override: int | None = None,
    out_override=None,
    threads_override: int | None = None,
) -> ExperimentConfig:
    """Load and validate a YAML run configuration.

    All referenced files must exist; the seed is mandatory (command-line
    overrides are applied before validation and appear in the echo).
    """
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigError(f"config file not found: {cfg_path}")
    try:
        raw = yaml.safe_load(cfg_path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{cfg_path}: invalid YAML: {exc}") from None
    raw = _as_mapping(raw, "config")
    _known_keys(raw, _TOP_KEYS, "config")
    base = cfg_path.parent

    seed = seed_override if seed_override is not None else raw.get("seed")
    _require(seed is not None, "seed is required (an integer; no wall-clock default)")
    _require(isinstance(seed, int) and not isinstance(seed, bool), "seed must be an integer")

    out_dir = Path(out_override) if out_override is not None else Path(raw.get("output_dir", "out"))
    threads = threads_override if threads_override is not None else int(raw.get("threads", 1))
    _require(threads >= 1, "threads must be at least 1")

    _require("solver" in raw, "solver section is required")
    solver = _parse_solver(raw["solver"])

    n_windows = int(raw.get("n_windows", 1))
    _require(n_windows >= 1, "n_windows must be at least 1")

    modes_node = raw.get("modes", list(_MODE_NAMES))
    _require(isinstance(modes_node, list) and modes_node, "modes must be a non-empty list")
    modes = tuple(str(m) for m in modes_node)
    for m in modes:
        _require(m in _MODE_NAMES, f"modes: unknown mode {m!r}")
    _require(len(set(modes)) == len(modes), "modes must not repeat")

    sampling = _as_mapping(raw.get("sampling", {}), "sampling")
    _known_keys(sampling, {"mode", "n_intermediate"}, "sampling")
    sampling_mode = sampling.get("mode", "two-stage")
    _require(sampling_mode in ("two-stage", "one-stage"), f"sampling: unknown mode {sampling_mode!r}")
    n_intermediate = int(sampling.get("n_intermediate", 10_000))
    _require(n_intermediate >= 2, "sampling: n_intermediate must be at least 2")

    tasks = []
    for i, node in enumerate(raw.get("tasks", []) or []):
        node = _as_mapping(node, f"tasks[{i}]")
        _known_keys(node, {"id", "train", "test"}, f"tasks[{i}]")
        _require("id" in node and "train" in node, f"tasks[{i}]: id and train are required")
        test = node.get("test")
        tasks.append(
            TaskFiles(
                task_id=str(node["id"]),
                train=_existing(node["train"], base, f"tasks[{i}].train"),
                test=_existing(test, base, f"tasks[{i}].test") if test is not None else None,
            )
        )

    synthetic = _parse_synthetic(raw["synthetic"], seed) if raw.get("synthetic") else None
    _require(
        not (tasks and synthetic),
        "give either file-backed tasks or a synthetic population, not both",
    )

    spectra = []
    for i, node in enumerate(raw.get("spectra", []) or []):
        node = _as_mapping(node, f"spectra[{i}]")
        allowed = {
            "id", "class0", "class1", "n_avg", "n_train_per_class",
            "n_test_per_class", "normalize", "freq_min", "freq_max",
        }
        _known_keys(node, allowed, f"spectra[{i}]")
        for key in ("id", "class0", "class1", "n_train_per_class"):
            _require(key in node, f"spectra[{i}]: {key} is required")
        spectra.append(
            SpectrumSource(
                task_id=str(node["id"]),
                class0=_existing(node["class0"], base, f"spectra[{i}].class0"),
                class1=_existing(node["class1"], base, f"spectra[{i}].class1"),
                n_avg=int(node.get("n_avg", 6)),
                n_train_per_class=int(node["n_train_per_class"]),
                n_test_per_class=int(node.get("n_test_per_class", 0)),
                normalize=bool(node.get("normalize", True)),
                freq_min=float(node["freq_min"]) if node.get("freq_min") is not None else None,
                freq_max=float(node["freq_max"]) if node.get("freq_max") is not None else None,
            )
        )

    grid = None
    grid_strategy = "staged"
    if raw.get("grid") is not None:
        grid, grid_strategy = _parse_grid(raw["grid"], seed)

    transfer = None
    if raw.get("transfer") is not None:
        node = _as_mapping(raw["transfer"], "transfer")
        _known_keys(node, {"unseen", "extra_synthetic_task"}, "transfer")
        extra = bool(node.get("extra_synthetic_task", False))
        unseen = node.get("unseen")
        _require(
            (unseen is not None) != extra,
            "transfer: give exactly one of 'unseen' (a dataset file) or extra_synthetic_task: true",
        )
        _require(not (extra and synthetic is None), "transfer: extra_synthetic_task needs a synthetic population")
        transfer = TransferSource(
            unseen=_existing(unseen, base, "transfer.unseen") if unseen is not None else None,
            extra_synthetic_task=extra,
        )

    cfg = ExperimentConfig(
        seed=seed,
        output_dir=out_dir,
        solver=solver,
        n_windows=n_windows,
        modes=modes,
        threads=threads,
        include_traces=bool(raw.get("include_traces", False)),
        sampling_mode=sampling_mode,
        n_intermediate=n_intermediate,
        tasks=tuple(tasks),
        synthetic=synthetic,
        spectra=tuple(spectra),
        grid=grid,
        grid_strategy=grid_strategy,
        transfer=transfer,
    )
    cfg.echo.update(_build_echo(cfg))
    return cfg


def _build_echo(cfg: ExperimentConfig) -> dict:
    echo: dict[str, Any] = {
        "seed": cfg.seed,
        "output_dir": str(cfg.output_dir),
        "threads": cfg.threads,
        "include_traces": cfg.include_traces,
        "solver": {
            "epsilon": cfg.solver.epsilon,
            "xi": cfg.solver.xi,
            "max_iters": cfg.solver.max_iters,
            "lambda_floor": cfg.solver.lambda_floor,
        },
        "n_windows": cfg.n_windows,
        "modes": list(cfg.modes),
        "sampling": {"mode": cfg.sampling_mode, "n_intermediate": cfg.n_intermediate},
    }
    if cfg.tasks:
        echo["tasks"] = [
            {"id": t.task_id, "train": str(t.train), "test": str(t.test) if t.test else None}
            for t in cfg.tasks
        ]
    if cfg.synthetic is not None:
        s = cfg.synthetic
        echo["synthetic"] = {
            "modes": [
                {"natural_freq": m.natural_freq, "damping": m.damping, "amplitude": m.amplitude}
                for m in s.modes
            ],
            "class_shift": list(s.class_shift),
            "nuisance_band": list(s.nuisance_band),
            "noise_sd": s.noise_sd,
            "n_samples": s.n_samples,
            "n_test": s.n_test,
            "n_tasks": s.n_tasks,
            "n_features": s.n_features,
            "freq_range": list(s.freq_range),
            "nuisance_modes": s.nuisance_modes,
            "nuisance_class_shift": s.nuisance_class_shift,
            "nuisance_damping": s.nuisance_damping,
            "nuisance_amplitude": s.nuisance_amplitude,
            "coherence": s.coherence,
            "seed": s.seed,
        }
    if cfg.spectra:
        echo["spectra"] = [
            {
                "id": s.task_id,
                "class0": str(s.class0),
                "class1": str(s.class1),
                "n_avg": s.n_avg,
                "n_train_per_class": s.n_train_per_class,
                "n_test_per_class": s.n_test_per_class,
                "normalize": s.normalize,
                "freq_min": s.freq_min,
                "freq_max": s.freq_max,
            }
            for s in cfg.spectra
        ]
    if cfg.grid is not None:
        g = cfg.grid
        echo["grid"] = {
            "epsilons": list(g.epsilons),
            "xis": list(g.xis),
            "window_counts": list(g.window_counts),
            "folds": g.folds,
            "strategy": cfg.grid_strategy,
            "stage_windows": g.stage_windows,
            "refine_epsilons": list(g.refine_epsilons),
            "seed": g.seed,
        }
    if cfg.transfer is not None:
        echo["transfer"] = {
            "unseen": str(cfg.transfer.unseen) if cfg.transfer.unseen else None,
            "extra_synthetic_task": cfg.transfer.extra_synthetic_task,
        }
    return echo


def _report_rows(report: EvaluationReport) -> list[dict]:
    return [
        {
            "window": r.window,
            "window_start": r.window_start,
            "window_stop": r.window_stop,
            "task": r.task_id,
            "mode": r.mode,
            "f1": r.f1,
            "gini": r.gini,
            "epsilon": r.epsilon,
            "xi": r.xi,
            "n_active": len(r.active),
        }
        for r in report.rows
    ]


def _weight_rows(report: EvaluationReport) -> list[dict]:
    return [
        {
            "freq_hz": a.freq,
            "weight": a.weight,
            "task": r.task_id,
            "mode": r.mode,
            "window": r.window,
        }
        for r in report.rows
        for a in r.active
    ]


def _grid_rows(table) -> list[dict]:
    return [
        {
            "stage": g.stage,
            "epsilon": g.epsilon,
            "xi": g.xi,
            "n_windows": g.n_windows,
            "mean_f1": g.mean_f1,
            "mean_gini": g.mean_gini,
        }
        for g in table
    ]


def _trace_dict(trace) -> dict:
    return {
        "terminated_by": trace.terminated_by,
        "steps": [
            {
                "iteration": s.iteration,
                "kind": s.kind,
                "feature": s.feature,
                "task": s.task,
                "sign": s.sign,
                "empirical_loss_after": s.empirical_loss_after,
                "penalty_after": s.penalty_after,
                "total_loss_after": s.total_loss_after,
                "lambda_after": s.lambda_after,
            }
            for s in trace.steps
        ],
    }


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            cells.append(_fmt(v) if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def emit_weight_plot_table(report: EvaluationReport, path) -> None:
    """Delimited table of the nonzero weights: freq_hz, weight, task, mode, window."""
    _write_csv(
        Path(path),
        ["freq_hz", "weight", "task", "mode", "window"],
        _weight_rows(report),
    )


def write_grid_table(table, path) -> None:
    _write_csv(
        Path(path),
        ["stage", "epsilon", "xi", "n_windows", "mean_f1", "mean_gini"],
        _grid_rows(table),
    )


def write_transfer_table(rows: tuple[TransferRow, ...], path) -> None:
    _write_csv(
        Path(path),
        ["mode", "source_task", "window", "f1"],
        [
            {"mode": r.mode, "source_task": r.source_task, "window": r.window, "f1": r.f1}
            for r in rows
        ],
    )


def write_report_bundle(
    report: EvaluationReport,
    config_echo: dict,
    out_dir,
    *,
    include_traces: bool = False,
) -> dict[str, Path]:
    """Write report.json plus delimited tables; returns the written paths.

    The JSON bundle embeds the resolved config echo, so the bundle alone
    reproduces the run. Output is deterministic: no timestamps, fixed key
    order, shortest round-trip floats.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle: dict[str, Any] = {
        "config": config_echo,
        "summary": _report_rows(report),
        "active_weights": _weight_rows(report),
    }
    if report.grid_table:
        bundle["grid_table"] = _grid_rows(report.grid_table)
    if include_traces:
        bundle["traces"] = {key: _trace_dict(trace) for key, trace in report.traces}

    paths = {"report": out / "report.json"}
    paths["report"].write_text(json.dumps(bundle, indent=2) + "\n")

    paths["summary"] = out / "summary.csv"
    _write_csv(
        paths["summary"],
        ["window", "window_start", "window_stop", "task", "mode", "f1", "gini",
         "epsilon", "xi", "n_active"],
        _report_rows(report),
    )
    paths["active_weights"] = out / "active_weights.csv"
    emit_weight_plot_table(report, paths["active_weights"])
    if report.grid_table:
        paths["grid_table"] = out / "grid_table.csv"
        write_grid_table(report.grid_table, paths["grid_table"])
    return paths


def load_report(path) -> dict:
    """Re-parse a report.json bundle."""
    return json.loads(Path(path).read_text())


def load_delimited_table(path) -> list[dict[str, str]]:
    """Re-parse any of the emitted CSV tables into a list of string dicts."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    columns = lines[0].split(",")
    out = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != len(columns):
            raise DatasetFormatError(
                f"{path}: inconsistent row width, line {lineno}"
            )
        out.append(dict(zip(columns, cells)))
    return out
