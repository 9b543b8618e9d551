"""Point-wise precision/recall/F1 and a multi-dataset benchmark runner."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .dataio import LabeledDataset
from .pipeline import PipelineConfig, PointVerdict, step, warm_up


class EvaluationError(ValueError):
    """Evaluation inputs are inconsistent."""


class MatchMode(Enum):
    """How a predicted anomaly is matched against the ground truth.

    SIGN_STRICT requires the predicted tail to match the labeled tail; a
    right-tail prediction on a left-tail truth is a false positive (and the
    point is no true positive in any sense). ANY_ANOMALY ignores the tail.
    """

    SIGN_STRICT = "sign_strict"
    ANY_ANOMALY = "any_anomaly"


@dataclass(frozen=True)
class ConfusionCounts:
    """Combined confusion counts; each point lands in exactly one cell."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pred, truth, mode: MatchMode = MatchMode.SIGN_STRICT) -> ConfusionCounts:
    """Count point-wise agreement between predicted and true labels.

    Under SIGN_STRICT a sign-mismatched detection (fired, wrong tail) counts
    toward fp: an alert was raised that does not describe the event. Every
    point contributes to exactly one cell, so tp+fp+fn+tn equals the length.
    """
    p = np.asarray(pred, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape:
        raise EvaluationError(f"length mismatch: {p.shape} vs {t.shape}")
    if mode is MatchMode.SIGN_STRICT:
        tp = int(np.sum((p == t) & (t != 0)))
        fp = int(np.sum((p != 0) & (p != t)))
        fn = int(np.sum((p == 0) & (t != 0)))
        tn = int(np.sum((p == 0) & (t == 0)))
    else:
        fired = p != 0
        real = t != 0
        tp = int(np.sum(fired & real))
        fp = int(np.sum(fired & ~real))
        fn = int(np.sum(~fired & real))
        tn = int(np.sum(~fired & ~real))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class PRFResult:
    """Precision, recall, F1, and whether any ratio was 0/0.

    Degenerate ratios (no predicted positives, or no real positives) are
    reported as 0 with the flag set rather than as an error.
    """

    precision: float
    recall: float
    f1: float
    degenerate: bool


def precision_recall_f1(c: ConfusionCounts) -> PRFResult:
    degenerate = (c.tp + c.fp == 0) or (c.tp + c.fn == 0)
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp > 0 else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn > 0 else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return PRFResult(precision=precision, recall=recall, f1=f1, degenerate=degenerate)


def f1_score(c: ConfusionCounts) -> float:
    """Harmonic mean of precision and recall; 0 on degenerate counts."""
    return precision_recall_f1(c).f1


@dataclass(frozen=True)
class BenchmarkCell:
    """One dataset/config evaluation, or the error that prevented it."""

    dataset: str
    config: str
    result: PRFResult | None
    error: str | None = None


@dataclass(frozen=True)
class BenchmarkReport:
    """Grid of per-dataset, per-config scores with config-level means."""

    cells: tuple[BenchmarkCell, ...]
    dataset_names: tuple[str, ...]
    config_names: tuple[str, ...]

    def cell(self, dataset: str, config: str) -> BenchmarkCell:
        for c in self.cells:
            if c.dataset == dataset and c.config == config:
                return c
        raise KeyError((dataset, config))

    def mean_f1(self, config: str, datasets=None) -> float:
        """Mean F1 for a config over datasets with usable results."""
        wanted = set(datasets) if datasets is not None else None
        scores = [
            c.result.f1
            for c in self.cells
            if c.config == config
            and c.result is not None
            and (wanted is None or c.dataset in wanted)
        ]
        if not scores:
            raise EvaluationError(f"no usable cells for config {config!r}")
        return float(np.mean(scores))

    def to_csv_rows(self) -> list[str]:
        rows = ["dataset,config,precision,recall,f1"]
        for c in self.cells:
            if c.result is None:
                rows.append(f"{c.dataset},{c.config},NA,NA,NA")
            else:
                r = c.result
                rows.append(
                    f"{c.dataset},{c.config},{r.precision:.6f},{r.recall:.6f},{r.f1:.6f}"
                )
        return rows

    def to_json(self) -> str:
        payload = {
            "datasets": list(self.dataset_names),
            "configs": list(self.config_names),
            "cells": [
                {
                    "dataset": c.dataset,
                    "config": c.config,
                    "precision": c.result.precision if c.result else None,
                    "recall": c.result.recall if c.result else None,
                    "f1": c.result.f1 if c.result else None,
                    "error": c.error,
                }
                for c in self.cells
            ],
            "mean_f1": {
                cfg: self._safe_mean(cfg) for cfg in self.config_names
            },
        }
        return json.dumps(payload, indent=2)

    def _safe_mean(self, config: str) -> float | None:
        try:
            return self.mean_f1(config)
        except EvaluationError:
            return None

    def to_text(self) -> str:
        """Aligned F1 grid, one row per config, with a mean column."""
        col_w = max(10, *(len(d) for d in self.dataset_names)) + 2
        head_w = max(8, *(len(c) for c in self.config_names)) + 2
        lines = [
            "".ljust(head_w)
            + "".join(d.rjust(col_w) for d in self.dataset_names)
            + "Mean".rjust(col_w)
        ]
        for cfg in self.config_names:
            cells = []
            for ds in self.dataset_names:
                c = self.cell(ds, cfg)
                cells.append(("NA" if c.result is None else f"{c.result.f1:.3f}").rjust(col_w))
            mean = self._safe_mean(cfg)
            mean_text = "NA" if mean is None else f"{mean:.3f}"
            lines.append(cfg.ljust(head_w) + "".join(cells) + mean_text.rjust(col_w))
        return "\n".join(lines) + "\n"


def evaluate_dataset(
    dataset: LabeledDataset,
    config: PipelineConfig,
    mode: MatchMode = MatchMode.SIGN_STRICT,
    collect_verdicts: bool = False,
) -> tuple[PRFResult, list[PointVerdict]]:
    """Warm up on the train split, stream to the end, score the test split."""
    if dataset.splits is None:
        raise EvaluationError(f"dataset {dataset.kpi_id} has no splits")
    series = dataset.series
    train_lo, train_hi = dataset.index_range(dataset.splits.train)
    test_lo, test_hi = dataset.index_range(dataset.splits.test)
    if test_hi <= test_lo:
        raise EvaluationError(f"dataset {dataset.kpi_id} has an empty test split")
    history = series.slice(train_lo, train_hi)
    state = warm_up(history, config, stream_id=dataset.kpi_id)
    predicted = np.zeros(len(series), dtype=np.int64)
    verdicts: list[PointVerdict] = []
    ts = series.timestamps()
    for i in range(train_hi, len(series)):
        verdict = step(state, (int(ts[i]), float(series.values[i])))
        predicted[i] = verdict.label
        if collect_verdicts:
            verdicts.append(verdict)
    counts = confusion(predicted[test_lo:test_hi], dataset.labels[test_lo:test_hi], mode)
    return precision_recall_f1(counts), verdicts


def _verdicts_to_csv(verdicts: list[PointVerdict], path: Path) -> None:
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("timestamp,value,residual,score,label,left_thr,right_thr,drift\n")
        for v in verdicts:
            drift = v.drift.kind.value if v.drift is not None else ""
            fh.write(
                f"{v.timestamp},{v.value!r},{v.residual!r},{v.score!r},"
                f"{v.label},{v.left_threshold!r},{v.right_threshold!r},{drift}\n"
            )


def benchmark(
    datasets: list[LabeledDataset],
    configs: dict[str, PipelineConfig],
    mode: MatchMode = MatchMode.SIGN_STRICT,
    verdict_dir: str | Path | None = None,
) -> BenchmarkReport:
    """Evaluate every dataset under every config, tolerating failed cells.

    A cell that raises is recorded as NA with its error message and the grid
    continues. With ``verdict_dir`` set, per-point verdicts of each
    successful cell are dumped for plotting or audit. Deterministic given
    the inputs.
    """
    if not datasets:
        raise EvaluationError("no datasets to evaluate")
    if not configs:
        raise EvaluationError("no configs to evaluate")
    out_dir = Path(verdict_dir) if verdict_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    cells = []
    for cfg_name, cfg in configs.items():
        for ds in datasets:
            try:
                result, verdicts = evaluate_dataset(
                    ds, cfg, mode, collect_verdicts=out_dir is not None
                )
                if out_dir is not None:
                    _verdicts_to_csv(
                        verdicts, out_dir / f"verdicts_{ds.kpi_id}_{cfg_name}.csv"
                    )
                cells.append(
                    BenchmarkCell(dataset=ds.kpi_id, config=cfg_name, result=result)
                )
            except Exception as e:  # cell failures must not abort the grid
                cells.append(
                    BenchmarkCell(
                        dataset=ds.kpi_id, config=cfg_name, result=None, error=str(e)
                    )
                )
    return BenchmarkReport(
        cells=tuple(cells),
        dataset_names=tuple(ds.kpi_id for ds in datasets),
        config_names=tuple(configs.keys()),
    )


def write_report(report: BenchmarkReport, directory) -> dict[str, Path]:
    """Emit the CSV, JSON and aligned-text report trio into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": directory / "report.csv",
        "json": directory / "report.json",
        "txt": directory / "report.txt",
    }
    paths["csv"].write_text("\n".join(report.to_csv_rows()) + "\n", encoding="utf-8")
    paths["json"].write_text(report.to_json() + "\n", encoding="utf-8")
    paths["txt"].write_text(report.to_text(), encoding="utf-8")
    return paths
