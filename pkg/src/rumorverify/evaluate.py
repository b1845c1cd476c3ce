"""Metrics and evaluation protocols.

Protocols: standard split, leave-one-event-out cross-validation, early
detection over elapsed-time checkpoints, and cross-platform adaptation.
Zero-division convention: any 0/0 in precision/recall/F1 is 0.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict
from pathlib import Path

from .errors import EvaluationError
from .threads import Thread, VeracityLabel, VERACITY_ORDER, time_slice

logger = logging.getLogger(__name__)

DEFAULT_EARLY_CHECKPOINTS = (1.0, 4.0, 7.0, 10.0, 13.0, 16.0, 19.0, 22.0, 24.0)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class FoldResult:
    name: str
    n: int
    accuracy: float
    macro_f1: float


@dataclass
class EvalReport:
    protocol: str
    n: int
    accuracy: float
    macro_f1: float
    per_class: dict[str, ClassMetrics]
    confusion: list[list[int]]  # gold rows x predicted columns, T/F/U order
    curve: list[tuple[float, float, float]] | None = None  # (hours, macro_f1, accuracy)
    folds: list[FoldResult] | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def confusion_matrix(gold: list[VeracityLabel], pred: list[VeracityLabel]) -> list[list[int]]:
    if len(gold) != len(pred):
        raise EvaluationError(f"gold has {len(gold)} labels, predictions {len(pred)}")
    if not gold:
        raise EvaluationError("cannot evaluate an empty label list")
    matrix = [[0, 0, 0] for _ in range(3)]
    for g, p in zip(gold, pred):
        matrix[g.value][p.value] += 1
    return matrix


def _class_metrics(matrix: list[list[int]], cls: int) -> ClassMetrics:
    tp = matrix[cls][cls]
    predicted = sum(matrix[row][cls] for row in range(3))
    actual = sum(matrix[cls])
    precision = tp / predicted if predicted > 0 else 0.0
    recall = tp / actual if actual > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ClassMetrics(precision=precision, recall=recall, f1=f1, support=actual)


def macro_f1(gold: list[VeracityLabel], pred: list[VeracityLabel]) -> float:
    """Unweighted mean of the three per-class F1 values."""
    matrix = confusion_matrix(gold, pred)
    return sum(_class_metrics(matrix, c).f1 for c in range(3)) / 3.0


def accuracy(gold: list[VeracityLabel], pred: list[VeracityLabel]) -> float:
    matrix = confusion_matrix(gold, pred)
    return sum(matrix[c][c] for c in range(3)) / len(gold)


def evaluate_predictions(gold: list[VeracityLabel], pred: list[VeracityLabel],
                         protocol: str = "standard") -> EvalReport:
    matrix = confusion_matrix(gold, pred)
    per_class = {label.name: _class_metrics(matrix, label.value) for label in VERACITY_ORDER}
    total = len(gold)
    acc = sum(matrix[c][c] for c in range(3)) / total
    mf1 = sum(per_class[label.name].f1 for label in VERACITY_ORDER) / 3.0
    return EvalReport(
        protocol=protocol,
        n=total,
        accuracy=acc,
        macro_f1=mf1,
        per_class=per_class,
        confusion=matrix,
    )


def evaluate_model(model, threads: list[Thread], provider, protocol: str = "standard") -> EvalReport:
    """Predict every thread with the trained model and score the results."""
    if not threads:
        raise EvaluationError("no threads to evaluate")
    gold = [t.veracity for t in threads]
    pred = [model.predict(t, provider) for t in threads]
    return evaluate_predictions(gold, pred, protocol=protocol)


def leave_one_event_out(threads: list[Thread], train_fn, provider, seed: int = 0) -> EvalReport:
    """One fold per news event: train on the rest, test on the held-out event.

    Final accuracy and macro-F1 are unweighted means over folds; the
    confusion matrix is pooled across folds for reference.  Fold seeds are
    seed + fold index.
    """
    events = sorted({t.event for t in threads})
    if len(events) < 2:
        raise EvaluationError(f"leave-one-event-out needs >= 2 events, found {len(events)}")
    folds: list[FoldResult] = []
    pooled = [[0, 0, 0] for _ in range(3)]
    for fold_idx, event in enumerate(events):
        test_split = [t for t in threads if t.event == event]
        train_split = [t for t in threads if t.event != event]
        if not test_split:  # pragma: no cover - events derive from threads
            logger.warning("event %r has no threads; fold skipped", event)
            continue
        model = train_fn(train_split, seed + fold_idx)
        report = evaluate_model(model, test_split, provider, protocol="loeo-fold")
        folds.append(FoldResult(name=event, n=report.n,
                                accuracy=report.accuracy, macro_f1=report.macro_f1))
        for r in range(3):
            for c in range(3):
                pooled[r][c] += report.confusion[r][c]
    per_class = {label.name: _class_metrics(pooled, label.value) for label in VERACITY_ORDER}
    return EvalReport(
        protocol="loeo",
        n=sum(f.n for f in folds),
        accuracy=sum(f.accuracy for f in folds) / len(folds),
        macro_f1=sum(f.macro_f1 for f in folds) / len(folds),
        per_class=per_class,
        confusion=pooled,
        folds=folds,
    )


def early_detection_eval(model, threads: list[Thread], checkpoints, provider) -> EvalReport:
    """Evaluate one trained model on time-sliced threads per checkpoint.

    The same model is reused at every checkpoint; only the visible replies
    change.  Threads that cannot be sliced (no source timestamp) are
    excluded with a warning.
    """
    checkpoints = [float(c) for c in checkpoints]
    if not checkpoints:
        raise EvaluationError("at least one detection checkpoint is required")
    if checkpoints != sorted(checkpoints):
        raise EvaluationError("checkpoints must be sorted ascending")
    usable = []
    for t in threads:
        if t.source.timestamp is None:
            logger.warning("thread %r has no source timestamp; excluded from early detection",
                           t.thread_id)
            continue
        usable.append(t)
    if not usable:
        raise EvaluationError("no threads with source timestamps to evaluate")
    curve = []
    last_report = None
    for hours in checkpoints:
        sliced = [time_slice(t, hours) for t in usable]
        gold = [t.veracity for t in sliced]
        pred = [model.predict(t, provider) for t in sliced]
        report = evaluate_predictions(gold, pred, protocol="early")
        curve.append((hours, report.macro_f1, report.accuracy))
        last_report = report
    final = last_report
    return EvalReport(
        protocol="early",
        n=final.n,
        accuracy=final.accuracy,
        macro_f1=final.macro_f1,
        per_class=final.per_class,
        confusion=final.confusion,
        curve=curve,
    )


def cross_platform_eval(threads: list[Thread], train_fn, provider,
                        pairs: list[tuple[str, str]] | None = None,
                        seed: int = 0) -> list[tuple[tuple[str, str], EvalReport]]:
    """Train on one platform's threads, test on another's, per (train, test) pair.

    With pairs=None, all ordered combinations of the platforms present are
    evaluated (same-platform pairs give the in-domain baselines).
    """
    partitions: dict[str, list[Thread]] = {}
    for t in threads:
        partitions.setdefault(t.platform, []).append(t)
    if pairs is None:
        platforms = sorted(partitions)
        if len(platforms) < 2:
            raise EvaluationError(
                f"cross-platform evaluation needs >= 2 platforms, found {platforms}"
            )
        pairs = [(a, b) for a in platforms for b in platforms]
    results = []
    for idx, (train_platform, test_platform) in enumerate(pairs):
        for platform in (train_platform, test_platform):
            if not partitions.get(platform):
                raise EvaluationError(f"platform {platform!r} has no threads")
        model = train_fn(partitions[train_platform], seed + idx)
        report = evaluate_model(model, partitions[test_platform], provider, protocol="crossplat")
        results.append(((train_platform, test_platform), report))
    return results


# -- report files -----------------------------------------------------


def write_report_json(report: EvalReport | list, path) -> None:
    """Full structured report as JSON."""
    if isinstance(report, list):  # cross-platform: list of (pair, report)
        payload = [
            {"train_platform": pair[0], "test_platform": pair[1], "report": rep.to_dict()}
            for pair, rep in report
        ]
    else:
        payload = report.to_dict()
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_report_table(report: EvalReport | list, path) -> None:
    """Flat plot-ready TSV: one row per fold, checkpoint, or platform pair."""
    lines = ["unit\tlabel\tn\tmacro_f1\taccuracy"]
    if isinstance(report, list):
        for (train_platform, test_platform), rep in report:
            lines.append(
                f"pair\t{train_platform}->{test_platform}\t{rep.n}\t{rep.macro_f1:.6f}\t{rep.accuracy:.6f}"
            )
    elif report.curve is not None:
        for hours, mf1, acc in report.curve:
            lines.append(f"checkpoint\t{hours:g}h\t{report.n}\t{mf1:.6f}\t{acc:.6f}")
    elif report.folds is not None:
        for fold in report.folds:
            lines.append(f"fold\t{fold.name}\t{fold.n}\t{fold.macro_f1:.6f}\t{fold.accuracy:.6f}")
        lines.append(f"mean\tall\t{report.n}\t{report.macro_f1:.6f}\t{report.accuracy:.6f}")
    else:
        lines.append(f"split\ttest\t{report.n}\t{report.macro_f1:.6f}\t{report.accuracy:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
