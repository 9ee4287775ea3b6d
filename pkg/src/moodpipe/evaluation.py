"""Metrics, stratified k-fold cross-validation, and report assembly.

Positive class is "depressed".  Per the evaluation protocol, training folds
are balanced/augmented, evaluation folds are never resampled (one sample per
participant), and a majority-class baseline row accompanies every report.
Pooled (micro) metrics over summed confusion counts are the headline; the
per-fold mean is also reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, LABEL_DEPRESSED
from .errors import MoodpipeError
from .models import FusionStack, fit_stack
from .nn.rng import RngState
from .sampling import (
    ResponseFeatures,
    build_eval_samples,
    build_training_samples,
)

MODEL_LABELS = {
    "audio": ("Audio", "GRU"),
    "text": ("Text", "BiLSTM + attention"),
    "fusion": ("Fusion", "Modal-attention fusion"),
    "baseline": ("-", "Majority baseline"),
}


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def add(self, y_true: int, y_pred: int) -> None:
        if y_true == 1:
            if y_pred == 1:
                self.tp += 1
            else:
                self.fn += 1
        elif y_pred == 1:
            self.fp += 1
        else:
            self.tn += 1

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def metrics(cm: ConfusionMatrix) -> dict[str, float]:
    """F1 / recall / precision with every 0/0 defined as 0."""
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"f1": f1, "recall": recall, "precision": precision}


def kfold_split(corpus: Corpus, k: int = 3, seed: int = 0,
                ) -> list[tuple[list[str], list[str]]]:
    """Stratified participant-id partitions: k disjoint test folds.

    Deterministic given the seed; every participant lands in exactly one test
    fold, and each fold's class counts differ by at most one.
    """
    if k < 2:
        raise MoodpipeError(f"k must be >= 2, got {k}")
    rng = RngState(seed).child("kfold")
    folds: list[list[str]] = [[] for _ in range(k)]
    for label in (0, 1):
        ids = [p.id for p in corpus.participants if p.label == label]
        if len(ids) < k:
            raise MoodpipeError(
                f"class {label} has {len(ids)} participants, fewer than k={k}")
        for slot, idx in enumerate(rng.permutation(len(ids))):
            folds[slot % k].append(ids[idx])
    splits = []
    for i in range(k):
        test = sorted(folds[i])
        train = sorted(pid for j, fold in enumerate(folds) if j != i for pid in fold)
        splits.append((train, test))
    return splits


def check_no_leak(splits: list[tuple[list[str], list[str]]]) -> None:
    """Raise if any participant id appears in both sides of a fold."""
    all_test: list[str] = []
    for i, (train, test) in enumerate(splits):
        overlap = set(train) & set(test)
        if overlap:
            raise MoodpipeError(f"fold {i}: train/test leak: {sorted(overlap)}")
        all_test.extend(test)
    if len(all_test) != len(set(all_test)):
        raise MoodpipeError("a participant appears in more than one test fold")


@dataclass
class FoldReport:
    """Per-fold and aggregate results for one model."""

    model: str
    folds: list[dict] = field(default_factory=list)

    def add_fold(self, cm: ConfusionMatrix) -> None:
        self.folds.append({"confusion": cm.as_dict(), "metrics": metrics(cm)})

    @property
    def pooled_confusion(self) -> ConfusionMatrix:
        out = ConfusionMatrix()
        for f in self.folds:
            out = out + ConfusionMatrix(**f["confusion"])
        return out

    def as_dict(self) -> dict:
        pooled = self.pooled_confusion
        mean = {key: float(np.mean([f["metrics"][key] for f in self.folds]))
                for key in ("f1", "recall", "precision")}
        return {"folds": self.folds,
                "pooled": {"confusion": pooled.as_dict(), "metrics": metrics(pooled)},
                "mean": mean}


def _confusion_from_predictions(records: list[dict]) -> ConfusionMatrix:
    cm = ConfusionMatrix()
    for r in records:
        cm.add(r["true"], r["pred"])
    return cm


def run_crossval(corpus: Corpus, features: dict[str, ResponseFeatures], *,
                 modalities=("audio", "text", "fusion"), k: int = 3, seed: int = 0,
                 hyper: dict | None = None, checkpoint_dir=None) -> dict:
    """Full cross-validation: per fold, balance/augment the training split,
    train the requested models, and evaluate one sample per test participant.

    ``features`` maps participant id to its per-response features.  Returns a
    JSON-ready report with per-fold/pooled/mean metrics, stored per-participant
    predictions, and the majority-baseline row.
    """
    corpus.require_valid()
    hyper = dict(hyper or {})
    splits = kfold_split(corpus, k=k, seed=seed)
    check_no_leak(splits)
    by_id = {p.id: p for p in corpus.participants}

    wanted = [m for m in ("audio", "text", "fusion") if m in modalities]
    reports = {m: FoldReport(m) for m in wanted}
    baseline_report = FoldReport("baseline")
    predictions: dict[str, list[dict]] = {m: [] for m in wanted + ["baseline"]}
    root = RngState(seed)

    for fold_i, (train_ids, test_ids) in enumerate(splits):
        fold_rng = root.child(f"fold{fold_i}")
        train_feats = [features[pid] for pid in train_ids]
        test_feats = [features[pid] for pid in test_ids]
        train_samples = build_training_samples(train_feats, corpus.kind,
                                               fold_rng.child("sampling"))
        eval_samples = build_eval_samples(test_feats, corpus.kind,
                                          fold_rng.child("eval"))

        stack = fit_stack(train_samples, modalities=wanted,
                          seed=fold_rng.child("train").seed, **hyper)
        if checkpoint_dir is not None:
            _save_stack(stack, Path(checkpoint_dir) / f"fold_{fold_i}")

        for m in wanted:
            probs = stack.predict_proba(eval_samples, m)
            records = [
                {"participant": s.participant_id, "fold": fold_i,
                 "true": int(s.label), "pred": int(np.argmax(probs[j])),
                 "p_depressed": float(probs[j, 1])}
                for j, s in enumerate(eval_samples)
            ]
            predictions[m].extend(records)
            reports[m].add_fold(_confusion_from_predictions(records))

        train_labels = [by_id[pid].label for pid in train_ids]
        majority = int(sum(train_labels) * 2 > len(train_labels))
        base_records = [
            {"participant": s.participant_id, "fold": fold_i,
             "true": int(s.label), "pred": majority,
             "p_depressed": float(majority)}
            for s in eval_samples
        ]
        predictions["baseline"].extend(base_records)
        baseline_report.add_fold(_confusion_from_predictions(base_records))

    models = {m: reports[m].as_dict() for m in wanted}
    models["baseline"] = baseline_report.as_dict()
    return {
        "kind": corpus.kind,
        "k": k,
        "seed": seed,
        "modalities": wanted,
        "hyper": hyper,
        "models": models,
        "predictions": predictions,
    }


def _save_stack(stack: FusionStack, out_dir: Path) -> None:
    if stack.audio is not None:
        stack.audio.save(out_dir / "audio")
    if stack.text is not None:
        stack.text.save(out_dir / "text")
    if stack.fusion is not None:
        stack.fusion.save(out_dir / "fusion")


# -- rendering ---------------------------------------------------------------------


def render_table(report: dict) -> str:
    """Aligned text table in the paper's column order."""
    rows = [("Features", "Model", "F1", "Recall", "Precision")]
    order = [m for m in ("audio", "text", "fusion", "baseline") if m in report["models"]]
    for m in order:
        feats, model = MODEL_LABELS[m]
        met = report["models"][m]["pooled"]["metrics"]
        rows.append((feats, model, f"{met['f1']:.2f}", f"{met['recall']:.2f}",
                     f"{met['precision']:.2f}"))
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    lines = []
    for i, r in enumerate(rows):
        lines.append(" | ".join(v.ljust(w) for v, w in zip(r, widths)))
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_csv(report: dict) -> str:
    lines = ["features,model,f1,recall,precision"]
    order = [m for m in ("audio", "text", "fusion", "baseline") if m in report["models"]]
    for m in order:
        feats, model = MODEL_LABELS[m]
        met = report["models"][m]["pooled"]["metrics"]
        lines.append(f"{feats},{model},{met['f1']:.4f},{met['recall']:.4f},"
                     f"{met['precision']:.4f}")
    return "\n".join(lines) + "\n"


def write_report(report: dict, out_dir) -> Path:
    """Write report.json (deterministic bytes) and report.txt; returns json path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(render_table(report), encoding="utf-8")
    return path
