"""Symptom-prediction evaluation: reproducible splits, F1 scores, report table.

Binary symptoms are scored with plain F1 on the "yes" class at a 0.5 threshold.
The three-state fever variable is scored with unweighted macro-F1 over its
classes, predictions taken as the argmax with ties broken by the declared
state order (none < low < high). An empty denominator scores 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .inference import EVIDENCE_SETTINGS, SYMPTOMS, InferenceEngine
from .network import NetworkSpec


def split_records(data: pd.DataFrame, train_n: int, test_n: int, seed: int) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Disjoint, exhaustive, seeded random partition of the rows."""
    if train_n + test_n != len(data):
        raise ValueError(
            f"train_n + test_n = {train_n + test_n} does not partition {len(data)} rows"
        )
    perm = np.random.default_rng(seed).permutation(len(data))
    train = data.iloc[perm[:train_n]].reset_index(drop=True)
    test = data.iloc[perm[train_n:]].reset_index(drop=True)
    return train, test


def f1_from_counts(tp: float, fp: float, fn: float) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def binary_f1(y_true: Sequence[str], y_pred: Sequence[str], positive: str = "yes") -> float:
    yt = np.asarray(y_true) == positive
    yp = np.asarray(y_pred) == positive
    tp = float(np.sum(yt & yp))
    fp = float(np.sum(~yt & yp))
    fn = float(np.sum(yt & ~yp))
    return f1_from_counts(tp, fp, fn)


def macro_f1(y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str]) -> float:
    scores = [binary_f1(y_true, y_pred, positive=c) for c in classes]
    return float(np.mean(scores))


@dataclass
class EvalEntry:
    symptom: str
    setting: str
    metric: str  # f1 | macro_f1
    score: float
    n: int
    threshold: float = 0.5


@dataclass
class EvalReport:
    entries: list[EvalEntry] = field(default_factory=list)

    def score(self, symptom: str, setting: str) -> float:
        for e in self.entries:
            if e.symptom == symptom and e.setting == setting:
                return e.score
        raise KeyError((symptom, setting))

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "symptom": e.symptom,
                    "setting": e.setting,
                    "metric": e.metric,
                    "score": e.score,
                    "n": e.n,
                    "threshold": e.threshold,
                }
                for e in self.entries
            ]
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def to_table(self) -> str:
        settings = sorted({e.setting for e in self.entries})
        symptoms = []
        for e in self.entries:
            if e.symptom not in symptoms:
                symptoms.append(e.symptom)
        width = max(len(s) for s in symptoms + ["symptom"]) + 2
        header = "symptom".ljust(width) + "".join(s.rjust(12) for s in settings)
        lines = [header]
        for s in symptoms:
            row = s.ljust(width)
            for st in settings:
                try:
                    row += f"{self.score(s, st):12.4f}"
                except KeyError:
                    row += " " * 12
            lines.append(row)
        return "\n".join(lines)


def predict_labels(
    engine: InferenceEngine,
    data: pd.DataFrame,
    symptom: str,
    setting_name: str,
    threshold: float = 0.5,
) -> list[str]:
    """Per-row predicted symptom state under an evidence setting.

    Identical evidence rows share one elimination call.
    """
    setting = EVIDENCE_SETTINGS[setting_name]
    ev_vars = setting.evidence_variables(symptom)
    states = engine.spec.variable(symptom).states
    cache: dict[tuple, str] = {}
    out = []
    for key in data[list(ev_vars)].itertuples(index=False, name=None):
        label = cache.get(key)
        if label is None:
            dist = engine.posterior(symptom, dict(zip(ev_vars, key)))
            if len(states) == 2:
                label = "yes" if dist["yes"] > threshold else "no"
            else:
                probs = [dist[s] for s in states]
                label = states[int(np.argmax(probs))]
            cache[key] = label
        out.append(label)
    return out


def evaluate_network(
    spec: NetworkSpec,
    test: pd.DataFrame,
    settings: Sequence[str] = ("all", "no-sympt", "realistic"),
    symptoms: Sequence[str] = SYMPTOMS,
    threshold: float = 0.5,
) -> EvalReport:
    """Predict every symptom under every setting and score against the table."""
    engine = InferenceEngine(spec)
    report = EvalReport()
    for symptom in symptoms:
        states = spec.variable(symptom).states
        truth = test[symptom].astype(str).tolist()
        for name in settings:
            pred = predict_labels(engine, test, symptom, name, threshold)
            if len(states) == 2:
                entry = EvalEntry(symptom, name, "f1", binary_f1(truth, pred), len(test), threshold)
            else:
                entry = EvalEntry(
                    symptom, name, "macro_f1", macro_f1(truth, pred, states), len(test), threshold
                )
            report.entries.append(entry)
    return report
