"""Sklearn-style estimator facade over network learning and exact inference.

``SymptomClassifier`` behaves like a scikit-learn classifier: hyperparameters
in ``__init__`` (so ``get_params``/``set_params``/``clone`` work), ``fit`` on a
records table, ``predict``/``predict_proba`` on held-out records. Internally it
learns the full generative network and answers queries by variable elimination,
so the same fitted object serves any evidence setting.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator

from .inference import EVIDENCE_SETTINGS, InferenceEngine
from .learning import FitConfig, learn_network
from .serialization import load_bundled_network
from .validation import check_records_frame


class SymptomClassifier(BaseEstimator):
    """Predict one symptom from tabular evidence with a learned Bayesian network.

    Parameters
    ----------
    symptom : which symptom variable to predict.
    setting : evidence setting name ("all", "no-sympt" or "realistic").
    structure : NetworkSpec giving the DAG and CPD families; defaults to the
        bundled respiratory network.
    epochs, batch_size, learning_rate, smoothing, seed : fit hyperparameters,
        forwarded to the per-family learners.
    """

    def __init__(
        self,
        symptom: str = "cough",
        setting: str = "all",
        structure=None,
        epochs: int | None = None,
        batch_size: int = 50,
        learning_rate: float = 0.01,
        smoothing: float = 1.0,
        seed: int = 0,
    ):
        self.symptom = symptom
        self.setting = setting
        self.structure = structure
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.smoothing = smoothing
        self.seed = seed

    def fit(self, X: pd.DataFrame, y=None):
        """Learn all network parameters from a complete records table."""
        structure = self.structure if self.structure is not None else load_bundled_network()
        if self.setting not in EVIDENCE_SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}; have {sorted(EVIDENCE_SETTINGS)}")
        check_records_frame(X, structure)
        config = FitConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            smoothing_pseudocount=self.smoothing,
            seed=self.seed,
        )
        self.network_ = learn_network(X, structure, config)
        self.engine_ = InferenceEngine(self.network_)
        self.classes_ = np.array(structure.variable(self.symptom).states)
        return self

    def predict_proba(self, X: pd.DataFrame) -> np.ndarray:
        """Posterior probabilities per record, columns ordered as ``classes_``."""
        self._check_fitted()
        setting = EVIDENCE_SETTINGS[self.setting]
        ev_vars = setting.evidence_variables(self.symptom)
        check_records_frame(X, self.network_, require_all=False)
        missing = [v for v in ev_vars if v not in X.columns]
        if missing:
            raise ValueError(f"records are missing evidence columns {missing}")
        out = np.empty((len(X), len(self.classes_)))
        cache: dict[tuple, np.ndarray] = {}
        rows = X[list(ev_vars)].itertuples(index=False, name=None)
        for i, key in enumerate(rows):
            probs = cache.get(key)
            if probs is None:
                evidence = dict(zip(ev_vars, key))
                dist = self.engine_.posterior(self.symptom, evidence)
                probs = np.array([dist[s] for s in self.classes_])
                cache[key] = probs
            out[i] = probs
        return out

    def predict(self, X: pd.DataFrame) -> np.ndarray:
        """Threshold 0.5 for binary symptoms; argmax with declared-state tie-break otherwise."""
        proba = self.predict_proba(X)
        if len(self.classes_) == 2:
            return np.where(proba[:, 1] > 0.5, self.classes_[1], self.classes_[0])
        return self.classes_[np.argmax(proba, axis=1)]

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise RuntimeError("this SymptomClassifier instance is not fitted yet")
