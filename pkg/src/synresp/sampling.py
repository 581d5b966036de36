"""Ancestral sampling of complete tabular patient records.

Reproducibility contract: record ``i`` of a dataset is drawn from its own
generator seeded with ``SeedSequence(entropy=(seed, i))`` (numpy PCG64), so a
dataset is a pure function of (spec, seed, count) regardless of how records
are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .network import (
    CPD,
    CategoricalCPT,
    LogisticCPD,
    NetworkSpec,
    NoisyOrCPD,
    PoissonPairCPD,
    eval_lambda,
    sigmoid,
    topological_order,
    validate,
)


@dataclass(frozen=True)
class SampleConfig:
    seed: int
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


def record_rng(seed: int, index: int) -> np.random.Generator:
    """The substream used for record ``index`` of a dataset seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(index))))


def _draw_categorical(rng: np.random.Generator, states, probs) -> str:
    u = rng.random()
    acc = 0.0
    for s, p in zip(states, probs):
        acc += p
        if u < acc:
            return s
    return states[-1]


def _draw_poisson(rng: np.random.Generator, lam: float) -> int:
    # Inversion by sequential search; exact and cheap for the small means here.
    u = rng.random()
    k = 0
    p = np.exp(-lam)
    acc = p
    while u >= acc:
        k += 1
        p *= lam / k
        acc += p
        if k > 100 + 20 * lam:  # numerically unreachable tail guard
            break
    return k


def sample_record(spec: NetworkSpec, rng: np.random.Generator, order=None) -> dict:
    """Draw one record, each variable conditioned on its already-sampled parents."""
    if order is None:
        order = topological_order(spec)
    record: dict = {}
    for name in order:
        cpd = spec.cpd(name)
        record[name] = _draw_value(spec, cpd, record, rng)
    return record


def _draw_value(spec: NetworkSpec, cpd: CPD, record: dict, rng: np.random.Generator):
    if isinstance(cpd, CategoricalCPT):
        states = spec.variable(cpd.child).states
        col = cpd.column(tuple(str(record[p]) for p in cpd.parents))
        return _draw_categorical(rng, states, [col[s] for s in states])
    if isinstance(cpd, NoisyOrCPD):
        p_on = cpd.prob_on([record[c] == "yes" for c in cpd.causes])
        return "yes" if rng.random() < p_on else "no"
    if isinstance(cpd, LogisticCPD):
        p_on = sigmoid(cpd.linear(record))
        return "yes" if rng.random() < p_on else "no"
    if isinstance(cpd, PoissonPairCPD):
        lam = eval_lambda(cpd, str(record[cpd.switch]), record)
        return _draw_poisson(rng, lam)
    raise TypeError(f"unsupported CPD type {type(cpd).__name__}")


def sample_dataset(spec: NetworkSpec, config: SampleConfig) -> pd.DataFrame:
    """Sample ``config.count`` records; deterministic given (spec, seed)."""
    problems = validate(spec)
    if problems:
        raise ValueError("invalid network spec: " + "; ".join(problems))
    order = topological_order(spec)
    rows = []
    for i in range(config.count):
        rec = sample_record(spec, record_rng(config.seed, i), order)
        rec["record_id"] = i
        rows.append(rec)
    columns = ["record_id"] + list(spec.variable_names)
    return pd.DataFrame(rows, columns=columns)
