"""Exact inference by variable elimination over compiled factors.

Parametric CPDs (noisy-OR, logistic, Poisson pair) are compiled to dense
factors by evaluating them pointwise. The count outcome is bucketed into the
states "0".."15" plus ">=15", where the last bucket takes whatever pmf mass is
left, so every compiled column sums to one exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .factors import Factor, marginalize, product_all, reduce_factor
from .network import (
    CPD,
    CategoricalCPT,
    NetworkSpec,
    PoissonPairCPD,
    eval_cpd,
    eval_lambda,
    topological_order,
)

DEFAULT_DAYS_CAP = 15

SYMPTOMS = ("dyspnea", "cough", "pain", "fever", "nasal")
BACKGROUND = ("asthma", "smoking", "copd", "hay_fever")
DIAGNOSES = ("pneumonia", "common_cold")


class ImpossibleEvidenceError(RuntimeError):
    """The evidence assignment has probability zero under the network."""


def day_bucket_states(cap: int = DEFAULT_DAYS_CAP) -> tuple[str, ...]:
    return tuple(str(k) for k in range(cap + 1)) + (f">={cap}",)


def bucket_count(count: int, cap: int = DEFAULT_DAYS_CAP) -> str:
    """Map a raw day count onto its inference bucket label."""
    count = int(count)
    if count < 0:
        raise ValueError(f"day count must be nonnegative, got {count}")
    return str(count) if count <= cap else f">={cap}"


@dataclass(frozen=True)
class EvidenceSetting:
    """Which tabular variables are conditioned on when predicting a symptom."""

    name: str
    base_variables: tuple[str, ...]
    include_other_symptoms: bool

    def evidence_variables(self, symptom: str) -> tuple[str, ...]:
        if symptom not in SYMPTOMS:
            raise ValueError(f"{symptom!r} is not a symptom variable")
        out = [v for v in self.base_variables if v != symptom]
        if self.include_other_symptoms:
            out.extend(s for s in SYMPTOMS if s != symptom)
        return tuple(out)


_NON_SYMPTOM = BACKGROUND + ("season",) + DIAGNOSES + (
    "policy",
    "self_employed",
    "antibiotics",
    "days_at_home",
)

EVIDENCE_SETTINGS = {
    "all": EvidenceSetting("all", _NON_SYMPTOM, include_other_symptoms=True),
    "no-sympt": EvidenceSetting("no-sympt", _NON_SYMPTOM, include_other_symptoms=False),
    "realistic": EvidenceSetting(
        "realistic",
        BACKGROUND + DIAGNOSES + ("season", "antibiotics"),
        include_other_symptoms=False,
    ),
}


def compile_factor(cpd: CPD, spec: NetworkSpec, days_cap: int = DEFAULT_DAYS_CAP) -> Factor:
    """Dense factor over (child, parents) whose entries equal eval_cpd pointwise."""
    if isinstance(cpd, PoissonPairCPD):
        return _compile_poisson(cpd, spec, days_cap)
    child_states = spec.variable(cpd.child).states
    parents = cpd.parents
    parent_domains = [spec.variable(p).states for p in parents]
    shape = (len(child_states),) + tuple(len(d) for d in parent_domains)
    values = np.empty(shape)
    for combo_idx in itertools.product(*(range(len(d)) for d in parent_domains)):
        assignment = {p: parent_domains[i][combo_idx[i]] for i, p in enumerate(parents)}
        if isinstance(cpd, CategoricalCPT):
            col = cpd.column(tuple(assignment[p] for p in parents))
            column = [float(col[s]) for s in child_states]
        else:
            column = [eval_cpd(cpd, s, assignment) for s in child_states]
        values[(slice(None),) + combo_idx] = column
    return Factor((cpd.child,) + parents, values)


def _compile_poisson(cpd: PoissonPairCPD, spec: NetworkSpec, cap: int) -> Factor:
    parents = cpd.parents
    parent_domains = [spec.variable(p).states for p in parents]
    n_states = cap + 2
    shape = (n_states,) + tuple(len(d) for d in parent_domains)
    values = np.empty(shape)
    ks = np.arange(cap + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in ks])
    for combo_idx in itertools.product(*(range(len(d)) for d in parent_domains)):
        assignment = {p: parent_domains[i][combo_idx[i]] for i, p in enumerate(parents)}
        lam = eval_lambda(cpd, str(assignment[cpd.switch]), assignment)
        pmf = np.exp(-lam + ks * math.log(lam) - log_fact)
        tail = max(0.0, 1.0 - pmf.sum())
        values[(slice(None),) + combo_idx] = np.concatenate([pmf, [tail]])
    return Factor((cpd.child,) + parents, values)


def min_fill_order(scopes: list[tuple[str, ...]], variables: list[str]) -> list[str]:
    """Greedy min-fill elimination order with alphabetical tie-break."""
    neighbors: dict[str, set[str]] = {v: set() for v in variables}
    for scope in scopes:
        present = [v for v in scope if v in neighbors]
        for a in present:
            neighbors[a].update(x for x in present if x != a)
    order = []
    remaining = set(variables)
    while remaining:
        best = None
        best_fill = None
        for v in sorted(remaining):
            nb = [u for u in neighbors[v] if u in remaining]
            fill = sum(
                1
                for a, b in itertools.combinations(nb, 2)
                if b not in neighbors[a]
            )
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        nb = [u for u in neighbors[best] if u in remaining]
        for a, b in itertools.combinations(nb, 2):
            neighbors[a].add(b)
            neighbors[b].add(a)
        order.append(best)
        remaining.remove(best)
    return order


class InferenceEngine:
    """Variable elimination over a validated spec; factors are compiled once.

    Queries are pure and the engine holds no mutable state after construction,
    so one engine can serve concurrent queries.
    """

    def __init__(self, spec: NetworkSpec, days_cap: int = DEFAULT_DAYS_CAP):
        self.spec = spec
        self.days_cap = days_cap
        self._factors = [compile_factor(spec.cpd(v), spec, days_cap) for v in spec.variable_names]
        self._states: dict[str, tuple[str, ...]] = {}
        for v in spec.variables:
            cpd = spec.cpd(v.name)
            if isinstance(cpd, PoissonPairCPD):
                self._states[v.name] = day_bucket_states(days_cap)
            else:
                self._states[v.name] = v.states

    def states(self, var: str) -> tuple[str, ...]:
        return self._states[var]

    def _state_index(self, var: str, state) -> int:
        cpd = self.spec.cpd(var)
        if isinstance(cpd, PoissonPairCPD) and not isinstance(state, str):
            state = bucket_count(state, self.days_cap)
        try:
            return self._states[var].index(str(state))
        except ValueError:
            raise ValueError(f"unknown state {state!r} for variable {var!r}") from None

    def posterior(self, query: str, evidence: dict, order: list[str] | None = None) -> dict[str, float]:
        """Exact P(query | evidence), normalized; raises on impossible evidence."""
        self.spec.variable(query)
        if query in evidence:
            raise ValueError(f"query variable {query!r} appears in the evidence")
        ev_idx = {v: self._state_index(v, s) for v, s in evidence.items()}

        reduced = []
        for f in self._factors:
            for v, idx in ev_idx.items():
                if v in f.scope:
                    f = reduce_factor(f, v, idx)
            reduced.append(f)

        hidden = [
            v for v in self.spec.variable_names if v != query and v not in ev_idx
        ]
        if order is None:
            order = min_fill_order([f.scope for f in reduced], hidden)
        else:
            if sorted(order) != sorted(hidden):
                raise ValueError("elimination order must cover exactly the hidden variables")

        factors = reduced
        for v in order:
            related = [f for f in factors if v in f.scope]
            if not related:
                continue
            factors = [f for f in factors if v not in f.scope]
            factors.append(marginalize(product_all(related), v))

        result = product_all(factors)
        if result.scope != (query,):
            raise AssertionError(f"elimination left scope {result.scope}, expected ({query!r},)")
        total = float(result.values.sum())
        if total < 1e-300:
            raise ImpossibleEvidenceError(
                f"evidence {evidence!r} has probability zero under the network"
            )
        probs = result.values / total
        return {s: float(p) for s, p in zip(self._states[query], probs)}

    def predict_symptom(self, record: dict, symptom: str, setting) -> dict[str, float]:
        """Posterior over a symptom given the record's evidence under a setting."""
        if isinstance(setting, str):
            try:
                setting = EVIDENCE_SETTINGS[setting]
            except KeyError:
                raise ValueError(
                    f"unknown evidence setting {setting!r}; have {sorted(EVIDENCE_SETTINGS)}"
                ) from None
        evidence = {v: record[v] for v in setting.evidence_variables(symptom)}
        return self.posterior(symptom, evidence)


def eliminate(spec: NetworkSpec, query: str, evidence: dict, days_cap: int = DEFAULT_DAYS_CAP) -> dict[str, float]:
    """One-shot posterior; builds a throwaway engine. Use InferenceEngine for batches."""
    return InferenceEngine(spec, days_cap).posterior(query, evidence)


def predict_symptom(spec: NetworkSpec, record: dict, symptom: str, setting) -> dict[str, float]:
    return InferenceEngine(spec).predict_symptom(record, symptom, setting)
