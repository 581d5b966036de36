"""Maximum-likelihood parameter learning for every CPD family.

Tables are fit by smoothed counting. The noisy-OR, logistic and Poisson models
are fit by minibatch Adam on unconstrained parameters (probabilities live as
logits), iterating 10 epochs for noisy-OR and 15 for the regressions, batch 50,
learning rate 0.01, parameters initialized uniformly on (-1, 1) from the config
seed. Fits are deterministic given (data, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import pandas as pd

from .network import (
    CategoricalCPT,
    LogisticCPD,
    LogisticTerm,
    NetworkSpec,
    NoisyOrCPD,
    PoissonBranch,
    PoissonPairCPD,
    eval_cpd,
    sigmoid,
)

NOISY_OR_EPOCHS = 10
REGRESSION_EPOCHS = 15

# (variable, states that carry a coefficient); reference states are implicit.
Inputs = Sequence[tuple[str, Sequence[str]]]


@dataclass(frozen=True)
class FitConfig:
    epochs: int | None = None  # None = per-family default
    batch_size: int = 50
    learning_rate: float = 0.01
    smoothing_pseudocount: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs is not None and self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.smoothing_pseudocount < 0:
            raise ValueError("smoothing_pseudocount must be >= 0")

    def epochs_for(self, family: str) -> int:
        if self.epochs is not None:
            return self.epochs
        return NOISY_OR_EPOCHS if family == "noisy_or" else REGRESSION_EPOCHS


def fit_cpt(
    data: pd.DataFrame,
    child: str,
    parents: Sequence[str],
    pseudocount: float = 1.0,
    states: Mapping[str, Sequence[str]] | None = None,
) -> CategoricalCPT:
    """Smoothed-count CPT: (count + a) / (column_total + a * n_child_states)."""
    if len(data) == 0:
        raise ValueError("cannot fit a CPT on empty data")
    parents = tuple(parents)

    def domain(var: str) -> tuple[str, ...]:
        if states is not None and var in states:
            dom = tuple(states[var])
            seen = set(data[var].astype(str))
            unknown = seen - set(dom)
            if unknown:
                raise ValueError(f"unknown state(s) {sorted(unknown)} in data column {var!r}")
            return dom
        return tuple(sorted(set(data[var].astype(str))))

    child_states = domain(child)
    parent_domains = [domain(p) for p in parents]

    import itertools

    counts: dict[tuple[str, ...], dict[str, float]] = {
        combo: {s: 0.0 for s in child_states}
        for combo in itertools.product(*parent_domains)
    }
    cols = [data[p].astype(str) for p in parents]
    child_col = data[child].astype(str)
    for i in range(len(data)):
        key = tuple(c.iat[i] for c in cols)
        counts[key][child_col.iat[i]] += 1.0

    table = {}
    k = len(child_states)
    for combo, col in counts.items():
        total = sum(col.values()) + pseudocount * k
        if total == 0:
            table[combo] = {s: 1.0 / k for s in child_states}
        else:
            table[combo] = {s: (col[s] + pseudocount) / total for s in child_states}
    return CategoricalCPT(child=child, parents=parents, table=table)


def _adam(
    grad_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    nll_fn: Callable[[np.ndarray], float],
    n_params: int,
    n_rows: int,
    epochs: int,
    config: FitConfig,
    callback: Callable[[int, float], None] | None = None,
) -> np.ndarray:
    """Minibatch Adam descent; grad_fn(theta, batch_index_array) -> gradient."""
    rng = np.random.default_rng(config.seed)
    theta = rng.uniform(-1.0, 1.0, size=n_params)
    m = np.zeros(n_params)
    v = np.zeros(n_params)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0
    for epoch in range(epochs):
        perm = rng.permutation(n_rows)
        for start in range(0, n_rows, config.batch_size):
            batch = perm[start : start + config.batch_size]
            g = grad_fn(theta, batch)
            t += 1
            m = beta1 * m + (1 - beta1) * g
            v = beta2 * v + (1 - beta2) * g * g
            mh = m / (1 - beta1**t)
            vh = v / (1 - beta2**t)
            theta = theta - config.learning_rate * mh / (np.sqrt(vh) + eps)
        if callback is not None:
            callback(epoch, nll_fn(theta))
    return theta


def _indicator_matrix(data: pd.DataFrame, inputs: Inputs) -> tuple[np.ndarray, list[tuple[str, str]]]:
    cols = []
    labels: list[tuple[str, str]] = []
    for var, var_states in inputs:
        col = data[var].astype(str).to_numpy()
        for s in var_states:
            cols.append((col == s).astype(float))
            labels.append((var, s))
    X = np.column_stack(cols) if cols else np.empty((len(data), 0))
    return X, labels


def fit_noisy_or(
    data: pd.DataFrame,
    child: str,
    causes: Sequence[str],
    config: FitConfig = FitConfig(),
    callback: Callable[[int, float], None] | None = None,
) -> NoisyOrCPD:
    """Maximum-likelihood noisy-OR via Adam on logit-parameterized probabilities."""
    causes = tuple(causes)
    y = (data[child].astype(str) == "yes").to_numpy(dtype=float)
    X = np.column_stack(
        [np.ones(len(data))]
        + [(data[c].astype(str) == "yes").to_numpy(dtype=float) for c in causes]
    )

    def nll(theta: np.ndarray, rows=None) -> float:
        Xb = X if rows is None else X[rows]
        yb = y if rows is None else y[rows]
        p = 1.0 / (1.0 + np.exp(-theta))
        q = np.exp(Xb @ np.log1p(-np.clip(p, None, 1 - 1e-12)))
        q = np.clip(q, 1e-12, 1 - 1e-12)
        return float(-(yb * np.log(1 - q) + (1 - yb) * np.log(q)).sum())

    def grad(theta: np.ndarray, rows: np.ndarray) -> np.ndarray:
        Xb, yb = X[rows], y[rows]
        p = 1.0 / (1.0 + np.exp(-theta))
        q = np.exp(Xb @ np.log1p(-np.clip(p, None, 1 - 1e-12)))
        q = np.clip(q, 1e-12, 1 - 1e-12)
        # dNLL/dtheta_j = sum_i x_ij * p_j * ((1 - y_i) - y_i * q_i / (1 - q_i))
        w = (1 - yb) - yb * q / (1 - q)
        return (Xb.T @ w) * p

    theta = _adam(grad, nll, X.shape[1], len(data), config.epochs_for("noisy_or"), config, callback)
    probs = 1.0 / (1.0 + np.exp(-theta))
    return NoisyOrCPD(
        child=child, causes=causes, leak=float(probs[0]), activations=tuple(float(p) for p in probs[1:])
    )


def fit_logistic(
    data: pd.DataFrame,
    child: str,
    inputs: Inputs,
    config: FitConfig = FitConfig(),
    callback: Callable[[int, float], None] | None = None,
) -> LogisticCPD:
    """Maximum-likelihood logistic regression on indicator-encoded inputs."""
    y = (data[child].astype(str) == "yes").to_numpy(dtype=float)
    X, labels = _indicator_matrix(data, inputs)
    Xb1 = np.column_stack([np.ones(len(data)), X])

    def nll(theta: np.ndarray) -> float:
        z = Xb1 @ theta
        # log(1 + e^z) - y z, computed stably
        return float((np.logaddexp(0.0, z) - y * z).sum())

    def grad(theta: np.ndarray, rows: np.ndarray) -> np.ndarray:
        Xr, yr = Xb1[rows], y[rows]
        p = 1.0 / (1.0 + np.exp(-(Xr @ theta)))
        return Xr.T @ (p - yr)

    theta = _adam(grad, nll, Xb1.shape[1], len(data), config.epochs_for("logistic"), config, callback)
    return LogisticCPD(child=child, bias=float(theta[0]), terms=_terms_from_theta(labels, theta[1:]))


def _terms_from_theta(labels: list[tuple[str, str]], coefs: np.ndarray) -> tuple[LogisticTerm, ...]:
    by_var: dict[str, dict[str, float]] = {}
    order: list[str] = []
    for (var, state), c in zip(labels, coefs):
        if var not in by_var:
            by_var[var] = {}
            order.append(var)
        by_var[var][state] = float(c)
    return tuple(LogisticTerm(variable=v, coefficients=by_var[v]) for v in order)


DEFAULT_DAYS_INPUTS: Inputs = (
    ("dyspnea", ("yes",)),
    ("cough", ("yes",)),
    ("pain", ("yes",)),
    ("nasal", ("yes",)),
    ("fever", ("low", "high")),
    ("self_employed", ("yes",)),
)


def fit_poisson_branch(
    data: pd.DataFrame,
    child: str,
    inputs: Inputs,
    config: FitConfig,
    epochs: int,
    callback: Callable[[int, float], None] | None = None,
) -> PoissonBranch:
    y = data[child].to_numpy(dtype=float)
    if np.any(y < 0) or np.any(y != np.floor(y)):
        raise ValueError(f"column {child!r} must hold nonnegative integer counts")
    X, labels = _indicator_matrix(data, inputs)
    Xb1 = np.column_stack([np.ones(len(data)), X])

    def nll(theta: np.ndarray) -> float:
        z = Xb1 @ theta
        return float((np.exp(z) - y * z).sum())

    def grad(theta: np.ndarray, rows: np.ndarray) -> np.ndarray:
        Xr, yr = Xb1[rows], y[rows]
        lam = np.exp(Xr @ theta)
        return Xr.T @ (lam - yr)

    theta = _adam(grad, nll, Xb1.shape[1], len(data), epochs, config, callback)
    return PoissonBranch(bias=float(theta[0]), terms=_terms_from_theta(labels, theta[1:]))


def fit_poisson_pair(
    data: pd.DataFrame,
    config: FitConfig = FitConfig(),
    child: str = "days_at_home",
    switch: str = "antibiotics",
    inputs: Inputs = DEFAULT_DAYS_INPUTS,
    callback: Callable[[int, float], None] | None = None,
) -> PoissonPairCPD:
    """Fit one Poisson regression per switch state on that state's rows."""
    branches = {}
    epochs = config.epochs_for("poisson_pair")
    for state in ("no", "yes"):
        rows = data[data[switch].astype(str) == state]
        if len(rows) == 0:
            raise ValueError(f"cannot fit {child!r}: branch {switch}={state!r} has no rows")
        branches[state] = fit_poisson_branch(rows, child, inputs, config, epochs, callback)
    return PoissonPairCPD(child=child, switch=switch, branches=branches)


def _subseed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(int(seed), int(index))).generate_state(1)[0])


def learn_network(data: pd.DataFrame, structure: NetworkSpec, config: FitConfig = FitConfig()) -> NetworkSpec:
    """Refit every CPD of ``structure`` from data, keeping families and parents.

    Numeric parameters in ``structure`` are ignored; only the DAG, the CPD
    families, the term encodings and the declared states are used.
    """
    cpds = []
    for idx, name in enumerate(structure.variable_names):
        template = structure.cpd(name)
        sub = FitConfig(
            epochs=config.epochs,
            batch_size=config.batch_size,
            learning_rate=config.learning_rate,
            smoothing_pseudocount=config.smoothing_pseudocount,
            seed=_subseed(config.seed, idx),
        )
        if isinstance(template, CategoricalCPT):
            states = {v.name: v.states for v in structure.variables}
            cpds.append(
                fit_cpt(data, name, template.parents, config.smoothing_pseudocount, states)
            )
        elif isinstance(template, NoisyOrCPD):
            cpds.append(fit_noisy_or(data, name, template.causes, sub))
        elif isinstance(template, LogisticCPD):
            inputs = [(t.variable, tuple(t.coefficients)) for t in template.terms]
            cpds.append(fit_logistic(data, name, inputs, sub))
        elif isinstance(template, PoissonPairCPD):
            some_branch = next(iter(template.branches.values()))
            inputs = [(t.variable, tuple(t.coefficients)) for t in some_branch.terms]
            cpds.append(fit_poisson_pair(data, sub, name, template.switch, inputs))
        else:
            raise TypeError(f"unsupported CPD template {type(template).__name__}")
    return NetworkSpec(variables=structure.variables, cpds=tuple(cpds), name=structure.name + "-learned")


def log_likelihood(spec: NetworkSpec, data: pd.DataFrame) -> dict[str, float]:
    """Per-variable total log-likelihood of the data under the spec."""
    out = {}
    records = data.to_dict("records")
    for name in spec.variable_names:
        cpd = spec.cpd(name)
        total = 0.0
        for rec in records:
            p = eval_cpd(cpd, rec[name] if not isinstance(cpd, PoissonPairCPD) else int(rec[name]), rec)
            total += math.log(max(p, 1e-300))
        out[name] = total
    return out
