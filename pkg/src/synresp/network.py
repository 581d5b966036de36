"""Bayesian network core: variables, conditional distributions, exact CPD evaluation.

A network is a DAG over discrete variables where every variable carries exactly
one conditional distribution from one of four families: explicit probability
table, noisy-OR, logistic, or a pair of Poisson regressions switched by a
binary parent. A validated ``NetworkSpec`` is immutable and all evaluation
functions here are pure, so specs can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

PROB_TOL = 1e-9

# Number of counts summed when checking that a Poisson pmf is normalized.
POISSON_CHECK_CAP = 200


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def poisson_pmf(k: int, lam: float) -> float:
    """P(K = k) for K ~ Poisson(lam)."""
    if k < 0:
        return 0.0
    return math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1))


@dataclass(frozen=True)
class VariableDef:
    """A discrete variable: name, ordered state labels, and its role in the model."""

    name: str
    states: tuple[str, ...]
    kind: str  # underlying | external | diagnosis | symptom | treatment | outcome

    def state_index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise ValueError(f"unknown state {state!r} for variable {self.name!r}") from None


@dataclass(frozen=True)
class CategoricalCPT:
    """Explicit conditional probability table.

    ``table`` maps a tuple of parent states (in ``parents`` order) to a mapping
    from child state to probability. Root variables use the empty tuple key.
    """

    child: str
    parents: tuple[str, ...]
    table: Mapping[tuple[str, ...], Mapping[str, float]]

    family = "cpt"

    def column(self, parent_states: tuple[str, ...]) -> Mapping[str, float]:
        try:
            return self.table[parent_states]
        except KeyError:
            raise ValueError(
                f"CPT for {self.child!r} has no column for parent assignment {parent_states!r}"
            ) from None


@dataclass(frozen=True)
class NoisyOrCPD:
    """Noisy-OR over binary causes: the child stays off only if the leak and
    every active cause all fail to trigger it independently."""

    child: str
    causes: tuple[str, ...]
    leak: float
    activations: tuple[float, ...]  # aligned with causes

    family = "noisy_or"

    @property
    def parents(self) -> tuple[str, ...]:
        return self.causes

    def prob_on(self, active: Sequence[bool]) -> float:
        q = 1.0 - self.leak
        for a, p in zip(active, self.activations):
            if a:
                q *= 1.0 - p
        return 1.0 - q


@dataclass(frozen=True)
class LogisticTerm:
    """Indicator coefficients for one input variable; reference states carry 0."""

    variable: str
    coefficients: Mapping[str, float]


@dataclass(frozen=True)
class LogisticCPD:
    """Binary child with P(child = on) = sigmoid(bias + sum of indicator terms)."""

    child: str
    bias: float
    terms: tuple[LogisticTerm, ...]

    family = "logistic"

    @property
    def parents(self) -> tuple[str, ...]:
        return tuple(t.variable for t in self.terms)

    def linear(self, assignment: Mapping[str, str]) -> float:
        z = self.bias
        for t in self.terms:
            z += t.coefficients.get(str(assignment[t.variable]), 0.0)
        return z


@dataclass(frozen=True)
class PoissonBranch:
    bias: float
    terms: tuple[LogisticTerm, ...]

    def linear(self, assignment: Mapping[str, str]) -> float:
        z = self.bias
        for t in self.terms:
            z += t.coefficients.get(str(assignment[t.variable]), 0.0)
        return z


@dataclass(frozen=True)
class PoissonPairCPD:
    """Count child drawn from one of two Poisson regressions, selected by the
    state of a binary switch parent."""

    child: str
    switch: str
    branches: Mapping[str, PoissonBranch]  # keyed by switch state

    family = "poisson_pair"

    @property
    def parents(self) -> tuple[str, ...]:
        seen = [self.switch]
        for br in self.branches.values():
            for t in br.terms:
                if t.variable not in seen:
                    seen.append(t.variable)
        return tuple(seen)


CPD = CategoricalCPT | NoisyOrCPD | LogisticCPD | PoissonPairCPD


@dataclass(frozen=True)
class NetworkSpec:
    """Variables plus one CPD per variable; the CPD parent lists induce the DAG."""

    variables: tuple[VariableDef, ...]
    cpds: tuple[CPD, ...]
    name: str = "network"

    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {v.name: v for v in self.variables})
        object.__setattr__(self, "_cpd_by_child", {c.child: c for c in self.cpds})

    def variable(self, name: str) -> VariableDef:
        try:
            return self._by_name[name]
        except KeyError:
            raise ValueError(f"unknown variable {name!r}") from None

    def cpd(self, name: str) -> CPD:
        try:
            return self._cpd_by_child[name]
        except KeyError:
            raise ValueError(f"no CPD for variable {name!r}") from None

    def parents(self, name: str) -> tuple[str, ...]:
        return self.cpd(name).parents

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)


def _check_assignment(cpd: CPD, assignment: Mapping[str, object]) -> None:
    missing = [p for p in cpd.parents if p not in assignment]
    if missing:
        raise ValueError(f"assignment for {cpd.child!r} is missing parents {missing}")


def eval_cpd(cpd: CPD, child_state, assignment: Mapping[str, object]) -> float:
    """Exact P(child = child_state | parent assignment).

    For a ``PoissonPairCPD``, ``child_state`` is a nonnegative integer count and
    the value returned is the pmf of the branch selected by the switch parent.
    """
    _check_assignment(cpd, assignment)
    if isinstance(cpd, CategoricalCPT):
        key = tuple(str(assignment[p]) for p in cpd.parents)
        col = cpd.column(key)
        if child_state not in col:
            raise ValueError(f"unknown state {child_state!r} for variable {cpd.child!r}")
        return float(col[child_state])
    if isinstance(cpd, NoisyOrCPD):
        active = [_binary_on(cpd, p, assignment[p]) for p in cpd.causes]
        p_on = cpd.prob_on(active)
        return _binary_prob(cpd.child, child_state, p_on)
    if isinstance(cpd, LogisticCPD):
        p_on = sigmoid(cpd.linear(assignment))
        return _binary_prob(cpd.child, child_state, p_on)
    if isinstance(cpd, PoissonPairCPD):
        lam = eval_lambda(cpd, str(assignment[cpd.switch]), assignment)
        k = int(child_state)
        if k < 0:
            raise ValueError(f"count for {cpd.child!r} must be nonnegative, got {child_state!r}")
        return poisson_pmf(k, lam)
    raise TypeError(f"unsupported CPD type {type(cpd).__name__}")


def eval_lambda(cpd: PoissonPairCPD, branch: str, assignment: Mapping[str, object]) -> float:
    """Mean of the Poisson branch selected by the given switch state."""
    if branch not in cpd.branches:
        raise ValueError(f"unknown branch {branch!r} for {cpd.child!r}; have {sorted(cpd.branches)}")
    br = cpd.branches[branch]
    for t in br.terms:
        if t.variable not in assignment:
            raise ValueError(f"assignment for {cpd.child!r} is missing parents [{t.variable!r}]")
    return math.exp(br.linear(assignment))


def _binary_on(cpd: CPD, var: str, state) -> bool:
    if state == "yes":
        return True
    if state == "no":
        return False
    raise ValueError(f"variable {var!r} used by {cpd.child!r} must be no/yes, got {state!r}")


def _binary_prob(child: str, state, p_on: float) -> float:
    if state == "yes":
        return p_on
    if state == "no":
        return 1.0 - p_on
    raise ValueError(f"unknown state {state!r} for variable {child!r}")


def topological_order(spec: NetworkSpec) -> list[str]:
    """Parents before children; ties broken by declaration order. Raises on cycles."""
    names = list(spec.variable_names)
    remaining = dict.fromkeys(names)
    order: list[str] = []
    placed: set[str] = set()
    while remaining:
        progressed = False
        for name in names:
            if name in placed or name not in remaining:
                continue
            if all(p in placed for p in spec.parents(name)):
                order.append(name)
                placed.add(name)
                del remaining[name]
                progressed = True
        if not progressed:
            raise ValueError(f"cycle detected among variables {sorted(remaining)}")
    return order


def validate(spec: NetworkSpec) -> list[str]:
    """Collect every invariant violation; an empty list means the spec is valid."""
    violations: list[str] = []
    names = [v.name for v in spec.variables]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        violations.append(f"duplicate variable names: {dupes}")

    for v in spec.variables:
        if len(v.states) < 2:
            violations.append(f"{v.name}: needs at least 2 states, has {len(v.states)}")
        if len(set(v.states)) != len(v.states):
            violations.append(f"{v.name}: duplicate state labels")

    children = [c.child for c in spec.cpds]
    for name in names:
        n = children.count(name)
        if n != 1:
            violations.append(f"{name}: expected exactly one CPD, found {n}")
    for c in spec.cpds:
        if c.child not in spec._by_name:
            violations.append(f"CPD child {c.child!r} is not a declared variable")
            continue
        for p in c.parents:
            if p not in spec._by_name:
                violations.append(f"{c.child}: parent {p!r} is not a declared variable")

    # Structural check must not assume per-family validity below.
    try:
        topological_order(spec)
    except ValueError as exc:
        violations.append(str(exc))

    for c in spec.cpds:
        if c.child not in spec._by_name or any(p not in spec._by_name for p in c.parents):
            continue
        if isinstance(c, CategoricalCPT):
            violations.extend(_validate_cpt(spec, c))
        elif isinstance(c, NoisyOrCPD):
            violations.extend(_validate_noisy_or(spec, c))
        elif isinstance(c, LogisticCPD):
            violations.extend(_validate_logistic(spec, c))
        elif isinstance(c, PoissonPairCPD):
            violations.extend(_validate_poisson(spec, c))
    return violations


def _parent_combos(spec: NetworkSpec, parents: tuple[str, ...]):
    import itertools

    domains = [spec.variable(p).states for p in parents]
    return itertools.product(*domains)


def _validate_cpt(spec: NetworkSpec, c: CategoricalCPT) -> list[str]:
    out = []
    child_states = spec.variable(c.child).states
    expected = set(_parent_combos(spec, c.parents))
    got = set(c.table.keys())
    for combo in expected - got:
        out.append(f"{c.child}: missing CPT column for parents {combo}")
    for combo in got - expected:
        out.append(f"{c.child}: unexpected CPT column key {combo}")
    for combo in sorted(got & expected):
        col = c.table[combo]
        if set(col) != set(child_states):
            out.append(f"{c.child}: column {combo} states {sorted(col)} != {sorted(child_states)}")
            continue
        vals = [col[s] for s in child_states]
        if any(p < 0 or p > 1 for p in vals):
            out.append(f"{c.child}: column {combo} has entries outside [0, 1]")
        if abs(sum(vals) - 1.0) > PROB_TOL:
            out.append(f"{c.child}: column {combo} not normalized (sums to {sum(vals):.12f})")
    return out


def _validate_noisy_or(spec: NetworkSpec, c: NoisyOrCPD) -> list[str]:
    out = []
    if len(c.activations) != len(c.causes):
        out.append(f"{c.child}: {len(c.activations)} activations for {len(c.causes)} causes")
    for name in (c.child, *c.causes):
        if spec.variable(name).states != ("no", "yes"):
            out.append(f"{c.child}: noisy-OR variable {name!r} must have states (no, yes)")
    for p in (c.leak, *c.activations):
        if p < 0 or p > 1:
            out.append(f"{c.child}: probability {p} outside [0, 1]")
    return out


def _validate_logistic(spec: NetworkSpec, c: LogisticCPD) -> list[str]:
    out = []
    if spec.variable(c.child).states != ("no", "yes"):
        out.append(f"{c.child}: logistic child must have states (no, yes)")
    for t in c.terms:
        states = spec.variable(t.variable).states
        for s in t.coefficients:
            if s not in states:
                out.append(f"{c.child}: term {t.variable!r} references unknown state {s!r}")
    return out


def _validate_poisson(spec: NetworkSpec, c: PoissonPairCPD) -> list[str]:
    out = []
    switch_states = spec.variable(c.switch).states
    if switch_states != ("no", "yes"):
        out.append(f"{c.child}: switch {c.switch!r} must have states (no, yes)")
    if set(c.branches) != set(switch_states):
        out.append(f"{c.child}: branches {sorted(c.branches)} do not match switch states")
    for state, br in c.branches.items():
        for t in br.terms:
            states = spec.variable(t.variable).states
            for s in t.coefficients:
                if s not in states:
                    out.append(
                        f"{c.child}: branch {state!r} term {t.variable!r} references unknown state {s!r}"
                    )
    sets = [tuple(t.variable for t in br.terms) for br in c.branches.values()]
    if len(set(sets)) > 1:
        out.append(f"{c.child}: branches disagree on input variables")
    return out
