"""Independent brute-force oracles used to check the fast paths.

The joint-enumeration oracle builds the full joint table (day counts bucketed
exactly as the inference engine does) by direct CPD evaluation and broadcasting
-- no factor algebra, no elimination -- so it shares nothing with the variable
elimination implementation it verifies.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from synresp.network import NetworkSpec, PoissonPairCPD, eval_cpd, eval_lambda


def variable_states(spec: NetworkSpec, days_cap: int = 15) -> dict[str, tuple[str, ...]]:
    out = {}
    for v in spec.variables:
        if isinstance(spec.cpd(v.name), PoissonPairCPD):
            out[v.name] = tuple(str(k) for k in range(days_cap + 1)) + (f">={days_cap}",)
        else:
            out[v.name] = v.states
    return out


def enumerate_joint(spec: NetworkSpec, days_cap: int = 15) -> tuple[list[str], np.ndarray]:
    """Full joint probability array, one axis per variable in declaration order."""
    names = list(spec.variable_names)
    states = variable_states(spec, days_cap)
    shape = tuple(len(states[n]) for n in names)
    joint = np.ones(shape)
    for name in names:
        cpd = spec.cpd(name)
        parents = list(cpd.parents)
        scope = [name] + parents
        block = np.empty(tuple(len(states[v]) for v in scope))
        parent_domains = [states[p] for p in parents]
        for combo in itertools.product(*(range(len(d)) for d in parent_domains)):
            assignment = {p: parent_domains[k][combo[k]] for k, p in enumerate(parents)}
            if isinstance(cpd, PoissonPairCPD):
                lam = eval_lambda(cpd, str(assignment[cpd.switch]), assignment)
                pmf = [math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1))
                       for k in range(days_cap + 1)]
                column = pmf + [max(0.0, 1.0 - sum(pmf))]
            else:
                column = [eval_cpd(cpd, s, assignment) for s in states[name]]
            block[(slice(None),) + combo] = column
        # broadcast the block into the full-rank joint
        expand_shape = [1] * len(names)
        axes = [names.index(v) for v in scope]
        order = np.argsort(axes)
        block = np.transpose(block, order)
        for v, size in zip(scope, (len(states[v]) for v in scope)):
            expand_shape[names.index(v)] = size
        joint = joint * block.reshape(expand_shape)
    return names, joint


def posterior_by_enumeration(
    spec: NetworkSpec,
    query: str,
    evidence: dict,
    days_cap: int = 15,
    _cache: dict = {},
) -> dict[str, float]:
    """P(query | evidence) by slicing and summing the full joint table."""
    key = id(spec)
    if key not in _cache:
        _cache[key] = enumerate_joint(spec, days_cap)
    names, joint = _cache[key]
    states = variable_states(spec, days_cap)
    index: list = [slice(None)] * len(names)
    for var, state in evidence.items():
        if var == query:
            raise ValueError("query in evidence")
        if not isinstance(state, str):
            state = str(state) if int(state) <= days_cap else f">={days_cap}"
        index[names.index(var)] = states[var].index(str(state))
    sub = joint[tuple(index)]
    remaining = [n for n in names if n not in evidence]
    qax = remaining.index(query)
    total_axes = tuple(i for i in range(sub.ndim) if i != qax)
    marg = sub.sum(axis=total_axes)
    z = marg.sum()
    if z <= 0:
        raise ZeroDivisionError("evidence has zero probability")
    return {s: float(p) for s, p in zip(states[query], marg / z)}
