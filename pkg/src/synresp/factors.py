"""Dense factors over named discrete variables, backed by numpy arrays.

A factor's ``values`` array has one axis per scope variable, in scope order.
State labels live outside the factor; callers index by integer state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Factor:
    scope: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != len(self.scope):
            raise ValueError(
                f"factor over {self.scope} needs rank {len(self.scope)}, got {self.values.ndim}"
            )

    def check(self) -> None:
        if len(set(self.scope)) != len(self.scope):
            raise ValueError(f"duplicate variables in scope {self.scope}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("factor has non-finite entries")
        if np.any(self.values < 0):
            raise ValueError("factor has negative entries")

    def axis(self, var: str) -> int:
        return self.scope.index(var)


def product(a: Factor, b: Factor) -> Factor:
    """Pointwise product on the union scope (a's variables first)."""
    scope = a.scope + tuple(v for v in b.scope if v not in a.scope)
    av = _embed(a, scope, b)
    bv = _embed(b, scope, a)
    return Factor(scope, av * bv)


def _embed(f: Factor, scope: tuple[str, ...], other: Factor) -> np.ndarray:
    # Move f's axes into the union order, then add singleton axes for the rest.
    order = sorted(range(len(f.scope)), key=lambda i: scope.index(f.scope[i]))
    arr = np.transpose(f.values, order)
    shape = []
    k = 0
    sorted_scope = [f.scope[i] for i in order]
    for v in scope:
        if k < len(sorted_scope) and sorted_scope[k] == v:
            shape.append(arr.shape[k])
            k += 1
        else:
            shape.append(1)
    return arr.reshape(shape)


def marginalize(f: Factor, var: str) -> Factor:
    ax = f.axis(var)
    scope = f.scope[:ax] + f.scope[ax + 1 :]
    return Factor(scope, f.values.sum(axis=ax))


def reduce_factor(f: Factor, var: str, state_index: int) -> Factor:
    """Condition on var = state by slicing that axis out."""
    ax = f.axis(var)
    scope = f.scope[:ax] + f.scope[ax + 1 :]
    return Factor(scope, np.take(f.values, state_index, axis=ax))


def product_all(factors: list[Factor]) -> Factor:
    if not factors:
        return Factor((), np.array(1.0))
    out = factors[0]
    for f in factors[1:]:
        out = product(out, f)
    return out
