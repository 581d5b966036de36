"""Input validation helpers for record tables."""

from __future__ import annotations

import pandas as pd

from .network import NetworkSpec, PoissonPairCPD


def check_records_frame(data: pd.DataFrame, spec: NetworkSpec, require_all: bool = True) -> pd.DataFrame:
    """Validate a table of records against the spec's variables and states.

    Categorical columns must hold declared state labels; count columns must be
    nonnegative integers. Returns the (unmodified) frame for chaining.
    """
    if not isinstance(data, pd.DataFrame):
        raise TypeError(f"expected a pandas DataFrame, got {type(data).__name__}")
    missing = [v for v in spec.variable_names if v not in data.columns]
    if require_all and missing:
        raise ValueError(f"records are missing columns {missing}")
    for name in spec.variable_names:
        if name not in data.columns:
            continue
        cpd = spec.cpd(name)
        if isinstance(cpd, PoissonPairCPD):
            col = pd.to_numeric(data[name], errors="coerce")
            if col.isna().any():
                raise ValueError(f"column {name!r} has non-numeric entries")
            if (col < 0).any() or (col != col.astype(int)).any():
                raise ValueError(f"column {name!r} must hold nonnegative integer counts")
        else:
            allowed = set(spec.variable(name).states)
            seen = set(data[name].astype(str).unique())
            unknown = seen - allowed
            if unknown:
                raise ValueError(f"column {name!r} has unknown state(s) {sorted(unknown)}")
    return data


def check_assignment(assignment: dict, spec: NetworkSpec) -> dict:
    """Validate an evidence-style {variable: state} mapping."""
    for var, state in assignment.items():
        vd = spec.variable(var)  # raises on unknown variable
        cpd = spec.cpd(var)
        if isinstance(cpd, PoissonPairCPD):
            continue  # counts and bucket labels are both accepted downstream
        if str(state) not in vd.states:
            raise ValueError(f"unknown state {state!r} for variable {var!r}")
    return assignment
