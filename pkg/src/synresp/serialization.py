"""Network spec JSON format: load, save, and the bundled reference network.

The on-disk document has top-level keys ``variables`` and ``cpds``; each CPD
carries a ``family`` discriminator (``cpt`` | ``noisy_or`` | ``logistic`` |
``poisson_pair``). See docs/network_format.md for the field-by-field schema.
Round-tripping a file through load -> save -> load is lossless.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .network import (
    CategoricalCPT,
    LogisticCPD,
    LogisticTerm,
    NetworkSpec,
    NoisyOrCPD,
    PoissonBranch,
    PoissonPairCPD,
    VariableDef,
)

BUNDLED_NETWORK = "respiratory_network.json"


def spec_to_dict(spec: NetworkSpec) -> dict:
    return {
        "name": spec.name,
        "variables": [
            {"name": v.name, "kind": v.kind, "states": list(v.states)} for v in spec.variables
        ],
        "cpds": [_cpd_to_dict(c) for c in spec.cpds],
    }


def _cpd_to_dict(cpd) -> dict:
    if isinstance(cpd, CategoricalCPT):
        return {
            "family": "cpt",
            "child": cpd.child,
            "parents": list(cpd.parents),
            "table": [
                {"given": dict(zip(cpd.parents, combo)), "probs": dict(probs)}
                for combo, probs in cpd.table.items()
            ],
        }
    if isinstance(cpd, NoisyOrCPD):
        return {
            "family": "noisy_or",
            "child": cpd.child,
            "leak": cpd.leak,
            "causes": [
                {"variable": v, "activation": p} for v, p in zip(cpd.causes, cpd.activations)
            ],
        }
    if isinstance(cpd, LogisticCPD):
        return {
            "family": "logistic",
            "child": cpd.child,
            "bias": cpd.bias,
            "terms": [
                {"variable": t.variable, "coefficients": dict(t.coefficients)} for t in cpd.terms
            ],
        }
    if isinstance(cpd, PoissonPairCPD):
        return {
            "family": "poisson_pair",
            "child": cpd.child,
            "switch": cpd.switch,
            "branches": {
                state: {
                    "bias": br.bias,
                    "terms": [
                        {"variable": t.variable, "coefficients": dict(t.coefficients)}
                        for t in br.terms
                    ],
                }
                for state, br in cpd.branches.items()
            },
        }
    raise TypeError(f"unsupported CPD type {type(cpd).__name__}")


def spec_from_dict(doc: dict) -> NetworkSpec:
    variables = tuple(
        VariableDef(name=v["name"], states=tuple(v["states"]), kind=v["kind"])
        for v in doc["variables"]
    )
    cpds = tuple(_cpd_from_dict(c) for c in doc["cpds"])
    return NetworkSpec(variables=variables, cpds=cpds, name=doc.get("name", "network"))


def _terms_from(items) -> tuple[LogisticTerm, ...]:
    return tuple(
        LogisticTerm(variable=t["variable"], coefficients=dict(t["coefficients"])) for t in items
    )


def _cpd_from_dict(c: dict):
    family = c["family"]
    if family == "cpt":
        parents = tuple(c["parents"])
        table = {}
        for row in c["table"]:
            key = tuple(str(row["given"][p]) for p in parents)
            table[key] = dict(row["probs"])
        return CategoricalCPT(child=c["child"], parents=parents, table=table)
    if family == "noisy_or":
        return NoisyOrCPD(
            child=c["child"],
            causes=tuple(item["variable"] for item in c["causes"]),
            leak=float(c["leak"]),
            activations=tuple(float(item["activation"]) for item in c["causes"]),
        )
    if family == "logistic":
        return LogisticCPD(child=c["child"], bias=float(c["bias"]), terms=_terms_from(c["terms"]))
    if family == "poisson_pair":
        return PoissonPairCPD(
            child=c["child"],
            switch=c["switch"],
            branches={
                state: PoissonBranch(bias=float(br["bias"]), terms=_terms_from(br["terms"]))
                for state, br in c["branches"].items()
            },
        )
    raise ValueError(f"unknown CPD family {family!r}")


def save_network(spec: NetworkSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n", encoding="utf-8")


def load_network(path: str | Path) -> NetworkSpec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return spec_from_dict(doc)


def load_bundled_network() -> NetworkSpec:
    """The expert-parameterized respiratory consultation network shipped with the package."""
    text = resources.files("synresp.resources").joinpath(BUNDLED_NETWORK).read_text("utf-8")
    return spec_from_dict(json.loads(text))
