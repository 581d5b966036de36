"""Turn sampled records into note-generation prompts.

For every record we sample which symptoms the note should mention (conditional
on the symptom's value), pick a cause-conditioned descriptor for each mentioned
present symptom, and render one of three prompt variants: the normal prompt, a
special prompt for symptom-free patients with underlying conditions, and a
generic special prompt (asking for three notes at once) for symptom-free
patients without conditions. A deterministic offline note renderer stands in
for the language model so the whole pipeline runs without network access.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .inference import SYMPTOMS

ROUTE_NORMAL = "normal"
ROUTE_SPECIAL_CONDITIONS = "special_with_conditions"
ROUTE_SPECIAL_GENERIC = "special_generic"

GENERIC_NOTE_DELIMITER = "---"
NOTES_PER_GENERIC_PROMPT = 3

CONDITIONS = ("asthma", "smoking", "copd", "hay_fever")

DISPLAY_NAMES = {
    "dyspnea": "dyspnea",
    "cough": "cough",
    "pain": "chest pain",
    "nasal": "nasal symptoms",
    "fever": "fever",
    "asthma": "asthma",
    "smoking": "smoking",
    "copd": "COPD",
    "hay_fever": "hay fever",
}

FEVER_LEVEL_PHRASES = {"high": "a high fever", "low": "a low-grade fever"}


@dataclass(frozen=True)
class MentionPolicy:
    """P(symptom is mentioned in the prompt | symptom state)."""

    probabilities: Mapping[str, Mapping[str, float]]

    def prob(self, symptom: str, state: str) -> float:
        try:
            return self.probabilities[symptom][str(state)]
        except KeyError:
            raise ValueError(f"no mention probability for {symptom}={state!r}") from None


def default_mention_policy() -> MentionPolicy:
    return MentionPolicy(
        {
            "dyspnea": {"yes": 0.95, "no": 0.75},
            "cough": {"yes": 0.95, "no": 0.9},
            "pain": {"yes": 0.75, "no": 0.3},
            "fever": {"high": 0.95, "low": 0.7, "none": 0.4},
            "nasal": {"yes": 0.95, "no": 0.1},
        }
    )


@dataclass(frozen=True)
class DescriptorBank:
    """Cause-conditioned descriptor phrases per symptom.

    ``causes`` lists each symptom's possible causes (its parents in the
    network); ``phrases`` maps (symptom, cause) to candidate descriptors.
    """

    causes: Mapping[str, tuple[str, ...]]
    phrases: Mapping[tuple[str, str], tuple[str, ...]]

    def candidates(self, symptom: str, cause: str) -> tuple[str, ...]:
        return self.phrases.get((symptom, cause), ())


def default_descriptor_bank() -> DescriptorBank:
    causes = {
        "dyspnea": ("asthma", "smoking", "copd", "hay_fever", "pneumonia"),
        "cough": ("asthma", "smoking", "copd", "pneumonia", "common_cold"),
        "pain": ("copd", "cough", "pneumonia", "common_cold"),
        "fever": ("pneumonia", "common_cold"),
        "nasal": ("hay_fever", "common_cold"),
    }
    phrases = {
        ("dyspnea", "asthma"): (
            "attack-related", "at night", "in episodes", "wheezing",
            "difficulty breathing in", "feeling of suffocation", "nighttime stuffiness",
            "provoked by exercise", "light", "severe", "not able to breathe properly",
            "air hunger",
        ),
        ("dyspnea", "smoking"): ("during exercise", "worse in morning", "mild"),
        ("dyspnea", "copd"): (
            "chronic", "worse during flare-up", "worse when lying down",
            "difficulty sleeping", "air hunger",
        ),
        ("dyspnea", "hay_fever"): ("light", "mild", "stuffy feeling", "all closed up"),
        ("dyspnea", "pneumonia"): ("light", "mild", "severe", "no clear cause"),
        ("cough", "asthma"): ("attack-related", "dry"),
        ("cough", "smoking"): ("productive", "mostly in morning", "during exercise", "gurgling"),
        ("cough", "copd"): ("phlegm", "sputum", "gurgling", "worse when lying down"),
        ("cough", "pneumonia"): (
            "for over 7 days", "light", "mild", "severe",
            "non-productive at first and later purulent",
        ),
        ("cough", "common_cold"): (
            "prickly", "irritating", "dry", "phlegm", "sputum", "light", "mild",
            "severe", "constant", "day and night",
        ),
        ("pain", "asthma"): ("tension behind sternum",),
        ("pain", "copd"): ("light", "mild"),
        ("pain", "cough"): (
            "muscle pain", "burning pain in trachea", "burning pain in windpipe",
            "scraping pain in trachea", "scraping pain in windpipe",
        ),
        ("pain", "pneumonia"): (
            "light", "mild", "severe", "localized on right side",
            "localized on left side", "associated with breathing",
        ),
        ("pain", "common_cold"): (
            "burning pain in trachea", "burning pain in windpipe",
            "scraping pain in trachea", "scraping pain in windpipe", "light", "mild",
        ),
    }
    return DescriptorBank(causes=causes, phrases=phrases)


@dataclass(frozen=True)
class Mention:
    state: str
    action: str  # affirm | deny | omit


@dataclass(frozen=True)
class PromptPlan:
    """All note-generation decisions for one record."""

    record_id: int
    route: str
    mentions: Mapping[str, Mention]
    descriptors: Mapping[str, str]
    condition_order: tuple[str, ...]
    symptom_order: tuple[str, ...]
    rng_seed: int | None = None


def symptom_negative(symptom: str, state) -> bool:
    if symptom == "fever":
        return str(state) == "none"
    return str(state) == "no"


def classify_route(record: Mapping) -> str:
    if not all(symptom_negative(s, record[s]) for s in SYMPTOMS):
        return ROUTE_NORMAL
    if any(record[c] == "yes" for c in CONDITIONS):
        return ROUTE_SPECIAL_CONDITIONS
    return ROUTE_SPECIAL_GENERIC


def select_descriptor(symptom: str, record: Mapping, bank: DescriptorBank, rng: np.random.Generator) -> str | None:
    """Pick a descriptor from the strongest active cause's list.

    Pneumonia overrules everything, then common cold; any other combination of
    active causes pools all their phrases into one bag. No active cause (the
    symptom fired through the leak) means no descriptor.
    """
    active = [c for c in bank.causes.get(symptom, ()) if record.get(c) == "yes"]
    if not active:
        return None
    if "pneumonia" in active:
        pool = bank.candidates(symptom, "pneumonia")
    elif "common_cold" in active and bank.candidates(symptom, "common_cold"):
        pool = bank.candidates(symptom, "common_cold")
    else:
        pool = tuple(p for c in active for p in bank.candidates(symptom, c))
    if not pool:
        return None
    return pool[rng.integers(len(pool))]


def plan_prompt(
    record: Mapping,
    policy: MentionPolicy | None = None,
    bank: DescriptorBank | None = None,
    rng: np.random.Generator | None = None,
    record_id: int | None = None,
    rng_seed: int | None = None,
) -> PromptPlan:
    """Sample the mention flags, descriptors and orderings for one record."""
    policy = policy or default_mention_policy()
    bank = bank or default_descriptor_bank()
    rng = rng if rng is not None else np.random.default_rng(rng_seed)

    mentions = {}
    for s in SYMPTOMS:
        state = str(record[s])
        mentioned = rng.random() < policy.prob(s, state)
        if not mentioned:
            action = "omit"
        elif symptom_negative(s, state):
            action = "deny"
        else:
            action = "affirm"
        mentions[s] = Mention(state=state, action=action)

    descriptors = {}
    for s in SYMPTOMS:
        if mentions[s].action == "affirm":
            d = select_descriptor(s, record, bank, rng)
            if d is not None:
                descriptors[s] = d

    symptom_order = tuple(str(s) for s in rng.permutation(list(SYMPTOMS)))
    present = [c for c in CONDITIONS if record[c] == "yes"]
    condition_order = tuple(str(c) for c in rng.permutation(present)) if present else ()

    rid = record_id if record_id is not None else int(record.get("record_id", -1))
    return PromptPlan(
        record_id=rid,
        route=classify_route(record),
        mentions=mentions,
        descriptors=descriptors,
        condition_order=condition_order,
        symptom_order=symptom_order,
        rng_seed=rng_seed,
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_TEMPLATE_FILES = {
    "normal": "note_prompt.txt",
    "special_with_conditions": "note_prompt_special_conditions.txt",
    "special_generic": "note_prompt_special_generic.txt",
    "compact": "compact_prompt.txt",
    "offline_note": "offline_note.txt",
}


@dataclass(frozen=True)
class PromptTemplates:
    normal: str
    special_with_conditions: str
    special_generic: str
    compact: str
    offline_note: str


def load_templates(directory: str | Path | None = None) -> PromptTemplates:
    """Load prompt templates from a directory, or the bundled defaults."""
    texts = {}
    for key, filename in _TEMPLATE_FILES.items():
        if directory is not None:
            texts[key] = (Path(directory) / filename).read_text(encoding="utf-8")
        else:
            texts[key] = (
                resources.files("synresp.resources.templates").joinpath(filename).read_text("utf-8")
            )
    return PromptTemplates(**texts)


_DEFAULT_TEMPLATES: PromptTemplates | None = None


def _templates(templates: PromptTemplates | None) -> PromptTemplates:
    global _DEFAULT_TEMPLATES
    if templates is not None:
        return templates
    if _DEFAULT_TEMPLATES is None:
        _DEFAULT_TEMPLATES = load_templates()
    return _DEFAULT_TEMPLATES


def _affirm_phrase(symptom: str, state: str, descriptor: str | None) -> str:
    if symptom == "fever":
        base = FEVER_LEVEL_PHRASES[state]
    else:
        base = DISPLAY_NAMES[symptom]
    return f"{base} ({descriptor})" if descriptor else base


def _check_plan_matches_record(plan: PromptPlan, record: Mapping) -> None:
    for s in SYMPTOMS:
        if plan.mentions[s].state != str(record[s]):
            raise ValueError(
                f"plan/record mismatch for {s!r}: plan has {plan.mentions[s].state!r}, "
                f"record has {record[s]!r}"
            )
    if plan.route != classify_route(record):
        raise ValueError(f"plan route {plan.route!r} does not match the record")


def render_prompt(plan: PromptPlan, record: Mapping, templates: PromptTemplates | None = None) -> str:
    """Fill the prompt template selected by the plan's route."""
    t = _templates(templates)
    _check_plan_matches_record(plan, record)
    absent = ", ".join(DISPLAY_NAMES[s] for s in SYMPTOMS)
    conditions = _join_names([DISPLAY_NAMES[c] for c in plan.condition_order])

    if plan.route == ROUTE_SPECIAL_GENERIC:
        return t.special_generic.format(absent_symptoms=absent)
    if plan.route == ROUTE_SPECIAL_CONDITIONS:
        return t.special_with_conditions.format(absent_symptoms=absent, conditions=conditions)

    affirmed, denied, omitted = [], [], []
    for s in plan.symptom_order:
        m = plan.mentions[s]
        if m.action == "affirm":
            affirmed.append("- " + _affirm_phrase(s, m.state, plan.descriptors.get(s)))
        elif m.action == "deny":
            denied.append(DISPLAY_NAMES[s])
        else:
            omitted.append(DISPLAY_NAMES[s])

    parts = []
    if affirmed:
        parts.append("The patient reports the following symptoms:\n" + "\n".join(affirmed))
    if denied:
        parts.append(
            "The patient explicitly does not have the following symptoms: "
            + ", ".join(denied) + "."
        )
    if omitted:
        parts.append(
            "Steer clear of mentioning the following symptoms anywhere in the note: "
            + ", ".join(omitted) + "."
        )
    symptom_section = ("\n".join(parts) + "\n\n") if parts else ""
    conditions_section = (
        f"The patient has the following underlying health conditions: {conditions}.\n\n"
        if plan.condition_order
        else ""
    )
    return t.normal.format(symptom_section=symptom_section, conditions_section=conditions_section)


def render_compact_prompt(note: str, templates: PromptTemplates | None = None) -> str:
    """Wrap a generated note in the compact-rewrite instruction."""
    if not note or not note.strip():
        raise ValueError("cannot build a compact-rewrite prompt from an empty note")
    return _templates(templates).compact.format(note=note)


def _join_names(names) -> str:
    names = list(names)
    if not names:
        return ""
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


_COMPLAINTS = (
    "lower back pain after lifting",
    "recurring stomach issues",
    "an itchy skin rash on both forearms",
    "intermittent headaches",
    "general fatigue over the past weeks",
    "a sprained ankle",
)

_AFFIRM_VARIANTS = (
    "Reports {phrase}.",
    "Complains of {phrase}.",
    "Presents with {phrase}.",
)

_EXAM_LINES = (
    "Auscultation of the chest performed, unremarkable findings.",
    "Throat and ears inspected.",
    "Blood pressure and pulse within normal range.",
    "Oxygen saturation measured at rest, adequate.",
    "Abdomen soft on palpation.",
)


def render_offline_note(plan: PromptPlan, record: Mapping, rng: np.random.Generator | None = None,
                        templates: PromptTemplates | None = None) -> str:
    """Deterministic stand-in for the language model.

    Produces a two-section note that affirms every mention-positive symptom
    (with its descriptor), denies every mention-negative symptom, names the
    underlying conditions when present, and never names a diagnosis.
    """
    t = _templates(templates)
    rng = rng if rng is not None else np.random.default_rng(plan.rng_seed)
    history: list[str] = []
    exam: list[str] = []

    if plan.route == ROUTE_NORMAL:
        denied = []
        for s in plan.symptom_order:
            m = plan.mentions[s]
            if m.action == "affirm":
                phrase = _affirm_phrase(s, m.state, plan.descriptors.get(s))
                variant = _AFFIRM_VARIANTS[rng.integers(len(_AFFIRM_VARIANTS))]
                history.append(variant.format(phrase=phrase))
            elif m.action == "deny":
                denied.append(DISPLAY_NAMES[s])
        if denied:
            history.append(f"Denies {_join_names(denied)}.")
    else:
        complaint = _COMPLAINTS[rng.integers(len(_COMPLAINTS))]
        history.append(f"Visit for {complaint}.")
        history.append(
            "Denies " + _join_names([DISPLAY_NAMES[s] for s in SYMPTOMS]) + "."
        )
    if plan.condition_order:
        history.append(
            "Known history of " + _join_names([DISPLAY_NAMES[c] for c in plan.condition_order]) + "."
        )
    if not history:
        history.append("No complaints reported today.")

    n_exam = 2 + int(rng.integers(2))
    picks = rng.permutation(len(_EXAM_LINES))[:n_exam]
    exam = [_EXAM_LINES[i] for i in sorted(picks)]

    return t.offline_note.format(
        history_lines="\n".join(history), exam_lines="\n".join(exam)
    ).strip() + "\n"


_COMPACT_REPLACEMENTS = (
    ("Physical examination:", "PE:"),
    ("History:", "Hx:"),
    ("Reports ", "c/o "),
    ("Complains of ", "c/o "),
    ("Presents with ", "c/o "),
    ("Denies ", "no "),
    ("Known history of ", "hx "),
    ("within normal range", "WNL"),
    ("unremarkable findings", "unremarkable"),
    (" and ", " + "),
)


def render_offline_compact(note: str) -> str:
    """Deterministic compact rewrite used in offline mode."""
    if not note or not note.strip():
        raise ValueError("cannot compact an empty note")
    out = note
    for old, new in _COMPACT_REPLACEMENTS:
        out = out.replace(old, new)
    lines = [ln.strip() for ln in out.splitlines() if ln.strip()]
    return " ".join(lines) + "\n"
