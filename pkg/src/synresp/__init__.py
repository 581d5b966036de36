"""Synthetic primary-care respiratory records.

Expert-parameterized Bayesian network over 16 clinical variables, ancestral
sampling of tabular patient records, exact inference by variable elimination,
maximum-likelihood parameter learning, and a prompt pipeline that turns
records into clinical-note generation requests (LLM-backed or offline).
"""

__version__ = "0.1.0"

from .network import (
    CategoricalCPT,
    LogisticCPD,
    LogisticTerm,
    NetworkSpec,
    NoisyOrCPD,
    PoissonBranch,
    PoissonPairCPD,
    VariableDef,
    eval_cpd,
    eval_lambda,
    topological_order,
    validate,
)
from .serialization import load_bundled_network, load_network, save_network
from .sampling import SampleConfig, record_rng, sample_dataset, sample_record
from .factors import Factor
from .inference import (
    EVIDENCE_SETTINGS,
    EvidenceSetting,
    ImpossibleEvidenceError,
    InferenceEngine,
    compile_factor,
    eliminate,
    predict_symptom,
)
from .learning import (
    FitConfig,
    fit_cpt,
    fit_logistic,
    fit_noisy_or,
    fit_poisson_pair,
    learn_network,
)
from .estimator import SymptomClassifier
from .notegen import (
    DescriptorBank,
    MentionPolicy,
    PromptPlan,
    default_descriptor_bank,
    default_mention_policy,
    load_templates,
    plan_prompt,
    render_compact_prompt,
    render_offline_note,
    render_prompt,
    select_descriptor,
)
from .llm import GenConfig, NoteBundle, generate, generate_corpus
from .evaluation import EvalReport, binary_f1, evaluate_network, macro_f1, split_records

__all__ = [
    "CategoricalCPT",
    "DescriptorBank",
    "EVIDENCE_SETTINGS",
    "EvalReport",
    "EvidenceSetting",
    "Factor",
    "FitConfig",
    "GenConfig",
    "ImpossibleEvidenceError",
    "InferenceEngine",
    "LogisticCPD",
    "LogisticTerm",
    "MentionPolicy",
    "NetworkSpec",
    "NoisyOrCPD",
    "NoteBundle",
    "PoissonBranch",
    "PoissonPairCPD",
    "PromptPlan",
    "SampleConfig",
    "SymptomClassifier",
    "VariableDef",
    "binary_f1",
    "compile_factor",
    "default_descriptor_bank",
    "default_mention_policy",
    "eliminate",
    "eval_cpd",
    "eval_lambda",
    "evaluate_network",
    "fit_cpt",
    "fit_logistic",
    "fit_noisy_or",
    "fit_poisson_pair",
    "generate",
    "generate_corpus",
    "learn_network",
    "load_bundled_network",
    "load_network",
    "load_templates",
    "macro_f1",
    "plan_prompt",
    "predict_symptom",
    "record_rng",
    "render_compact_prompt",
    "render_offline_note",
    "render_prompt",
    "sample_dataset",
    "sample_record",
    "save_network",
    "select_descriptor",
    "split_records",
    "topological_order",
    "validate",
]
