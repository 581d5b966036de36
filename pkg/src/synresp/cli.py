"""Command-line entry point: generate data, build notes, run inference,
learn parameters, and evaluate symptom prediction.

Exit codes: 0 success, 1 runtime error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .datasets import (
    MANIFEST_FILENAME,
    NOTES_FILENAME,
    RECORDS_FILENAME,
    load_records,
    save_notes,
    save_records,
    write_manifest,
)
from .evaluation import evaluate_network
from .inference import EVIDENCE_SETTINGS, InferenceEngine
from .learning import FitConfig, learn_network, log_likelihood
from .llm import GenConfig, generate_corpus
from .network import validate
from .notegen import load_templates, plan_prompt
from .sampling import SampleConfig, record_rng, sample_dataset
from .serialization import load_bundled_network, load_network, save_network


def _load_spec(path: str | None):
    spec = load_network(path) if path else load_bundled_network()
    problems = validate(spec)
    if problems:
        raise SpecInvalid(problems)
    return spec


class SpecInvalid(Exception):
    def __init__(self, problems):
        super().__init__("invalid network spec")
        self.problems = problems


def cmd_generate(args) -> int:
    spec = _load_spec(args.spec)
    data = sample_dataset(spec, SampleConfig(seed=args.seed, count=args.count))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_records(data, out / RECORDS_FILENAME)
    write_manifest(out / MANIFEST_FILENAME, seed=args.seed, count=args.count,
                   spec=spec, version=__version__)
    print(f"wrote {len(data)} records to {out / RECORDS_FILENAME}")
    return 0


def cmd_notes(args) -> int:
    spec = _load_spec(args.spec)
    data = load_records(args.data, spec)
    templates = load_templates(args.templates) if args.templates else None
    config = GenConfig(
        mode=args.mode,
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        max_tokens=args.max_tokens,
        concurrency=args.concurrency,
        api_key_env=args.api_key_env,
    )
    if config.mode == "llm":
        config.require_credentials()
        if not config.model:
            raise argparse.ArgumentTypeError("--model is required in llm mode")
    records = data.to_dict("records")
    plans = [
        plan_prompt(rec, rng=record_rng(args.seed, int(rec["record_id"])),
                    record_id=int(rec["record_id"]), rng_seed=args.seed)
        for rec in records
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cache_dir = args.cache if args.cache else out / "cache"
    bundles = generate_corpus(plans, records, config, cache_dir=cache_dir,
                              templates=templates, seed=args.seed)
    save_notes(bundles, out / NOTES_FILENAME)
    failed = [b.record_id for b in bundles if not b.succeeded]
    print(f"wrote {len(bundles)} note bundles to {out / NOTES_FILENAME}")
    if failed:
        print(f"warning: {len(failed)} records failed (ids {failed[:10]}...)", file=sys.stderr)
    return 0


def _parse_evidence(text: str) -> dict:
    evidence = {}
    if not text:
        return evidence
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise argparse.ArgumentTypeError(f"evidence item {part!r} is not of the form var=state")
        var, state = part.split("=", 1)
        evidence[var.strip()] = state.strip()
    return evidence


def cmd_infer(args) -> int:
    spec = _load_spec(args.spec)
    evidence = _parse_evidence(args.evidence or "")
    if args.query in evidence:
        print(f"error: query variable {args.query!r} appears in the evidence", file=sys.stderr)
        return 2
    engine = InferenceEngine(spec)
    dist = engine.posterior(args.query, evidence)
    for state, prob in dist.items():
        print(f"{state}: {prob:.6g}")
    return 0


def cmd_learn(args) -> int:
    structure = _load_spec(args.structure)
    data = load_records(args.data, structure)
    config = FitConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        smoothing_pseudocount=args.pseudocount,
        seed=args.seed,
    )
    learned = learn_network(data, structure, config)
    problems = validate(learned)
    if problems:
        raise SpecInvalid(problems)
    save_network(learned, args.out)
    print(f"wrote learned network to {args.out}")
    for name, ll in log_likelihood(learned, data).items():
        print(f"log-likelihood {name}: {ll:.2f}")
    return 0


def cmd_eval(args) -> int:
    spec = _load_spec(args.spec)
    test = load_records(args.test, spec)
    settings = [s.strip() for s in args.settings.split(",") if s.strip()]
    unknown = [s for s in settings if s not in EVIDENCE_SETTINGS]
    if unknown:
        print(f"error: unknown settings {unknown}; have {sorted(EVIDENCE_SETTINGS)}", file=sys.stderr)
        return 2
    report = evaluate_network(spec, test, settings)
    print(report.to_table())
    if args.out:
        report.save(args.out)
        print(f"wrote report to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synresp",
        description="Synthetic primary-care respiratory records: tabular generator, "
        "note prompts, exact inference, learning and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"synresp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample tabular records to CSV")
    p.add_argument("--spec", help="network spec JSON (default: bundled network)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("notes", help="build prompts and notes for a records CSV")
    p.add_argument("--data", required=True, help="records CSV")
    p.add_argument("--mode", choices=["offline", "llm"], default="offline")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="network spec JSON (default: bundled network)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--templates", help="directory overriding the bundled prompt templates")
    p.add_argument("--cache", help="bundle cache directory (default: <out>/cache)")
    p.add_argument("--endpoint", default="https://api.openai.com/v1")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float, default=1.2)
    p.add_argument("--max-tokens", type=int, default=1000)
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--api-key-env", default="OPENAI_API_KEY")
    p.set_defaults(func=cmd_notes)

    p = sub.add_parser("infer", help="print a posterior distribution")
    p.add_argument("--spec", help="network spec JSON (default: bundled network)")
    p.add_argument("--query", required=True)
    p.add_argument("--evidence", help="comma-separated var=state pairs")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("learn", help="fit all network parameters from a records CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--structure", help="spec giving DAG and families (default: bundled network)")
    p.add_argument("--out", required=True, help="output spec JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--pseudocount", type=float, default=1.0)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="score symptom prediction on a test CSV")
    p.add_argument("--spec", required=True, help="network spec JSON to evaluate")
    p.add_argument("--test", required=True, help="test records CSV")
    p.add_argument("--settings", default="all,no-sympt,realistic")
    p.add_argument("--out", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecInvalid as exc:
        print("error: network spec failed validation:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 2
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures (network, inference, ...)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
