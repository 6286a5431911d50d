"""Command-line surface for the planning/realization pipeline.

Exit codes: 0 success, 2 usage or validation failure, 3 internal error.
Diagnostics go to stderr; data output goes to stdout or the declared paths.
"""

from __future__ import annotations

import functools
import json
import sys
from collections import Counter
from pathlib import Path

import click

from askframe import corpus as corpus_mod
from askframe import metrics as metrics_mod
from askframe import pipeline as pipeline_mod
from askframe import report as report_mod
from askframe.lexicon import LexiconError, default_lexicon, load_lexicon
from askframe.planners import (
    CorruptModel,
    SamplingParams,
    VersionMismatch,
    generate,
    load_model,
    save_model,
    train_planner,
)
from askframe.plans import MalformedPlan, parse_plan, serialize_plan
from askframe.realize import (
    RealizationWeights,
    build_index,
    default_templates,
    load_templates,
    plan_adherence,
    realize_noplan,
    realize_retrieval,
    realize_template,
)
from askframe.symbolic import extract_plan

_USAGE_ERRORS = (
    corpus_mod.FormatError,
    corpus_mod.EmptyCorpus,
    corpus_mod.TooFewDialogues,
    LexiconError,
    MalformedPlan,
    CorruptModel,
    VersionMismatch,
    pipeline_mod.ConfigError,
    metrics_mod.LengthMismatch,
    metrics_mod.EmptyInput,
    metrics_mod.BadVectorFile,
    ValueError,
    OSError,
)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except _USAGE_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except Exception as exc:
            click.echo(f"internal error: {exc!r}", err=True)
            sys.exit(3)

    return wrapper


def _load_lexicon_opt(path: str | None):
    return load_lexicon(path) if path else default_lexicon()


def _load_any_corpus(path: str, format: str, lexicon) -> list[corpus_mod.AnnotatedDialogue]:
    """Accept a raw or pre-annotated corpus file; annotate when needed."""
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                if raw.strip():
                    first = json.loads(raw)
                    turns = first.get("turns") or []
                    if turns and isinstance(turns[0], dict) and "plan" in turns[0]:
                        return corpus_mod.read_annotated(path)
                    break
    dialogues = corpus_mod.load_corpus(path, format)
    return corpus_mod.annotate_corpus(dialogues, lexicon)


@click.group()
@click.version_option(package_name="askframe")
def main() -> None:
    """Plan-based dialogue response generation at desk scale."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "format_", type=click.Choice(["jsonl", "csv2col"]), default="jsonl")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--output", "output_path", required=True, type=click.Path())
@guarded
def annotate(input_path, format_, lexicon_path, output_path) -> None:
    """Annotate every utterance with its extracted plan (silver standard)."""
    lexicon = _load_lexicon_opt(lexicon_path)
    dialogues = corpus_mod.load_corpus(input_path, format_)
    annotated = corpus_mod.annotate_corpus(dialogues, lexicon)
    corpus_mod.write_annotated(annotated, output_path)
    counts = Counter()
    for d in annotated:
        for au in d.turns:
            for el in au.plan:
                counts[el.ptype.value] += 1
    for name in ("GIVE", "PERFORM", "GAIN", "LOSE", "RESPOND"):
        click.echo(f"{name}\t{counts.get(name, 0)}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "format_", type=click.Choice(["jsonl", "csv2col"]), default="jsonl")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--output", "output_path", type=click.Path(), default=None)
@guarded
def stats(input_path, format_, lexicon_path, output_path) -> None:
    """Corpus statistics: dialogue/turn/token averages and element counts."""
    lexicon = _load_lexicon_opt(lexicon_path)
    annotated = _load_any_corpus(input_path, format_, lexicon)
    result = corpus_mod.compute_stats(annotated)
    text = json.dumps(result.to_dict(), indent=2, sort_keys=True)
    if output_path:
        Path(output_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "format_", type=click.Choice(["jsonl", "csv2col"]), default="jsonl")
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output-dir", "output_dir", required=True, type=click.Path())
@guarded
def split(input_path, format_, ratios, seed, output_dir) -> None:
    """Dialogue-level train/val/test split, deterministic under the seed."""
    parts = tuple(float(x) for x in ratios.split(","))
    if len(parts) != 3:
        raise click.UsageError("--ratios needs three comma-separated numbers")
    dialogues = corpus_mod.load_corpus(input_path, format_)
    train, val, test = corpus_mod.split_corpus(dialogues, parts, seed)
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, chunk in (("train", train), ("val", val), ("test", test)):
        corpus_mod.write_dialogues(chunk, outdir / f"{name}.jsonl")
        click.echo(f"{name}\t{len(chunk)}")


@main.command("build-dataset")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "format_", type=click.Choice(["jsonl", "csv2col"]), default="jsonl")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--output", "output_path", required=True, type=click.Path())
@guarded
def build_dataset(input_path, format_, lexicon_path, output_path) -> None:
    """Harvest (input, input plan, response plan, response) training examples."""
    lexicon = _load_lexicon_opt(lexicon_path)
    annotated = _load_any_corpus(input_path, format_, lexicon)
    examples = corpus_mod.build_examples(annotated)
    corpus_mod.write_examples(examples, output_path)
    click.echo(f"examples\t{len(examples)}")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--planner", "kind", type=click.Choice(["type", "ngram"]), required=True)
@click.option("--order", type=int, default=3, show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--output", "output_path", required=True, type=click.Path())
@guarded
def train(dataset, kind, order, lexicon_path, output_path) -> None:
    """Train a response-plan generator on a training-example JSONL."""
    lexicon = _load_lexicon_opt(lexicon_path)
    examples = corpus_mod.read_examples(dataset)
    model = train_planner(
        examples, kind, order, corpus_tag=Path(dataset).stem, lexicon=lexicon
    )
    save_model(model, output_path)
    if model.type_model is not None:
        click.echo(f"type_sequences\t{len(model.type_model.type_seq_probs)}")
    if model.ngram_model is not None:
        click.echo(f"ngram_contexts\t{len(model.ngram_model.counts)}")
    click.echo(f"examples\t{len(examples)}")


@main.command()
@click.option("--planner", "kind", type=click.Choice(["symbolic", "type", "ngram"]),
              default="symbolic", show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--utterance", required=True)
@click.option("--input-plan", "input_plan_str", default=None)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--top-p", type=float, default=0.9, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-tokens", type=int, default=32, show_default=True)
@click.option("--retries", type=int, default=3, show_default=True)
@guarded
def plan(kind, model_path, utterance, input_plan_str, lexicon_path,
         top_p, seed, max_tokens, retries) -> None:
    """Produce a plan: extract it symbolically or generate a response plan."""
    lexicon = _load_lexicon_opt(lexicon_path)
    if kind == "symbolic":
        click.echo(serialize_plan(extract_plan(utterance, lexicon)))
        return
    if not model_path:
        raise click.UsageError(f"--planner {kind} requires --model")
    model = load_model(model_path)
    if model.kind != kind:
        raise click.UsageError(
            f"model file holds a {model.kind!r} planner, not {kind!r}"
        )
    input_plan = (
        parse_plan(input_plan_str)
        if input_plan_str
        else extract_plan(utterance, lexicon)
    )
    params = SamplingParams(top_p=top_p, max_tokens=max_tokens, retries=retries, seed=seed)
    result = generate(model, utterance, input_plan, params, stopwords=lexicon.stopwords)
    if result.fallback_used:
        click.echo("note: generation fell back after malformed samples", err=True)
    click.echo(serialize_plan(result.plan))


@main.command()
@click.option("--realizer", type=click.Choice(["template", "retrieval", "noplan"]),
              default="retrieval", show_default=True)
@click.option("--dataset", type=click.Path(exists=True), default=None,
              help="Training examples to index (retrieval and noplan).")
@click.option("--utterance", required=True)
@click.option("--plan", "plan_str", default=None)
@click.option("--templates", "template_path", type=click.Path(exists=True), default=None)
@click.option("--w-plan", type=float, default=0.7, show_default=True)
@click.option("--w-input", type=float, default=0.3, show_default=True)
@click.option("--format", "format_", type=click.Choice(["text", "json"]), default="text")
@guarded
def realize(realizer, dataset, utterance, plan_str, template_path,
            w_plan, w_input, format_) -> None:
    """Realize a response from a plan (and/or the input utterance)."""
    plan_obj = parse_plan(plan_str) if plan_str else None
    if realizer == "template":
        if plan_obj is None:
            raise click.UsageError("--realizer template requires --plan")
        templates = load_templates(template_path) if template_path else default_templates()
        response = realize_template(plan_obj, templates)
    else:
        if not dataset:
            raise click.UsageError(f"--realizer {realizer} requires --dataset")
        index = build_index(corpus_mod.read_examples(dataset))
        if realizer == "noplan":
            response = realize_noplan(index, utterance)
        else:
            if plan_obj is None:
                raise click.UsageError("--realizer retrieval requires --plan")
            weights = RealizationWeights(w_plan=w_plan, w_input=w_input)
            response = realize_retrieval(index, utterance, plan_obj, weights)
    adherence = plan_adherence(plan_obj, response) if plan_obj is not None else None
    if format_ == "json":
        click.echo(json.dumps(
            {"input": utterance, "plan": plan_str, "response": response,
             "adherence": adherence, "realizer": realizer},
            ensure_ascii=False, sort_keys=True,
        ))
    else:
        click.echo(response)
        if adherence is not None:
            click.echo(f"adherence\t{adherence:.4f}")


@main.command()
@click.option("--hyp", "hyp_path", required=True, type=click.Path(exists=True))
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", "vector_path", type=click.Path(exists=True), default=None)
@click.option("--output", "output_path", type=click.Path(), default=None)
@click.option("--plot", "plot_dir", type=click.Path(), default=None,
              help="Also render a metric bar chart into this directory.")
@guarded
def evaluate(hyp_path, ref_path, vector_path, output_path, plot_dir) -> None:
    """Score line-aligned hypothesis/reference files with the metric suite."""
    hyps = Path(hyp_path).read_text(encoding="utf-8").splitlines()
    refs = Path(ref_path).read_text(encoding="utf-8").splitlines()
    vectors = metrics_mod.load_vectors(vector_path) if vector_path else None
    report = metrics_mod.evaluate_system(hyps, refs, vectors)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if output_path:
        Path(output_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)
    if plot_dir:
        report_mod.render_metric_figure(report.to_dict(), plot_dir)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--corpus", default=None, help="Corpus path (overrides config).")
@click.option("--format", "format_", type=click.Choice(["jsonl", "csv2col"]), default=None)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--planners", default=None, help="Comma-separated planner kinds.")
@click.option("--order", type=int, default=None)
@click.option("--top-p", "top_p", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--max-tokens", "max_tokens", type=int, default=None)
@click.option("--retries", type=int, default=None)
@click.option("--split-seed", "split_seed", type=int, default=None)
@click.option("--ratios", default=None)
@click.option("--w-plan", "w_plan", type=float, default=None)
@click.option("--w-input", "w_input", type=float, default=None)
@click.option("--vectors", "vector_path", type=click.Path(exists=True), default=None)
@click.option("--outdir", required=True, type=click.Path())
@guarded
def pipeline(config_path, corpus, format_, lexicon_path, planners, order, top_p,
             seed, max_tokens, retries, split_seed, ratios, w_plan, w_input,
             vector_path, outdir) -> None:
    """Full run: annotate, split, build, train, plan, realize, evaluate."""
    overrides = {
        "corpus": corpus,
        "format": format_,
        "lexicon": lexicon_path,
        "planners": planners,
        "order": order,
        "top_p": top_p,
        "seed": seed,
        "max_tokens": max_tokens,
        "retries": retries,
        "split_seed": split_seed,
        "ratios": ratios,
        "w_plan": w_plan,
        "w_input": w_input,
        "vectors": vector_path,
    }
    cfg = pipeline_mod.resolve_config(config_path, overrides)
    run = pipeline_mod.run_pipeline(cfg, outdir)
    click.echo(f"run_id\t{run.run_id}")
    for row in run.rows:
        click.echo(
            f"{row['realizer']}\tadherence={row['mean_adherence']:.4f}"
            f"\tbleu_1={row['bleu_1']:.4f}\tdistinct_1={row['distinct_1']:.4f}"
        )
    click.echo(f"report\t{Path(outdir) / 'report.json'}")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--realizer", type=click.Choice(["retrieval", "template"]),
              default="retrieval", show_default=True)
@click.option("--templates", "template_path", type=click.Path(exists=True), default=None)
@click.option("--top-p", type=float, default=0.9, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--w-plan", type=float, default=0.7, show_default=True)
@click.option("--w-input", type=float, default=0.3, show_default=True)
@guarded
def chat(dataset, model_path, lexicon_path, realizer, template_path,
         top_p, seed, w_plan, w_input) -> None:
    """Interactive inspection loop: /quit exits, /seed N reseeds."""
    lexicon = _load_lexicon_opt(lexicon_path)
    model = load_model(model_path)
    index = build_index(corpus_mod.read_examples(dataset), lexicon.stopwords)
    templates = load_templates(template_path) if template_path else default_templates()
    weights = RealizationWeights(w_plan=w_plan, w_input=w_input)
    base_seed = seed
    turn = 0
    click.echo("askframe chat: /quit exits, /seed N reseeds", err=True)
    while True:
        try:
            line = input("> ")
        except EOFError:
            break
        line = line.strip()
        if not line:
            continue
        if line == "/quit":
            break
        if line.startswith("/seed"):
            parts = line.split()
            if len(parts) == 2 and parts[1].lstrip("-").isdigit():
                base_seed = int(parts[1])
                turn = 0
                click.echo(f"seed set to {base_seed}", err=True)
            else:
                click.echo("usage: /seed N", err=True)
            continue
        try:
            input_plan = extract_plan(line, lexicon)
            params = SamplingParams(top_p=top_p, seed=base_seed + turn)
            result = generate(model, line, input_plan, params, stopwords=lexicon.stopwords)
            if realizer == "template":
                response = realize_template(result.plan, templates)
            else:
                response = realize_retrieval(index, line, result.plan, weights)
            click.echo(f"input plan:    {serialize_plan(input_plan)}")
            click.echo(f"response plan: {serialize_plan(result.plan)}")
            if result.fallback_used:
                click.echo("(fallback plan)", err=True)
            click.echo(f"response:      {response}")
            click.echo(f"adherence:     {plan_adherence(result.plan, response):.4f}")
        except Exception as exc:  # keep the loop alive on any model error
            click.echo(f"error: {exc}", err=True)
        turn += 1


if __name__ == "__main__":
    main()
