"""End-to-end pipeline: annotate, split, build, train, plan, realize, evaluate.

The run writes every stage artifact under one output directory and finishes
with a comparative report, one row per realizer input (the No Plan baseline,
the silver plan, and each trained planner).  Reports embed a config snapshot
and only relative paths, so reruns with identical inputs and seeds are
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from askframe import corpus as corpus_mod
from askframe import metrics as metrics_mod
from askframe import report as report_mod
from askframe.lexicon import Lexicon, default_lexicon, load_lexicon
from askframe.planners import PlannerModel, SamplingParams, generate, save_model, train_planner
from askframe.plans import serialize_plan
from askframe.realize import (
    RealizationWeights,
    build_index,
    plan_adherence,
    realize_noplan,
    realize_retrieval,
)

NOPLAN_ROW = "noplan"
SYMBOLIC_ROW = "symbolic"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    corpus: str = ""
    format: str = "jsonl"
    lexicon: str = ""
    planners: tuple[str, ...] = ("type", "ngram")
    order: int = 3
    top_p: float = 0.9
    seed: int = 0
    max_tokens: int = 32
    retries: int = 3
    split_seed: int = 0
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    w_plan: float = 0.7
    w_input: float = 0.3
    vectors: str = ""

    def validate(self) -> None:
        if not self.corpus:
            raise ConfigError("config needs a corpus path")
        if self.format not in ("jsonl", "csv2col"):
            raise ConfigError(f"unknown corpus format {self.format!r}")
        for kind in self.planners:
            if kind not in ("type", "ngram"):
                raise ConfigError(f"unknown planner kind {kind!r}")
        for path_key in ("corpus", "lexicon", "vectors"):
            value = getattr(self, path_key)
            if value and not Path(value).exists():
                raise ConfigError(f"{path_key} path does not exist: {value}")

    def to_dict(self) -> dict:
        return {
            "corpus": self.corpus,
            "format": self.format,
            "lexicon": self.lexicon,
            "planners": list(self.planners),
            "order": self.order,
            "top_p": self.top_p,
            "seed": self.seed,
            "max_tokens": self.max_tokens,
            "retries": self.retries,
            "split_seed": self.split_seed,
            "ratios": list(self.ratios),
            "w_plan": self.w_plan,
            "w_input": self.w_input,
            "vectors": self.vectors,
        }


_INT_KEYS = {"order", "seed", "max_tokens", "retries", "split_seed"}
_FLOAT_KEYS = {"top_p", "w_plan", "w_input"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """key = value lines; '#' comments; unknown keys are rejected."""
    known = {f.name for f in fields(PipelineConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = value
    return values


def resolve_config(
    config_path: str | Path | None = None, overrides: dict | None = None
) -> PipelineConfig:
    """File values first, override flags win."""
    raw: dict = {}
    if config_path:
        path = Path(config_path)
        raw.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    cfg = PipelineConfig()
    for key, value in raw.items():
        if key in _INT_KEYS:
            value = int(value)
        elif key in _FLOAT_KEYS:
            value = float(value)
        elif key == "planners" and isinstance(value, str):
            value = tuple(p.strip() for p in value.split(",") if p.strip())
        elif key == "ratios" and isinstance(value, str):
            value = tuple(float(x) for x in value.split(","))
        setattr(cfg, key, value)
    cfg.planners = tuple(cfg.planners)
    cfg.ratios = tuple(cfg.ratios)
    cfg.validate()
    return cfg


@dataclass
class PipelineRun:
    run_id: str
    config: dict
    outputs: dict[str, str] = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "outputs": self.outputs,
            "rows": self.rows,
        }


def _write_jsonl(records: Sequence[dict], path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def run_pipeline(config: PipelineConfig, outdir: str | Path) -> PipelineRun:
    """Run every stage and write artifacts plus the comparative report."""
    config.validate()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    snapshot = config.to_dict()
    run_id = hashlib.sha256(
        json.dumps(snapshot, sort_keys=True).encode("utf-8")
    ).hexdigest()[:12]
    run = PipelineRun(run_id=run_id, config=snapshot)

    lexicon: Lexicon = load_lexicon(config.lexicon) if config.lexicon else default_lexicon()
    vectors = metrics_mod.load_vectors(config.vectors) if config.vectors else None

    def _stage(name: str):
        def wrap(fn, *args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except Exception as exc:
                raise RuntimeError(f"pipeline stage {name!r} failed: {exc}") from exc

        return wrap

    dialogues = _stage("load")(corpus_mod.load_corpus, config.corpus, config.format)
    annotated = _stage("annotate")(corpus_mod.annotate_corpus, dialogues, lexicon)
    annotated_path = outdir / "annotated.jsonl"
    corpus_mod.write_annotated(annotated, annotated_path)
    run.outputs["annotated"] = annotated_path.name

    train_dlgs, val_dlgs, test_dlgs = _stage("split")(
        corpus_mod.split_corpus, annotated, config.ratios, config.split_seed
    )
    splits = {"train": train_dlgs, "val": val_dlgs, "test": test_dlgs}
    split_examples = {}
    for name, dlgs in splits.items():
        examples = _stage("build")(corpus_mod.build_examples, dlgs)
        path = outdir / f"{name}_examples.jsonl"
        corpus_mod.write_examples(examples, path)
        run.outputs[f"{name}_examples"] = path.name
        split_examples[name] = examples

    train_examples = split_examples["train"]
    test_examples = split_examples["test"]
    if not train_examples or not test_examples:
        raise RuntimeError("pipeline stage 'split' failed: empty train or test split")

    models: dict[str, PlannerModel] = {}
    for kind in config.planners:
        model = _stage("train")(
            train_planner,
            train_examples,
            kind,
            config.order,
            corpus_tag=Path(config.corpus).stem,
            lexicon=lexicon,
        )
        path = outdir / f"model_{kind}.json"
        save_model(model, path)
        run.outputs[f"model_{kind}"] = path.name
        models[kind] = model

    index = _stage("index")(build_index, train_examples, lexicon.stopwords)
    weights = RealizationWeights(w_plan=config.w_plan, w_input=config.w_input)

    row_names = [NOPLAN_ROW, SYMBOLIC_ROW, *config.planners]
    realized: dict[str, list[str]] = {name: [] for name in row_names}
    records: dict[str, list[dict]] = {name: [] for name in row_names}
    references = [ex.response_utterance for ex in test_examples]

    for i, ex in enumerate(test_examples):
        silver = ex.response_plan
        for name in row_names:
            if name == NOPLAN_ROW:
                plan = None
                response = realize_noplan(index, ex.input_utterance)
            elif name == SYMBOLIC_ROW:
                plan = silver
                response = realize_retrieval(index, ex.input_utterance, plan, weights)
            else:
                params = SamplingParams(
                    top_p=config.top_p,
                    max_tokens=config.max_tokens,
                    retries=config.retries,
                    seed=config.seed + i,
                )
                plan = generate(
                    models[name], ex.input_utterance, ex.input_plan, params,
                    stopwords=lexicon.stopwords,
                ).plan
                response = realize_retrieval(index, ex.input_utterance, plan, weights)
            # Adherence is always judged against the silver response plan so
            # the rows share one yardstick.
            adherence = plan_adherence(silver, response)
            realized[name].append(response)
            records[name].append(
                {
                    "input": ex.input_utterance,
                    "plan": serialize_plan(plan) if plan is not None else None,
                    "response": response,
                    "adherence": adherence,
                    "realizer": name,
                }
            )

    rows = []
    for name in row_names:
        path = outdir / f"realized_{name}.jsonl"
        _write_jsonl(records[name], path)
        run.outputs[f"realized_{name}"] = path.name
        report = _stage("evaluate")(
            metrics_mod.evaluate_system, realized[name], references, vectors
        )
        row = {"realizer": name}
        row["mean_adherence"] = sum(r["adherence"] for r in records[name]) / len(records[name])
        row.update(report.to_dict())
        rows.append(row)
    run.rows = rows

    run.outputs["report"] = "report.json"
    run.outputs["report_tsv"] = "report.tsv"
    run.outputs["report_quality"] = "report_quality.png"
    run.outputs["report_diversity"] = "report_diversity.png"
    (outdir / "report.json").write_text(
        json.dumps(run.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    report_mod.write_report_tsv(rows, outdir / "report.tsv")
    report_mod.render_report_figures(rows, outdir)
    return run
