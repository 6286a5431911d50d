"""Desk-scale learnable response-plan generators.

Two planners share one interface (input utterance + input plan -> response
plan): a type-transition model over plan type sequences with per-type action
and target categoricals, and a stupid-backoff n-gram model over the token
stream ``<in> <content words> <input plan tokens> <plan> <response plan
tokens> <eos>``.  Decoding uses nucleus (top-p) sampling; malformed n-gram
generations are retried and then fall back, so generation is total.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

from askframe.corpus import TrainingExample
from askframe.lexicon import Lexicon, default_lexicon
from askframe.plans import MalformedPlan, Plan, PlanElement, PlanType, parse_plan, plan_tokens
from askframe.symbolic import is_punct, tokenize

IN_TOKEN = "<in>"
PLAN_TOKEN = "<plan>"
EOS_TOKEN = "<eos>"

SMOOTHING_ALPHA = 0.1
BACKOFF_DISCOUNT = 0.4
CONTENT_WORD_CAP = 16

MODEL_MAGIC = "askframe-planner"
MODEL_VERSION = 1


class EmptyDistribution(ValueError):
    pass


class NoExamples(ValueError):
    pass


class BadOrder(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


class CorruptModel(ValueError):
    pass


@dataclass(frozen=True)
class SamplingParams:
    top_p: float = 0.9
    max_tokens: int = 32
    retries: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.retries < 0:
            raise ValueError(f"retries must be >= 0, got {self.retries}")


def nucleus_sample(dist: Mapping[Hashable, float], top_p: float, rng: random.Random):
    """Draw from the smallest probability-sorted prefix with mass >= top_p.

    Ties are broken by the items' natural order, so the draw is deterministic
    given the distribution, top_p, and the rng state.
    """
    if not dist:
        raise EmptyDistribution("cannot sample from an empty distribution")
    if not 0.0 < top_p <= 1.0:
        raise ValueError(f"top_p must be in (0, 1], got {top_p}")
    items = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    cut = len(items)
    cum = 0.0
    for i, (_, p) in enumerate(items):
        cum += p
        if cum >= top_p - 1e-12:
            cut = i + 1
            break
    prefix = items[:cut]
    mass = sum(p for _, p in prefix)
    draw = rng.random() * mass
    acc = 0.0
    for item, p in prefix:
        acc += p
        if draw < acc:
            return item
    return prefix[-1][0]


@dataclass
class TypeTransitionModel:
    """Categoricals over response type sequences, actions, and targets."""

    type_seq_probs: dict[tuple[str, ...], dict[tuple[str, ...], float]]
    marginal_seq_probs: dict[tuple[str, ...], float]
    action_probs: dict[str, dict[str, float]]
    target_probs: dict[tuple[str, str], dict[str, float]]


@dataclass
class NGramPlannerModel:
    """k-gram successor counts (k <= order) with stupid-backoff scoring."""

    order: int
    counts: dict[tuple[str, ...], dict[str, int]]
    backoff_discount: float = BACKOFF_DISCOUNT


@dataclass
class PlannerModel:
    """Trained planner plus metadata; 'ngram' models may carry a type fallback."""

    kind: str
    type_model: TypeTransitionModel | None = None
    ngram_model: NGramPlannerModel | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("type", "ngram"):
            raise ValueError(f"unknown planner kind {self.kind!r}")
        if self.kind == "type" and self.type_model is None:
            raise ValueError("type planner requires a type model")
        if self.kind == "ngram" and self.ngram_model is None:
            raise ValueError("ngram planner requires an ngram model")


def _normalize(counter: Counter) -> dict:
    total = sum(counter.values())
    return {key: n / total for key, n in counter.items()}


def train_type_planner(examples: Sequence[TrainingExample]) -> TypeTransitionModel:
    """Estimate type-sequence transitions (add-alpha smoothed) and constituents."""
    if not examples:
        raise NoExamples("cannot train a planner on zero examples")
    pair_counts: dict[tuple[str, ...], Counter] = defaultdict(Counter)
    resp_counts: Counter = Counter()
    action_counts: dict[str, Counter] = defaultdict(Counter)
    target_counts: dict[tuple[str, str], Counter] = defaultdict(Counter)
    for ex in examples:
        in_seq = ex.input_plan.type_sequence
        resp_seq = ex.response_plan.type_sequence
        pair_counts[in_seq][resp_seq] += 1
        resp_counts[resp_seq] += 1
        for el in ex.response_plan:
            if el.ptype is PlanType.RESPOND:
                continue
            action = " ".join(el.action)
            action_counts[el.ptype.value][action] += 1
            target_counts[(el.ptype.value, action)][" ".join(el.target)] += 1
    vocab = sorted(resp_counts)
    alpha = SMOOTHING_ALPHA
    type_seq_probs = {}
    for in_seq, row in pair_counts.items():
        total = sum(row.values()) + alpha * len(vocab)
        type_seq_probs[in_seq] = {seq: (row[seq] + alpha) / total for seq in vocab}
    return TypeTransitionModel(
        type_seq_probs=type_seq_probs,
        marginal_seq_probs=_normalize(resp_counts),
        action_probs={t: _normalize(c) for t, c in action_counts.items()},
        target_probs={k: _normalize(c) for k, c in target_counts.items()},
    )


def content_words(text: str, stopwords: frozenset[str]) -> list[str]:
    words = [t for t in tokenize(text) if t not in stopwords and not is_punct(t)]
    return words[:CONTENT_WORD_CAP]


def example_stream(ex: TrainingExample, stopwords: frozenset[str]) -> list[str]:
    return (
        [IN_TOKEN]
        + content_words(ex.input_utterance, stopwords)
        + plan_tokens(ex.input_plan)
        + [PLAN_TOKEN]
        + plan_tokens(ex.response_plan)
        + [EOS_TOKEN]
    )


def train_ngram_planner(
    examples: Sequence[TrainingExample],
    order: int = 3,
    stopwords: frozenset[str] | None = None,
) -> NGramPlannerModel:
    """Accumulate all k-gram successor counts, k <= order, over example streams."""
    if not examples:
        raise NoExamples("cannot train a planner on zero examples")
    if order < 2:
        raise BadOrder(f"ngram order must be >= 2, got {order}")
    if stopwords is None:
        stopwords = default_lexicon().stopwords
    counts: dict[tuple[str, ...], Counter] = defaultdict(Counter)
    for ex in examples:
        stream = example_stream(ex, stopwords)
        for j, tok in enumerate(stream):
            for ctx_len in range(min(order - 1, j) + 1):
                counts[tuple(stream[j - ctx_len : j])][tok] += 1
    return NGramPlannerModel(order=order, counts={k: dict(v) for k, v in counts.items()})


def next_token_distribution(
    model: NGramPlannerModel, context: Sequence[str]
) -> dict[str, float]:
    """Stupid backoff: per-token score from the highest observed context order,
    discounted once per backoff level, renormalized over all candidates."""
    ctx = tuple(context[-(model.order - 1) :]) if model.order > 1 else ()
    scores: dict[str, float] = {}
    level = 0
    while True:
        bucket = model.counts.get(ctx)
        if bucket:
            total = sum(bucket.values())
            factor = model.backoff_discount**level
            for tok, n in bucket.items():
                if tok not in scores:
                    scores[tok] = factor * n / total
        if not ctx:
            break
        ctx = ctx[1:]
        level += 1
    total = sum(scores.values())
    if total <= 0.0:
        raise EmptyDistribution("ngram model has no unigram counts")
    return {tok: s / total for tok, s in scores.items()}


def train_planner(
    examples: Sequence[TrainingExample],
    kind: str,
    order: int = 3,
    corpus_tag: str = "",
    lexicon: Lexicon | None = None,
) -> PlannerModel:
    """Train a PlannerModel of the given kind with reproducible metadata."""
    lexicon = lexicon or default_lexicon()
    meta = {
        "corpus_tag": corpus_tag,
        "lexicon_sha256": lexicon_fingerprint(lexicon),
        "created": _created_stamp(),
        "n_examples": len(examples),
    }
    if kind == "type":
        return PlannerModel(kind="type", type_model=train_type_planner(examples), meta=meta)
    if kind == "ngram":
        meta["order"] = order
        # The companion type model backs the retry-then-fallback path.
        return PlannerModel(
            kind="ngram",
            ngram_model=train_ngram_planner(examples, order, lexicon.stopwords),
            type_model=train_type_planner(examples),
            meta=meta,
        )
    raise ValueError(f"unknown planner kind {kind!r}")


def lexicon_fingerprint(lexicon: Lexicon) -> str:
    blob = json.dumps(
        {
            "give": sorted(lexicon.give_verbs),
            "perform": sorted(lexicon.perform_verbs),
            "gain": sorted(lexicon.gain_markers),
            "lose": sorted(lexicon.lose_markers),
            "modal": sorted(lexicon.modal_words),
            "wh": sorted(lexicon.wh_words),
            "stop": sorted(lexicon.stopwords),
            "flips": sorted(lexicon.pronoun_flips.items()),
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _created_stamp() -> str:
    # Reproducible by default so identical training runs write identical files;
    # honor SOURCE_DATE_EPOCH when a caller wants a real build stamp.
    return os.environ.get("SOURCE_DATE_EPOCH", "0")


@dataclass(frozen=True)
class GenerateResult:
    plan: Plan
    fallback_used: bool = False
    marginal_backoff: bool = False
    attempts: int = 1


def _copy_target(
    input_tokens: list[str], action_tokens: set[str], stopwords: frozenset[str]
) -> tuple[str, ...] | None:
    # Longest run (<= 4) of content tokens right after an action token occurrence.
    best: list[str] = []
    for i, tok in enumerate(input_tokens):
        if tok not in action_tokens:
            continue
        span: list[str] = []
        for nxt in input_tokens[i + 1 : i + 5]:
            if nxt in stopwords or is_punct(nxt):
                break
            span.append(nxt)
        if len(span) > len(best):
            best = span
    return tuple(best) if best else None


def _generate_type(
    model: TypeTransitionModel,
    input_utterance: str,
    input_plan: Plan,
    params: SamplingParams,
    rng: random.Random,
    stopwords: frozenset[str],
) -> tuple[Plan, bool]:
    row = model.type_seq_probs.get(input_plan.type_sequence)
    marginal = row is None
    if marginal:
        row = model.marginal_seq_probs
    resp_seq = nucleus_sample(row, params.top_p, rng)
    input_tokens = tokenize(input_utterance)
    elements: list[PlanElement] = []
    for type_name in resp_seq:
        if type_name == PlanType.RESPOND.value:
            elements.append(PlanElement.respond())
            continue
        actions = model.action_probs.get(type_name)
        if not actions:
            elements.append(PlanElement.respond())
            continue
        action = nucleus_sample(actions, params.top_p, rng)
        action_tokens = tuple(action.split())
        copied = _copy_target(input_tokens, set(action_tokens), stopwords)
        if copied is not None:
            target_tokens = copied
        else:
            targets = model.target_probs.get((type_name, action), {"": 1.0})
            target_tokens = tuple(nucleus_sample(targets, params.top_p, rng).split())
        elements.append(PlanElement(PlanType[type_name], action_tokens, target_tokens))
    return Plan(tuple(elements)), marginal


def _decode_ngram(
    model: NGramPlannerModel,
    prompt: list[str],
    params: SamplingParams,
    rng: random.Random,
) -> str:
    seq = list(prompt)
    out: list[str] = []
    for _ in range(params.max_tokens):
        tok = nucleus_sample(next_token_distribution(model, seq), params.top_p, rng)
        if tok == EOS_TOKEN:
            break
        out.append(tok)
        seq.append(tok)
    return " ".join(out)


def generate(
    model: PlannerModel,
    input_utterance: str,
    input_plan: Plan,
    params: SamplingParams | None = None,
    stopwords: frozenset[str] | None = None,
) -> GenerateResult:
    """Generate a response plan; total, deterministic given the seed."""
    params = params or SamplingParams()
    if stopwords is None:
        stopwords = default_lexicon().stopwords
    rng = random.Random(params.seed)
    if model.kind == "type":
        assert model.type_model is not None
        plan, marginal = _generate_type(
            model.type_model, input_utterance, input_plan, params, rng, stopwords
        )
        return GenerateResult(plan, marginal_backoff=marginal)
    assert model.ngram_model is not None
    prompt = (
        [IN_TOKEN]
        + content_words(input_utterance, stopwords)
        + plan_tokens(input_plan)
        + [PLAN_TOKEN]
    )
    for attempt in range(1, params.retries + 2):
        text = _decode_ngram(model.ngram_model, prompt, params, rng)
        try:
            return GenerateResult(parse_plan(text), attempts=attempt)
        except MalformedPlan:
            continue
    attempts = params.retries + 1
    if model.type_model is not None:
        plan, marginal = _generate_type(
            model.type_model, input_utterance, input_plan, params, rng, stopwords
        )
        return GenerateResult(plan, fallback_used=True, marginal_backoff=marginal, attempts=attempts)
    return GenerateResult(Plan.respond(), fallback_used=True, attempts=attempts)


def generate_plan(
    model: PlannerModel,
    input_utterance: str,
    input_plan: Plan,
    params: SamplingParams | None = None,
) -> Plan:
    return generate(model, input_utterance, input_plan, params).plan


# --- persistence ---------------------------------------------------------


def _join_key(parts: tuple[str, ...]) -> str:
    return " ".join(parts)


def _encode_type_model(model: TypeTransitionModel) -> dict:
    return {
        "type_seq_probs": {
            _join_key(k): {_join_key(r): p for r, p in row.items()}
            for k, row in model.type_seq_probs.items()
        },
        "marginal_seq_probs": {_join_key(k): p for k, p in model.marginal_seq_probs.items()},
        "action_probs": model.action_probs,
        "target_probs": {
            f"{t}\t{a}": dict(row) for (t, a), row in model.target_probs.items()
        },
    }


def _decode_type_model(payload: dict) -> TypeTransitionModel:
    return TypeTransitionModel(
        type_seq_probs={
            tuple(k.split()): {tuple(r.split()): p for r, p in row.items()}
            for k, row in payload["type_seq_probs"].items()
        },
        marginal_seq_probs={
            tuple(k.split()): p for k, p in payload["marginal_seq_probs"].items()
        },
        action_probs={t: dict(row) for t, row in payload["action_probs"].items()},
        target_probs={
            (key.split("\t")[0], key.split("\t")[1]): dict(row)
            for key, row in payload["target_probs"].items()
        },
    )


def _encode_ngram_model(model: NGramPlannerModel) -> dict:
    return {
        "order": model.order,
        "backoff_discount": model.backoff_discount,
        "counts": {_join_key(ctx): dict(b) for ctx, b in model.counts.items()},
    }


def _decode_ngram_model(payload: dict) -> NGramPlannerModel:
    return NGramPlannerModel(
        order=int(payload["order"]),
        backoff_discount=float(payload["backoff_discount"]),
        counts={tuple(k.split()): {t: int(n) for t, n in b.items()} for k, b in payload["counts"].items()},
    )


def save_model(model: PlannerModel, path: str | Path) -> None:
    """Write a self-describing, checksummed JSON model file (deterministic bytes)."""
    payload: dict = {}
    if model.type_model is not None:
        payload["type"] = _encode_type_model(model.type_model)
    if model.ngram_model is not None:
        payload["ngram"] = _encode_ngram_model(model.ngram_model)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    doc = {
        "magic": MODEL_MAGIC,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "meta": model.meta,
        "payload": payload,
        "checksum": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> PlannerModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"not a valid model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != MODEL_MAGIC:
        raise CorruptModel("missing or wrong magic header")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatch(
            f"model version {doc.get('version')!r}, expected {MODEL_VERSION}"
        )
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise CorruptModel("missing payload")
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    if hashlib.sha256(canonical.encode("utf-8")).hexdigest() != doc.get("checksum"):
        raise CorruptModel("checksum mismatch")
    try:
        return PlannerModel(
            kind=doc["kind"],
            type_model=_decode_type_model(payload["type"]) if "type" in payload else None,
            ngram_model=_decode_ngram_model(payload["ngram"]) if "ngram" in payload else None,
            meta=doc.get("meta", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed payload: {exc}") from exc
