"""Plan-conditioned response realization.

Two realizers share the index built over training examples: a retrieval
realizer that scores entries by plan similarity blended with input tf-idf
cosine, and a no-plan baseline that uses the input similarity alone.  A
template realizer renders plans directly.  plan_adherence measures how much
of a plan's content survives into a response.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

from askframe.corpus import TrainingExample
from askframe.lexicon import default_lexicon
from askframe.plans import Plan, PlanType, plan_similarity
from askframe.symbolic import is_punct, tokenize


class TemplateError(ValueError):
    pass


class NoExamples(ValueError):
    pass


@dataclass(frozen=True)
class TemplateSet:
    """Per-type ordered templates with {action} and {target} slots."""

    templates: dict[PlanType, tuple[str, ...]]

    def __post_init__(self) -> None:
        for ptype in PlanType:
            entries = self.templates.get(ptype, ())
            if not entries:
                raise TemplateError(f"no template for {ptype.value}")
            if ptype is PlanType.RESPOND:
                if any("{action}" in t or "{target}" in t for t in entries):
                    raise TemplateError("RESPOND templates take no slots")
            elif "{action}" not in entries[0]:
                raise TemplateError(f"first {ptype.value} template must use {{action}}")


def parse_templates(text: str, source: str = "<string>") -> TemplateSet:
    table: dict[PlanType, list[str]] = {t: [] for t in PlanType}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise TemplateError(f"{source}:{lineno}: expected TYPE<TAB>template")
        name, template = line.split("\t", 1)
        try:
            ptype = PlanType[name.strip().upper()]
        except KeyError as exc:
            raise TemplateError(f"{source}:{lineno}: unknown type {name!r}") from exc
        table[ptype].append(template)
    return TemplateSet({t: tuple(v) for t, v in table.items()})


def load_templates(path: str | Path) -> TemplateSet:
    path = Path(path)
    return parse_templates(path.read_text(encoding="utf-8"), source=str(path))


@lru_cache(maxsize=1)
def default_templates() -> TemplateSet:
    text = resources.files("askframe.data").joinpath("templates.txt").read_text("utf-8")
    return parse_templates(text, source="askframe/data/templates.txt")


def flip_pronouns(tokens: Sequence[str], flips: dict[str, str] | None = None) -> list[str]:
    """Swap perspective pronouns (you<->i etc.); unmapped tokens pass through."""
    if flips is None:
        flips = default_lexicon().pronoun_flips
    return [flips.get(tok.lower(), tok) for tok in tokens]


_SPACE_BEFORE_PUNCT = re.compile(r"\s+([.!?,;:])")
_MULTI_SPACE = re.compile(r"\s{2,}")


def _cleanup(text: str) -> str:
    text = _MULTI_SPACE.sub(" ", text).strip()
    text = _SPACE_BEFORE_PUNCT.sub(r"\1", text)
    if text:
        text = text[0].upper() + text[1:]
    return text


def realize_template(plan: Plan, templates: TemplateSet | None = None) -> str:
    """Fill each element's first template; RESPOND renders its first fallback."""
    templates = templates or default_templates()
    flips = default_lexicon().pronoun_flips
    parts = []
    for el in plan:
        template = templates.templates[el.ptype][0]
        if el.ptype is PlanType.RESPOND:
            parts.append(template)
            continue
        action = " ".join(flip_pronouns(el.action, flips))
        target = " ".join(flip_pronouns(el.target, flips))
        parts.append(template.format(action=action, target=target))
    return _cleanup(" ".join(parts))


@dataclass(frozen=True)
class RealizationWeights:
    w_plan: float = 0.7
    w_input: float = 0.3

    def __post_init__(self) -> None:
        if self.w_plan < 0 or self.w_input < 0 or self.w_plan + self.w_input <= 0:
            raise ValueError("weights must be non-negative with a positive sum")


@dataclass(frozen=True)
class IndexEntry:
    response_plan: Plan
    response_text: str
    input_tf: dict[str, int]


@dataclass(frozen=True)
class RetrievalIndex:
    entries: tuple[IndexEntry, ...]
    doc_freq: dict[str, int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.entries)


def _content_terms(text: str, stopwords: frozenset[str]) -> list[str]:
    return [t for t in tokenize(text) if t not in stopwords and not is_punct(t)]


def build_index(
    examples: Sequence[TrainingExample], stopwords: frozenset[str] | None = None
) -> RetrievalIndex:
    """Index each example's response (text + plan) and its input tf vector."""
    if not examples:
        raise NoExamples("cannot build a retrieval index from zero examples")
    if stopwords is None:
        stopwords = default_lexicon().stopwords
    entries = []
    doc_freq: Counter[str] = Counter()
    for ex in examples:
        tf = dict(Counter(_content_terms(ex.input_utterance, stopwords)))
        doc_freq.update(tf.keys())
        entries.append(
            IndexEntry(
                response_plan=ex.response_plan,
                response_text=ex.response_utterance,
                input_tf=tf,
            )
        )
    return RetrievalIndex(entries=tuple(entries), doc_freq=dict(doc_freq))


def _idf(index: RetrievalIndex, term: str) -> float:
    # Smoothed log idf, always positive so unseen query terms stay harmless.
    return math.log((1 + index.size) / (1 + index.doc_freq.get(term, 0))) + 1.0


def _tfidf(index: RetrievalIndex, tf: dict[str, int]) -> dict[str, float]:
    return {term: count * _idf(index, term) for term, count in tf.items()}


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    if dot == 0.0:
        return 0.0
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    return dot / (norm_a * norm_b)


def retrieve(
    index: RetrievalIndex,
    input_utterance: str,
    response_plan: Plan | None,
    weights: RealizationWeights,
    stopwords: frozenset[str] | None = None,
) -> int:
    """Index of the best-scoring entry; ties resolve to the lowest index."""
    if stopwords is None:
        stopwords = default_lexicon().stopwords
    query_tf = dict(Counter(_content_terms(input_utterance, stopwords)))
    query_vec = _tfidf(index, query_tf)
    best_idx = 0
    best_score = -1.0
    for i, entry in enumerate(index.entries):
        score = 0.0
        if weights.w_plan > 0 and response_plan is not None:
            score += weights.w_plan * plan_similarity(response_plan, entry.response_plan)
        if weights.w_input > 0:
            score += weights.w_input * _cosine(query_vec, _tfidf(index, entry.input_tf))
        if score > best_score:
            best_score = score
            best_idx = i
    return best_idx


def realize_retrieval(
    index: RetrievalIndex,
    input_utterance: str,
    response_plan: Plan,
    weights: RealizationWeights | None = None,
) -> str:
    weights = weights or RealizationWeights()
    return index.entries[
        retrieve(index, input_utterance, response_plan, weights)
    ].response_text


def realize_noplan(index: RetrievalIndex, input_utterance: str) -> str:
    """Baseline: input tf-idf similarity only, no plan signal."""
    best = retrieve(index, input_utterance, None, RealizationWeights(w_plan=0.0, w_input=1.0))
    return index.entries[best].response_text


def plan_content_tokens(plan: Plan, stopwords: frozenset[str] | None = None) -> set[str]:
    if stopwords is None:
        stopwords = default_lexicon().stopwords
    flips = default_lexicon().pronoun_flips
    tokens: set[str] = set()
    for el in plan:
        for tok in flip_pronouns(el.action + el.target, flips):
            if tok not in stopwords:
                tokens.add(tok)
    return tokens


def plan_adherence(plan: Plan, response_text: str) -> float:
    """Fraction of the plan's flipped content tokens found in the response.

    Plans with no content tokens (pure RESPOND) score 1.0 by convention.
    """
    wanted = plan_content_tokens(plan)
    if not wanted:
        return 1.0
    present = set(tokenize(response_text))
    return sum(1 for tok in wanted if tok in present) / len(wanted)
