"""Automated NLG metrics, implemented from scratch.

Corpus-level BLEU-1..4 with clipped precisions and brevity penalty, ROUGE-L
(beta = 1.2), a METEOR variant restricted to exact and suffix-stem matches
("meteor-lite"), plain CIDEr without the x10 scaling, distinct-1 diversity,
mean length, and an optional static-embedding greedy-matching score.  The
same machinery evaluates plan strings and realized responses.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from askframe.symbolic import tokenize

Tokens = Sequence[str]


class EmptyInput(ValueError):
    pass


class TooFewPairs(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class BadVectorFile(ValueError):
    pass


@dataclass(frozen=True)
class EvalPair:
    hypothesis: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "hypothesis", tuple(self.hypothesis))
        object.__setattr__(self, "references", tuple(tuple(r) for r in self.references))
        if not self.references:
            raise ValueError("an eval pair needs at least one reference")
        for tok in self.hypothesis:
            if not tok:
                raise ValueError("empty token in hypothesis")
        for ref in self.references:
            for tok in ref:
                if not tok:
                    raise ValueError("empty token in reference")


@dataclass(frozen=True)
class MetricReport:
    bleu: tuple[float, ...]
    rouge_l: float
    meteor_lite: float
    cider: float | None
    distinct_1: float
    mean_length: float
    embedding_precision: float | None = None
    embedding_recall: float | None = None
    embedding_f1: float | None = None

    def to_dict(self) -> dict:
        out: dict = {f"bleu_{i + 1}": v for i, v in enumerate(self.bleu)}
        out["rouge_l"] = self.rouge_l
        out["meteor_lite"] = self.meteor_lite
        out["cider"] = self.cider
        out["distinct_1"] = self.distinct_1
        out["mean_length"] = self.mean_length
        if self.embedding_f1 is not None:
            out["embedding_precision"] = self.embedding_precision
            out["embedding_recall"] = self.embedding_recall
            out["embedding_f1"] = self.embedding_f1
        return out


def _ngrams(tokens: Tokens, n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu(pairs: Sequence[EvalPair], max_n: int = 4) -> list[float]:
    """Corpus BLEU-1..max_n with clipped n-gram precision and brevity penalty."""
    if not pairs:
        raise EmptyInput("bleu needs at least one pair")
    matched = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for pair in pairs:
        hyp = pair.hypothesis
        hyp_len += len(hyp)
        # Closest reference length; ties resolve to the shorter reference.
        ref_len += min((abs(len(r) - len(hyp)), len(r)) for r in pair.references)[1]
        for n in range(1, max_n + 1):
            hyp_counts = Counter(_ngrams(hyp, n))
            clip: Counter = Counter()
            for ref in pair.references:
                for gram, count in Counter(_ngrams(ref, n)).items():
                    clip[gram] = max(clip[gram], count)
            matched[n - 1] += sum(min(c, clip[g]) for g, c in hyp_counts.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    if hyp_len == 0:
        return [0.0] * max_n
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    precisions = [
        matched[k] / totals[k] if totals[k] > 0 else 0.0 for k in range(max_n)
    ]
    scores = []
    for n in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:n]):
            scores.append(0.0)
        else:
            scores.append(bp * math.exp(sum(math.log(p) for p in precisions[:n]) / n))
    return scores


def _lcs_length(a: Tokens, b: Tokens) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pairs: Sequence[EvalPair], beta: float = 1.2) -> float:
    """Mean LCS-based F score; the best reference counts per pair."""
    if not pairs:
        raise EmptyInput("rouge_l needs at least one pair")
    total = 0.0
    for pair in pairs:
        best = 0.0
        for ref in pair.references:
            lcs = _lcs_length(pair.hypothesis, ref)
            if lcs == 0 or not pair.hypothesis or not ref:
                continue
            p = lcs / len(pair.hypothesis)
            r = lcs / len(ref)
            best = max(best, ((1 + beta**2) * p * r) / (r + beta**2 * p))
        total += best
    return total / len(pairs)


_STEM_SUFFIXES = ("ing", "es", "ed", "s")


def _stem(word: str) -> str:
    for suffix in _STEM_SUFFIXES:
        if word.endswith(suffix) and len(word) - len(suffix) >= 2:
            return word[: -len(suffix)]
    return word


def _meteor_alignment(hyp: Tokens, ref: Tokens) -> dict[int, int]:
    taken = [False] * len(ref)
    alignment: dict[int, int] = {}
    for i, h in enumerate(hyp):
        for j, r in enumerate(ref):
            if not taken[j] and h == r:
                taken[j] = True
                alignment[i] = j
                break
    for i, h in enumerate(hyp):
        if i in alignment:
            continue
        hs = _stem(h)
        for j, r in enumerate(ref):
            if not taken[j] and _stem(r) == hs:
                taken[j] = True
                alignment[i] = j
                break
    return alignment


def _meteor_pair(hyp: Tokens, ref: Tokens) -> float:
    alignment = _meteor_alignment(hyp, ref)
    m = len(alignment)
    if m == 0 or not hyp or not ref:
        return 0.0
    p = m / len(hyp)
    r = m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    ordered = sorted(alignment.items())
    chunks = 1
    for (i1, j1), (i2, j2) in zip(ordered, ordered[1:]):
        if i2 != i1 + 1 or j2 != j1 + 1:
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1 - penalty)


def meteor_lite(pairs: Sequence[EvalPair]) -> float:
    """Exact + suffix-stem unigram alignment; no synonym dictionary."""
    if not pairs:
        raise EmptyInput("meteor_lite needs at least one pair")
    return sum(
        max(_meteor_pair(pair.hypothesis, ref) for ref in pair.references)
        for pair in pairs
    ) / len(pairs)


def _cosine_counts(a: Mapping, b: Mapping) -> float:
    if not a or not b:
        return 0.0
    dot = sum(w * b[g] for g, w in a.items() if g in b)
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def cider(pairs: Sequence[EvalPair], max_n: int = 4) -> float:
    """Plain CIDEr: mean over n of mean tf-idf n-gram cosine, no scaling."""
    if not pairs:
        raise EmptyInput("cider needs at least one pair")
    if len(pairs) < 2:
        raise TooFewPairs("cider idf needs at least 2 pairs")
    n_docs = len(pairs)
    score = 0.0
    for n in range(1, max_n + 1):
        doc_freq: Counter = Counter()
        for pair in pairs:
            grams: set = set()
            for ref in pair.references:
                grams.update(_ngrams(ref, n))
            doc_freq.update(grams)

        def tfidf(tokens: Tokens) -> dict:
            return {
                g: c * math.log(n_docs / (1 + doc_freq[g]))
                for g, c in Counter(_ngrams(tokens, n)).items()
            }

        level = 0.0
        for pair in pairs:
            hyp_vec = tfidf(pair.hypothesis)
            level += sum(
                _cosine_counts(hyp_vec, tfidf(ref)) for ref in pair.references
            ) / len(pair.references)
        score += level / n_docs
    return score / max_n


def distinct_1(hypotheses: Sequence[Tokens]) -> float:
    """Distinct unigrams across all hypotheses over total generated tokens."""
    if not hypotheses:
        raise EmptyInput("distinct_1 needs at least one hypothesis")
    total = sum(len(h) for h in hypotheses)
    if total == 0:
        return 0.0
    return len({tok for h in hypotheses for tok in h}) / total


def mean_length(hypotheses: Sequence[Tokens]) -> float:
    if not hypotheses:
        raise EmptyInput("mean_length needs at least one hypothesis")
    return sum(len(h) for h in hypotheses) / len(hypotheses)


def _vec_cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def embedding_score(
    pairs: Sequence[EvalPair], vectors: Mapping[str, Sequence[float]]
) -> tuple[float, float, float]:
    """Greedy matching over static word vectors; OOV words score zero."""
    if not pairs:
        raise EmptyInput("embedding_score needs at least one pair")
    dims = {len(v) for v in vectors.values()}
    if len(dims) > 1:
        raise BadVectorFile(f"inconsistent vector dimensions: {sorted(dims)}")
    zero: tuple[float, ...] = (0.0,) * (dims.pop() if dims else 1)

    def lookup(tok: str) -> Sequence[float]:
        return vectors.get(tok, zero)

    def greedy(src: Tokens, dst: list[Sequence[float]]) -> float:
        if not src or not dst:
            return 0.0
        return sum(max(_vec_cosine(lookup(t), v) for v in dst) for t in src) / len(src)

    p_sum = r_sum = f_sum = 0.0
    for pair in pairs:
        ref_tokens = [t for ref in pair.references for t in ref]
        ref_vecs = [lookup(t) for t in ref_tokens]
        hyp_vecs = [lookup(t) for t in pair.hypothesis]
        p = greedy(pair.hypothesis, ref_vecs)
        r = greedy(ref_tokens, hyp_vecs)
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        p_sum += p
        r_sum += r
        f_sum += f
    n = len(pairs)
    return p_sum / n, r_sum / n, f_sum / n


def load_vectors(path: str | Path) -> dict[str, tuple[float, ...]]:
    """Text vector file: one line per word, ``word v1 v2 ... vd``."""
    vectors: dict[str, tuple[float, ...]] = {}
    dim: int | None = None
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise BadVectorFile(f"line {lineno}: expected word and values")
            try:
                values = tuple(float(x) for x in parts[1:])
            except ValueError as exc:
                raise BadVectorFile(f"line {lineno}: bad float: {exc}") from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise BadVectorFile(
                    f"line {lineno}: dimension {len(values)} != {dim}"
                )
            vectors[parts[0]] = values
    if not vectors:
        raise BadVectorFile(f"{path}: no vectors found")
    return vectors


def evaluate_system(
    hypotheses: Sequence[str],
    references: Sequence[str],
    vectors: Mapping[str, Sequence[float]] | None = None,
    max_n: int = 4,
) -> MetricReport:
    """Run the full metric suite over line-aligned hypothesis/reference strings."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise EmptyInput("nothing to evaluate")
    hyp_tokens = [tokenize(h) for h in hypotheses]
    pairs = [
        EvalPair(tuple(h), (tuple(tokenize(r)),))
        for h, r in zip(hyp_tokens, references)
    ]
    emb = embedding_score(pairs, vectors) if vectors is not None else (None, None, None)
    return MetricReport(
        bleu=tuple(bleu(pairs, max_n)),
        rouge_l=rouge_l(pairs),
        meteor_lite=meteor_lite(pairs),
        cider=cider(pairs, max_n) if len(pairs) >= 2 else None,
        distinct_1=distinct_1(hyp_tokens),
        mean_length=mean_length(hyp_tokens),
        embedding_precision=emb[0],
        embedding_recall=emb[1],
        embedding_f1=emb[2],
    )
