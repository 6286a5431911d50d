"""Independent brute-force metric oracles.

Deliberately naive: n-grams are counted by scanning positions, LCS is a
memoized recursion, CIDEr recomputes document frequencies per gram.  These
exist to cross-check the production implementations, so they share no code
with them.
"""

from __future__ import annotations

import math
from functools import lru_cache

Pair = tuple[list[str], list[list[str]]]


def _grams_at(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _count_gram(tokens: list[str], gram: tuple[str, ...]) -> int:
    n = len(gram)
    hits = 0
    for i in range(len(tokens) - n + 1):
        if tuple(tokens[i : i + n]) == gram:
            hits += 1
    return hits


def oracle_bleu(pairs: list[Pair], max_n: int = 4) -> list[float]:
    matched = [0.0] * max_n
    totals = [0.0] * max_n
    hyp_total = 0
    ref_total = 0
    for hyp, refs in pairs:
        hyp_total += len(hyp)
        best_len = None
        for ref in refs:
            delta = abs(len(ref) - len(hyp))
            if best_len is None or delta < best_len[0] or (
                delta == best_len[0] and len(ref) < best_len[1]
            ):
                best_len = (delta, len(ref))
        ref_total += best_len[1]
        for n in range(1, max_n + 1):
            for gram in set(_grams_at(hyp, n)):
                have = _count_gram(hyp, gram)
                allow = max(_count_gram(ref, gram) for ref in refs)
                matched[n - 1] += min(have, allow)
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    if hyp_total == 0:
        return [0.0] * max_n
    bp = min(1.0, math.exp(1.0 - ref_total / hyp_total))
    out = []
    for n in range(1, max_n + 1):
        logs = []
        degenerate = False
        for k in range(n):
            if totals[k] == 0 or matched[k] == 0:
                degenerate = True
                break
            logs.append(math.log(matched[k] / totals[k]))
        out.append(0.0 if degenerate else bp * math.exp(sum(logs) / n))
    return out


def _lcs_recursive(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def oracle_rouge_l(pairs: list[Pair], beta: float = 1.2) -> float:
    total = 0.0
    for hyp, refs in pairs:
        best = 0.0
        for ref in refs:
            lcs = _lcs_recursive(tuple(hyp), tuple(ref))
            if lcs == 0:
                continue
            p = lcs / len(hyp)
            r = lcs / len(ref)
            best = max(best, (1 + beta * beta) * p * r / (r + beta * beta * p))
        total += best
    return total / len(pairs)


def _oracle_stem(word: str) -> str:
    for suffix in ("ing", "es", "ed", "s"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 2:
            return word[: len(word) - len(suffix)]
    return word


def _oracle_meteor_pair(hyp: list[str], ref: list[str]) -> float:
    used_h: set[int] = set()
    used_r: set[int] = set()
    matches: list[tuple[int, int]] = []
    for stage in ("exact", "stem"):
        for i in range(len(hyp)):
            if i in used_h:
                continue
            for j in range(len(ref)):
                if j in used_r:
                    continue
                same = hyp[i] == ref[j] if stage == "exact" else (
                    _oracle_stem(hyp[i]) == _oracle_stem(ref[j])
                )
                if same:
                    matches.append((i, j))
                    used_h.add(i)
                    used_r.add(j)
                    break
    m = len(matches)
    if m == 0:
        return 0.0
    p = m / len(hyp)
    r = m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    matches.sort()
    chunks = 1
    for k in range(1, len(matches)):
        if matches[k][0] != matches[k - 1][0] + 1 or matches[k][1] != matches[k - 1][1] + 1:
            chunks += 1
    return f_mean * (1 - 0.5 * (chunks / m) ** 3)


def oracle_meteor(pairs: list[Pair]) -> float:
    return sum(max(_oracle_meteor_pair(h, r) for r in refs) for h, refs in pairs) / len(
        pairs
    )


def oracle_cider(pairs: list[Pair], max_n: int = 4) -> float:
    n_docs = len(pairs)

    def ref_grams(refs: list[list[str]], n: int) -> set:
        grams: set = set()
        for ref in refs:
            grams.update(_grams_at(ref, n))
        return grams

    score = 0.0
    for n in range(1, max_n + 1):
        level = 0.0
        for hyp, refs in pairs:
            pair_score = 0.0
            for ref in refs:
                vocab = set(_grams_at(hyp, n)) | set(_grams_at(ref, n))
                dot = norm_h = norm_r = 0.0
                for gram in vocab:
                    df = sum(1 for _, other in pairs if gram in ref_grams(other, n))
                    idf = math.log(n_docs / (1 + df))
                    wh = _count_gram(hyp, gram) * idf
                    wr = _count_gram(ref, gram) * idf
                    dot += wh * wr
                    norm_h += wh * wh
                    norm_r += wr * wr
                if norm_h > 0 and norm_r > 0:
                    pair_score += dot / math.sqrt(norm_h * norm_r)
            level += pair_score / len(refs)
        score += level / n_docs
    return score / max_n


def oracle_distinct_1(hypotheses: list[list[str]]) -> float:
    seen = []
    total = 0
    for hyp in hypotheses:
        for tok in hyp:
            total += 1
            if tok not in seen:
                seen.append(tok)
    return len(seen) / total if total else 0.0
