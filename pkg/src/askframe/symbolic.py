"""Rule-based extraction of ask/framing plans from raw utterance text.

This is the source of the silver standard: each sentence is scanned with a
fixed priority order of lexical patterns that yield at most one ask plus any
number of framings.  Extraction is total and deterministic; utterances with
no detected ask or framing carry the default RESPOND plan.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from askframe.lexicon import Lexicon, default_lexicon
from askframe.plans import Plan, PlanElement, PlanType

# Particles that attach to a verb as a phrasal action ("check out").
PARTICLES = frozenset({"out", "up", "off", "in", "on", "over"})

# Tokens that end a target span.  "that" is deliberately absent: it is kept
# as a complementizer inside targets.
_BOUNDARY_WORDS = frozenset({"and", "but", "or", "so", "because", "if"})

# Question-initial auxiliaries that trigger the elicitation rule.
_AUX_TRIGGERS = frozenset({"do", "did", "are", "is", "have"})

# Symbol tokens allowed inside targets even though they carry no letters.
_SYMBOL_TOKENS = frozenset({"$", "%", "#", "&", "+"})

_ALNUM = re.compile(r"[a-z0-9]")
_TOKEN = re.compile(r"[a-z0-9]+(?=n't\b)|n't|'[a-z0-9]+|[a-z0-9]+|[^\sa-z0-9]")
_SENT_END = re.compile(r"[.!?]+(?=\s|$)")


def tokenize(text: str) -> list[str]:
    """Lowercased tokens: punctuation standalone, contractions split ("do n't")."""
    return _TOKEN.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final punctuation runs; delimiters stay attached."""
    sentences = []
    start = 0
    for match in _SENT_END.finditer(text):
        sentences.append(text[start : match.end()])
        start = match.end()
    sentences.append(text[start:])
    return [s.strip() for s in sentences if s.strip()]


def is_punct(token: str) -> bool:
    return not _ALNUM.search(token)


def _is_boundary(token: str) -> bool:
    if token in _BOUNDARY_WORDS:
        return True
    return is_punct(token) and token not in _SYMBOL_TOKENS


@dataclass(frozen=True)
class ClauseMatch:
    """A pattern hit: the plan type it implies and the token that anchors it."""

    ptype: PlanType
    verb_index: int
    sentence_index: int
    pattern_name: str


def _ask_type(verb: str, lexicon: Lexicon) -> PlanType:
    return PlanType.GIVE if verb in lexicon.give_verbs else PlanType.PERFORM


def _find_ask(tokens: list[str], lexicon: Lexicon, sidx: int) -> ClauseMatch | None:
    # 1. Imperative: first content token is an ask verb, "please" skipped.
    for i, tok in enumerate(tokens):
        if tok == "please" or tok in lexicon.stopwords or is_punct(tok):
            continue
        if tok in lexicon.ask_verbs:
            return ClauseMatch(_ask_type(tok, lexicon), i, sidx, "imperative")
        break
    # 2. Modal request: <modal> "you" <ask verb>.
    for i in range(len(tokens) - 2):
        if (
            tokens[i] in lexicon.modal_words
            and tokens[i + 1] == "you"
            and tokens[i + 2] in lexicon.ask_verbs
        ):
            return ClauseMatch(
                _ask_type(tokens[i + 2], lexicon), i + 2, sidx, "modal_request"
            )
    # 3. Desire: "i need/want you to <verb>" or "would you like to <verb>".
    for i in range(len(tokens) - 4):
        head = tokens[i : i + 4]
        if (
            head[0] == "i" and head[1] in ("need", "want") and head[2] == "you" and head[3] == "to"
        ) or (head[0] == "would" and head[1] == "you" and head[2] == "like" and head[3] == "to"):
            verb = tokens[i + 4]
            if not is_punct(verb):
                return ClauseMatch(_ask_type(verb, lexicon), i + 4, sidx, "desire")
    # 4. Elicitation: a question with a wh word or an auxiliary start asks to GIVE.
    if tokens and tokens[-1] == "?":
        trigger = None
        for i, tok in enumerate(tokens):
            if tok in lexicon.wh_words:
                trigger = i
                break
        if trigger is None and tokens[0] in _AUX_TRIGGERS:
            trigger = 0
        if trigger is not None:
            for j in range(trigger + 1, len(tokens)):
                if tokens[j] in lexicon.ask_verbs:
                    return ClauseMatch(PlanType.GIVE, j, sidx, "elicitation")
            return ClauseMatch(PlanType.GIVE, trigger, sidx, "elicitation_default")
    return None


def classify_clause(
    tokens: list[str], lexicon: Lexicon, sentence_index: int = 0
) -> list[ClauseMatch]:
    """Apply the pattern rules: at most one ask plus any framings per sentence."""
    matches: list[ClauseMatch] = []
    ask = _find_ask(tokens, lexicon, sentence_index)
    ask_index = -1
    if ask is not None:
        matches.append(ask)
        ask_index = ask.verb_index
    for i, tok in enumerate(tokens):
        if i == ask_index:
            continue
        if tok in lexicon.gain_markers:
            matches.append(ClauseMatch(PlanType.GAIN, i, sentence_index, "framing_gain"))
        elif tok in lexicon.lose_markers:
            matches.append(ClauseMatch(PlanType.LOSE, i, sentence_index, "framing_lose"))
    return matches


def _span_until_boundary(tokens: list[str], start: int) -> tuple[str, ...]:
    span: list[str] = []
    for tok in tokens[start:]:
        if _is_boundary(tok):
            break
        span.append(tok)
    return tuple(span)


def extract_target(tokens: list[str], verb_index: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Action = verb (+ phrasal particle); target = span up to a clause boundary."""
    action = [tokens[verb_index]]
    rest = verb_index + 1
    if rest < len(tokens) and tokens[rest] in PARTICLES:
        action.append(tokens[rest])
        rest += 1
    return tuple(action), _span_until_boundary(tokens, rest)


def extract_plan(text: str, lexicon: Lexicon | None = None) -> Plan:
    """Extract the ask/framing plan of an utterance; RESPOND when nothing fires."""
    lexicon = lexicon or default_lexicon()
    elements: list[PlanElement] = []
    for sidx, sentence in enumerate(split_sentences(text)):
        tokens = tokenize(sentence)
        for match in sorted(classify_clause(tokens, lexicon, sidx), key=lambda m: m.verb_index):
            if match.pattern_name == "elicitation_default":
                action: tuple[str, ...] = ("give",)
                target = _span_until_boundary(tokens, match.verb_index + 1)
            else:
                action, target = extract_target(tokens, match.verb_index)
            elements.append(PlanElement(match.ptype, action, target))
    if not elements:
        return Plan.respond()
    return Plan(tuple(elements))
