"""Plan representation language: the typed ask/framing formalism.

A plan is an ordered, non-empty sequence of elements.  Each element is either
the bare default ``RESPOND`` or ``TYPE [action [target]]`` where the type is
one of two asks (GIVE, PERFORM) or two framings (GAIN, LOSE), the action is a
non-empty lowercased token sequence, and the target is a possibly empty
lowercased token sequence.  Multiple elements are joined with ``;``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator


class MalformedPlan(ValueError):
    """The given plan string does not follow the plan grammar."""


class PlanType(Enum):
    GIVE = "GIVE"
    PERFORM = "PERFORM"
    GAIN = "GAIN"
    LOSE = "LOSE"
    RESPOND = "RESPOND"

    @property
    def is_ask(self) -> bool:
        return self in (PlanType.GIVE, PlanType.PERFORM)

    @property
    def is_framing(self) -> bool:
        return self in (PlanType.GAIN, PlanType.LOSE)


_TYPE_NAMES = {t.value: t for t in PlanType}
_FORBIDDEN_CHARS = set("[];")


def _check_tokens(tokens: tuple[str, ...], kind: str) -> None:
    for tok in tokens:
        if not tok or any(ch.isspace() for ch in tok):
            raise ValueError(f"{kind} token {tok!r} is empty or contains whitespace")
        if _FORBIDDEN_CHARS.intersection(tok):
            raise ValueError(f"{kind} token {tok!r} contains a reserved bracket character")


@dataclass(frozen=True)
class PlanElement:
    """One ask or framing: a type, an action span, and an optional target span."""

    ptype: PlanType
    action: tuple[str, ...] = ()
    target: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "action", tuple(self.action))
        object.__setattr__(self, "target", tuple(self.target))
        if self.ptype is PlanType.RESPOND:
            if self.action or self.target:
                raise ValueError("RESPOND elements carry no action or target")
        elif not self.action:
            raise ValueError(f"{self.ptype.value} element requires a non-empty action")
        _check_tokens(self.action, "action")
        _check_tokens(self.target, "target")

    @classmethod
    def respond(cls) -> "PlanElement":
        return cls(PlanType.RESPOND)


@dataclass(frozen=True)
class Plan:
    """Ordered, never-empty sequence of plan elements."""

    elements: tuple[PlanElement, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ValueError("a plan holds at least one element")

    def __iter__(self) -> Iterator[PlanElement]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    @classmethod
    def respond(cls) -> "Plan":
        return cls((PlanElement.respond(),))

    @classmethod
    def of(cls, *elements: PlanElement) -> "Plan":
        return cls(tuple(elements))

    @property
    def type_sequence(self) -> tuple[str, ...]:
        return tuple(el.ptype.value for el in self.elements)


# Brackets and the separator are standalone tokens no matter how the
# surrounding whitespace looks; everything else splits on whitespace.
_PLAN_LEXER = re.compile(r"[\[\];]|[^\s\[\];]+")


def _lex(text: str) -> list[str]:
    return _PLAN_LEXER.findall(text)


def parse_plan(text: str) -> Plan:
    """Parse a plan string, tolerating arbitrary whitespace around brackets.

    Raises MalformedPlan on unbalanced brackets, unknown type names, an empty
    action for a non-RESPOND element, or any other grammar violation.
    """
    if not text or not text.strip():
        raise MalformedPlan("empty plan string")
    tokens = _lex(text)
    groups: list[list[str]] = [[]]
    depth = 0
    for tok in tokens:
        if tok == "[":
            depth += 1
        elif tok == "]":
            depth -= 1
            if depth < 0:
                raise MalformedPlan(f"unbalanced ']' in {text!r}")
        elif tok == ";" and depth == 0:
            groups.append([])
            continue
        elif tok == ";":
            raise MalformedPlan(f"';' inside brackets in {text!r}")
        groups[-1].append(tok)
    if depth != 0:
        raise MalformedPlan(f"unbalanced '[' in {text!r}")
    elements = tuple(_parse_element(group, text) for group in groups)
    return Plan(elements)


def _parse_element(tokens: list[str], source: str) -> PlanElement:
    if not tokens:
        raise MalformedPlan(f"empty plan element in {source!r}")
    head = tokens[0].upper()
    ptype = _TYPE_NAMES.get(head)
    if ptype is None:
        raise MalformedPlan(f"unknown plan type {tokens[0]!r} in {source!r}")
    if ptype is PlanType.RESPOND:
        if len(tokens) > 1:
            raise MalformedPlan(f"RESPOND takes no arguments in {source!r}")
        return PlanElement.respond()
    if len(tokens) < 2 or tokens[1] != "[":
        raise MalformedPlan(f"expected '[' after {head} in {source!r}")
    action: list[str] = []
    i = 2
    while i < len(tokens) and tokens[i] not in ("[", "]"):
        action.append(tokens[i].lower())
        i += 1
    if i >= len(tokens) or tokens[i] != "[":
        raise MalformedPlan(f"missing target bracket for {head} in {source!r}")
    if not action:
        raise MalformedPlan(f"empty action for {head} in {source!r}")
    target: list[str] = []
    i += 1
    while i < len(tokens) and tokens[i] not in ("[", "]"):
        target.append(tokens[i].lower())
        i += 1
    if i >= len(tokens) or tokens[i] != "]":
        raise MalformedPlan(f"unterminated target for {head} in {source!r}")
    i += 1
    if i >= len(tokens) or tokens[i] != "]":
        raise MalformedPlan(f"unterminated element for {head} in {source!r}")
    if i + 1 != len(tokens):
        raise MalformedPlan(f"trailing tokens after {head} element in {source!r}")
    return PlanElement(ptype, tuple(action), tuple(target))


def serialize_plan(plan: Plan) -> str:
    """Canonical form: elements joined by " ; ", single spaces, tight brackets."""
    return " ; ".join(_serialize_element(el) for el in plan)


def _serialize_element(el: PlanElement) -> str:
    if el.ptype is PlanType.RESPOND:
        return "RESPOND"
    return f"{el.ptype.value} [{' '.join(el.action)} [{' '.join(el.target)}]]"


def plan_tokens(plan: Plan) -> list[str]:
    """Tokens of the canonical serialization, brackets and ';' standalone."""
    return _lex(serialize_plan(plan))


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def element_similarity(a: PlanElement, b: PlanElement) -> float:
    """0.4 for a type match plus 0.3 each for action/target Jaccard; 0 across types."""
    if a.ptype is not b.ptype:
        return 0.0
    return (
        0.4
        + 0.3 * _jaccard(set(a.action), set(b.action))
        + 0.3 * _jaccard(set(a.target), set(b.target))
    )


def plan_similarity(a: Plan, b: Plan) -> float:
    """Greedy one-to-one element alignment, normalized by the longer plan."""
    scored = sorted(
        (
            (-element_similarity(x, y), i, j)
            for i, x in enumerate(a)
            for j, y in enumerate(b)
        ),
    )
    used_a: set[int] = set()
    used_b: set[int] = set()
    total = 0.0
    for neg_score, i, j in scored:
        if neg_score == 0.0:
            break
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        total += -neg_score
    return total / max(len(a), len(b))


def parse_plans(texts: Iterable[str]) -> list[Plan]:
    return [parse_plan(t) for t in texts]
