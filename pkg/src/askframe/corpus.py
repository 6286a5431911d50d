"""Corpus ingestion, annotation, statistics, splitting, and example building.

Dialogues are loaded from JSONL or a three-column CSV, merged so that
consecutive same-speaker turns become one utterance, annotated with the
symbolic planner, and harvested into (input, input plan, response plan,
response) training examples from every consecutive turn pair.
"""

from __future__ import annotations

import csv
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from askframe.lexicon import Lexicon, default_lexicon
from askframe.plans import Plan, PlanType, parse_plan, serialize_plan
from askframe.symbolic import extract_plan, is_punct, tokenize


class FormatError(ValueError):
    """Corpus file is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateDialogueId(FormatError):
    pass


class EmptyCorpus(ValueError):
    pass


class TooFewDialogues(ValueError):
    pass


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str
    turn_index: int


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    turns: tuple[Utterance, ...]
    corpus_tag: str = ""


@dataclass(frozen=True)
class AnnotatedUtterance:
    utterance: Utterance
    plan: Plan


@dataclass(frozen=True)
class AnnotatedDialogue:
    dialogue_id: str
    turns: tuple[AnnotatedUtterance, ...]
    corpus_tag: str = ""


@dataclass(frozen=True)
class TrainingExample:
    dialogue_id: str
    turn_index: int
    input_utterance: str
    input_plan: Plan
    response_plan: Plan
    response_utterance: str


@dataclass(frozen=True)
class CorpusStats:
    n_dialogues: int
    avg_conversation_length: float
    avg_utterance_length: float
    element_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "avg_conversation_length": self.avg_conversation_length,
            "avg_utterance_length": self.avg_utterance_length,
            "element_counts": dict(self.element_counts),
        }


def _build_dialogue(
    dialogue_id: str,
    raw_turns: Sequence[tuple[str, str]],
    corpus_tag: str,
    line: int | None,
) -> Dialogue:
    # Consecutive same-speaker turns merge into one utterance; empty turns drop.
    merged: list[tuple[str, str]] = []
    for speaker, text in raw_turns:
        text = text.strip()
        if not text:
            continue
        if merged and merged[-1][0] == speaker:
            merged[-1] = (speaker, merged[-1][1] + " " + text)
        else:
            merged.append((speaker, text))
    if len(merged) < 2:
        raise FormatError(
            f"dialogue {dialogue_id!r} has fewer than 2 non-empty turns after merging",
            line,
        )
    turns = tuple(
        Utterance(speaker=s, text=t, turn_index=i) for i, (s, t) in enumerate(merged)
    )
    return Dialogue(dialogue_id=dialogue_id, turns=turns, corpus_tag=corpus_tag)


def _load_jsonl(path: Path, default_tag: str) -> list[Dialogue]:
    dialogues: list[Dialogue] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(obj, dict) or "dialogue_id" not in obj or "turns" not in obj:
                raise FormatError("expected object with dialogue_id and turns", lineno)
            did = str(obj["dialogue_id"])
            if did in seen:
                raise DuplicateDialogueId(f"duplicate dialogue_id {did!r}", lineno)
            seen.add(did)
            try:
                raw_turns = [(str(t["speaker"]), str(t["text"])) for t in obj["turns"]]
            except (TypeError, KeyError) as exc:
                raise FormatError("each turn needs speaker and text", lineno) from exc
            tag = str(obj.get("corpus_tag", default_tag))
            dialogues.append(_build_dialogue(did, raw_turns, tag, lineno))
    return dialogues


def _load_csv2col(path: Path, default_tag: str) -> list[Dialogue]:
    dialogues: list[Dialogue] = []
    seen: set[str] = set()
    current_id: str | None = None
    current: list[tuple[str, str]] = []
    start_line = 1
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if lineno == 1 and [c.strip().lower() for c in row[:3]] == [
                "dialogue_id",
                "speaker",
                "text",
            ]:
                continue
            if len(row) < 3:
                raise FormatError("expected columns dialogue_id, speaker, text", lineno)
            did, speaker, text = row[0], row[1], row[2]
            if did != current_id:
                if current_id is not None:
                    dialogues.append(
                        _build_dialogue(current_id, current, default_tag, start_line)
                    )
                if did in seen:
                    raise DuplicateDialogueId(f"duplicate dialogue_id {did!r}", lineno)
                seen.add(did)
                current_id = did
                current = []
                start_line = lineno
            current.append((speaker, text))
    if current_id is not None:
        dialogues.append(_build_dialogue(current_id, current, default_tag, start_line))
    return dialogues


def load_corpus(path: str | Path, format: str = "jsonl") -> list[Dialogue]:
    """Load dialogues from ``jsonl`` or ``csv2col`` (dialogue_id, speaker, text)."""
    path = Path(path)
    default_tag = path.stem
    if format == "jsonl":
        return _load_jsonl(path, default_tag)
    if format == "csv2col":
        return _load_csv2col(path, default_tag)
    raise ValueError(f"unknown corpus format {format!r}")


def annotate_corpus(
    dialogues: Iterable[Dialogue], lexicon: Lexicon | None = None
) -> list[AnnotatedDialogue]:
    """Run the symbolic planner over every utterance, preserving order."""
    lexicon = lexicon or default_lexicon()
    out = []
    for d in dialogues:
        turns = tuple(
            AnnotatedUtterance(utterance=u, plan=extract_plan(u.text, lexicon))
            for u in d.turns
        )
        out.append(AnnotatedDialogue(d.dialogue_id, turns, d.corpus_tag))
    return out


def compute_stats(annotated: Sequence[AnnotatedDialogue]) -> CorpusStats:
    """Dialogue/turn/token averages plus per-type plan element counts."""
    if not annotated:
        raise EmptyCorpus("no dialogues to compute statistics over")
    n_dialogues = len(annotated)
    n_turns = 0
    n_tokens = 0
    counts: Counter[str] = Counter({t.value: 0 for t in PlanType})
    for d in annotated:
        n_turns += len(d.turns)
        for au in d.turns:
            n_tokens += sum(1 for tok in tokenize(au.utterance.text) if not is_punct(tok))
            for el in au.plan:
                counts[el.ptype.value] += 1
    return CorpusStats(
        n_dialogues=n_dialogues,
        avg_conversation_length=n_turns / n_dialogues,
        avg_utterance_length=n_tokens / n_turns,
        element_counts=dict(counts),
    )


def split_corpus(
    dialogues: Sequence[Dialogue],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[list[Dialogue], list[Dialogue], list[Dialogue]]:
    """Dialogue-level train/val/test split: floor sizes, remainder to train."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    n = len(dialogues)
    if n < 3:
        raise TooFewDialogues(f"need at least 3 dialogues to split, got {n}")
    order = list(dialogues)
    random.Random(seed).shuffle(order)
    n_val = int(math.floor(n * ratios[1] + 1e-9))
    n_test = int(math.floor(n * ratios[2] + 1e-9))
    n_train = n - n_val - n_test
    return (
        order[:n_train],
        order[n_train : n_train + n_val],
        order[n_train + n_val :],
    )


def build_examples(annotated: Sequence[AnnotatedDialogue]) -> list[TrainingExample]:
    """One example per consecutive turn pair; both directions are harvested."""
    examples: list[TrainingExample] = []
    for d in annotated:
        for left, right in zip(d.turns, d.turns[1:]):
            examples.append(
                TrainingExample(
                    dialogue_id=d.dialogue_id,
                    turn_index=left.utterance.turn_index,
                    input_utterance=left.utterance.text,
                    input_plan=left.plan,
                    response_plan=right.plan,
                    response_utterance=right.utterance.text,
                )
            )
    return examples


# --- JSONL persistence -------------------------------------------------


def write_dialogues(dialogues: Iterable[Dialogue], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in dialogues:
            obj = {
                "dialogue_id": d.dialogue_id,
                "corpus_tag": d.corpus_tag,
                "turns": [{"speaker": u.speaker, "text": u.text} for u in d.turns],
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def write_annotated(annotated: Iterable[AnnotatedDialogue], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in annotated:
            obj = {
                "dialogue_id": d.dialogue_id,
                "corpus_tag": d.corpus_tag,
                "turns": [
                    {
                        "speaker": au.utterance.speaker,
                        "text": au.utterance.text,
                        "plan": serialize_plan(au.plan),
                    }
                    for au in d.turns
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def read_annotated(path: str | Path) -> list[AnnotatedDialogue]:
    out: list[AnnotatedDialogue] = []
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                turns = tuple(
                    AnnotatedUtterance(
                        utterance=Utterance(
                            speaker=str(t["speaker"]), text=str(t["text"]), turn_index=i
                        ),
                        plan=parse_plan(t["plan"]),
                    )
                    for i, t in enumerate(obj["turns"])
                )
                out.append(
                    AnnotatedDialogue(
                        str(obj["dialogue_id"]), turns, str(obj.get("corpus_tag", ""))
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad annotated record: {exc}", lineno) from exc
    return out


def write_examples(examples: Iterable[TrainingExample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ex in examples:
            obj = {
                "dialogue_id": ex.dialogue_id,
                "turn_index": ex.turn_index,
                "input_utterance": ex.input_utterance,
                "input_plan": serialize_plan(ex.input_plan),
                "response_plan": serialize_plan(ex.response_plan),
                "response_utterance": ex.response_utterance,
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def read_examples(path: str | Path) -> list[TrainingExample]:
    out: list[TrainingExample] = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                out.append(
                    TrainingExample(
                        dialogue_id=str(obj["dialogue_id"]),
                        turn_index=int(obj["turn_index"]),
                        input_utterance=str(obj["input_utterance"]),
                        input_plan=parse_plan(obj["input_plan"]),
                        response_plan=parse_plan(obj["response_plan"]),
                        response_utterance=str(obj["response_utterance"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad example record: {exc}", lineno) from exc
    return out


def write_stats(stats: CorpusStats, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
