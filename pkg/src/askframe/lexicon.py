"""Lexicon loading for the rule-based planner.

The lexicon is a plain-text file with one ``[section]`` header per word set
and one word per line; ``#`` starts a comment.  See ``data/lexicon.txt`` for
the bundled default, which is also the extension point for new corpora.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path


class LexiconError(ValueError):
    """The lexicon file is missing sections or violates a set invariant."""


_SECTIONS = (
    "give_verbs",
    "perform_verbs",
    "gain_markers",
    "lose_markers",
    "modal_words",
    "wh_words",
    "stopwords",
    "pronoun_flips",
)


@dataclass(frozen=True)
class Lexicon:
    give_verbs: frozenset[str]
    perform_verbs: frozenset[str]
    gain_markers: frozenset[str]
    lose_markers: frozenset[str]
    modal_words: frozenset[str]
    wh_words: frozenset[str]
    stopwords: frozenset[str]
    pronoun_flips: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.give_verbs & self.perform_verbs:
            raise LexiconError(
                f"give/perform verbs overlap: {sorted(self.give_verbs & self.perform_verbs)}"
            )
        if self.gain_markers & self.lose_markers:
            raise LexiconError(
                f"gain/lose markers overlap: {sorted(self.gain_markers & self.lose_markers)}"
            )

    @property
    def ask_verbs(self) -> frozenset[str]:
        return self.give_verbs | self.perform_verbs


def parse_lexicon(text: str, source: str = "<string>") -> Lexicon:
    sets: dict[str, set[str]] = {name: set() for name in _SECTIONS}
    flips: dict[str, str] = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise LexiconError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise LexiconError(f"{source}:{lineno}: word before any section header")
        if section == "pronoun_flips":
            parts = line.lower().split()
            if len(parts) != 2:
                raise LexiconError(f"{source}:{lineno}: pronoun flip needs two words")
            flips[parts[0]] = parts[1]
            flips[parts[1]] = parts[0]
        else:
            sets[section].add(line.lower())
    missing = [name for name in _SECTIONS[:-1] if not sets[name]]
    if missing:
        raise LexiconError(f"{source}: empty or missing sections: {missing}")
    return Lexicon(
        give_verbs=frozenset(sets["give_verbs"]),
        perform_verbs=frozenset(sets["perform_verbs"]),
        gain_markers=frozenset(sets["gain_markers"]),
        lose_markers=frozenset(sets["lose_markers"]),
        modal_words=frozenset(sets["modal_words"]),
        wh_words=frozenset(sets["wh_words"]),
        stopwords=frozenset(sets["stopwords"]),
        pronoun_flips=flips,
    )


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    return parse_lexicon(path.read_text(encoding="utf-8"), source=str(path))


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    text = resources.files("askframe.data").joinpath("lexicon.txt").read_text("utf-8")
    return parse_lexicon(text, source="askframe/data/lexicon.txt")
