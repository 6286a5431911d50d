import json
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def mini_corpus_path() -> Path:
    return DATA_DIR / "mini_corpus.jsonl"


@pytest.fixture(scope="session")
def metric_pairs() -> list[tuple[list[str], list[list[str]]]]:
    pairs = []
    with (DATA_DIR / "metric_pairs.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                pairs.append((obj["hyp"].split(), [r.split() for r in obj["refs"]]))
    return pairs


@pytest.fixture(scope="session")
def plan_strings() -> list[str]:
    lines = (DATA_DIR / "plan_strings.txt").read_text(encoding="utf-8").splitlines()
    return [ln for ln in lines if ln.strip() and not ln.startswith("#")]
