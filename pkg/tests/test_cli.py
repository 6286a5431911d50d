import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from askframe.cli import main
from synth import correlated_corpus, write_jsonl


@pytest.fixture()
def runner():
    return CliRunner()


def _hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestAnnotate:
    def test_counts_and_file(self, runner, mini_corpus_path, tmp_path):
        out = tmp_path / "ann.jsonl"
        result = runner.invoke(
            main, ["annotate", "--input", str(mini_corpus_path), "--output", str(out)]
        )
        assert result.exit_code == 0, result.output
        counts = dict(line.split("\t") for line in result.output.strip().splitlines())
        assert counts == {"GIVE": "7", "PERFORM": "2", "GAIN": "3", "LOSE": "1",
                          "RESPOND": "3"}
        assert out.exists()
        first = json.loads(out.read_text().splitlines()[0])
        assert "plan" in first["turns"][0]

    def test_bad_line_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.jsonl"
        good = json.dumps(
            {"dialogue_id": "d", "turns": [{"speaker": "A", "text": "x"},
                                           {"speaker": "B", "text": "y"}]}
        )
        bad.write_text("\n".join([good] * 6 + ["{broken"]) + "\n")
        result = runner.invoke(
            main, ["annotate", "--input", str(bad), "--output", str(tmp_path / "o")]
        )
        assert result.exit_code == 2
        assert "line 7" in result.output + str(result.stderr_bytes or b"")


class TestStats:
    def test_golden_json(self, runner, mini_corpus_path):
        result = runner.invoke(main, ["stats", "--input", str(mini_corpus_path)])
        assert result.exit_code == 0, result.output
        obj = json.loads(result.output)
        assert obj["n_dialogues"] == 3
        assert obj["element_counts"]["GIVE"] == 7

    def test_accepts_annotated_input(self, runner, mini_corpus_path, tmp_path):
        ann = tmp_path / "ann.jsonl"
        runner.invoke(
            main, ["annotate", "--input", str(mini_corpus_path), "--output", str(ann)]
        )
        result = runner.invoke(main, ["stats", "--input", str(ann)])
        assert result.exit_code == 0
        assert json.loads(result.output)["n_dialogues"] == 3


class TestSplitCmd:
    def test_deterministic_hashes(self, runner, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_jsonl(correlated_corpus(40), corpus)
        d1, d2 = tmp_path / "s1", tmp_path / "s2"
        for d in (d1, d2):
            result = runner.invoke(
                main,
                ["split", "--input", str(corpus), "--seed", "42", "--output-dir", str(d)],
            )
            assert result.exit_code == 0, result.output
        for name in ("train", "val", "test"):
            assert _hash(d1 / f"{name}.jsonl") == _hash(d2 / f"{name}.jsonl")

    def test_sizes(self, runner, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_jsonl(correlated_corpus(40), corpus)
        result = runner.invoke(
            main,
            ["split", "--input", str(corpus), "--output-dir", str(tmp_path / "s")],
        )
        sizes = dict(line.split("\t") for line in result.output.strip().splitlines())
        assert sizes == {"train": "32", "val": "4", "test": "4"}


class TestTrainPlanRealize:
    @pytest.fixture()
    def dataset(self, runner, mini_corpus_path, tmp_path):
        path = tmp_path / "examples.jsonl"
        result = runner.invoke(
            main,
            ["build-dataset", "--input", str(mini_corpus_path), "--output", str(path)],
        )
        assert result.exit_code == 0, result.output
        assert "examples\t11" in result.output
        return path

    def test_train_and_plan_deterministic(self, runner, dataset, tmp_path):
        model = tmp_path / "model.json"
        result = runner.invoke(
            main,
            ["train", "--dataset", str(dataset), "--planner", "ngram",
             "--order", "4", "--output", str(model)],
        )
        assert result.exit_code == 0, result.output
        outputs = set()
        for _ in range(2):
            r = runner.invoke(
                main,
                ["plan", "--planner", "ngram", "--model", str(model),
                 "--utterance", "Could you tell me your full name?",
                 "--seed", "3"],
            )
            assert r.exit_code == 0, r.output
            outputs.add(r.output.strip().splitlines()[-1])
        assert len(outputs) == 1
        from askframe.plans import parse_plan

        parse_plan(outputs.pop())

    def test_train_twice_byte_identical(self, runner, dataset, tmp_path):
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        for m in (m1, m2):
            result = runner.invoke(
                main,
                ["train", "--dataset", str(dataset), "--planner", "type",
                 "--output", str(m)],
            )
            assert result.exit_code == 0
        assert _hash(m1) == _hash(m2)

    def test_plan_symbolic(self, runner):
        result = runner.invoke(
            main,
            ["plan", "--utterance",
             "If you check out the website, you can gather a lot more information."],
        )
        assert result.exit_code == 0
        assert result.output.strip() == (
            "PERFORM [check out [the website]] ; GAIN [gather [a lot more information]]"
        )

    def test_plan_kind_mismatch(self, runner, dataset, tmp_path):
        model = tmp_path / "model.json"
        runner.invoke(
            main,
            ["train", "--dataset", str(dataset), "--planner", "type",
             "--output", str(model)],
        )
        result = runner.invoke(
            main,
            ["plan", "--planner", "ngram", "--model", str(model), "--utterance", "hi"],
        )
        assert result.exit_code == 2

    def test_realize_template(self, runner):
        result = runner.invoke(
            main,
            ["realize", "--realizer", "template",
             "--plan", "PERFORM [check out [the website]]", "--utterance", "x"],
        )
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == "Please check out the website."
        assert lines[1] == "adherence\t1.0000"

    def test_realize_retrieval_zero_plan_weight_matches_noplan(
        self, runner, dataset
    ):
        query = "Could you tell me your full name?"
        noplan = runner.invoke(
            main,
            ["realize", "--realizer", "noplan", "--dataset", str(dataset),
             "--utterance", query],
        )
        retrieval = runner.invoke(
            main,
            ["realize", "--realizer", "retrieval", "--dataset", str(dataset),
             "--utterance", query, "--plan", "RESPOND", "--w-plan", "0",
             "--w-input", "1"],
        )
        assert noplan.exit_code == 0 and retrieval.exit_code == 0
        assert retrieval.output.splitlines()[0] == noplan.output.splitlines()[0]

    def test_realize_json_format(self, runner):
        result = runner.invoke(
            main,
            ["realize", "--realizer", "template", "--plan", "RESPOND",
             "--utterance", "x", "--format", "json"],
        )
        obj = json.loads(result.output)
        assert obj["response"] == "Okay."
        assert obj["realizer"] == "template"


class TestEvaluateCmd:
    def test_identical_files(self, runner, tmp_path):
        hyp = tmp_path / "h.txt"
        ref = tmp_path / "r.txt"
        hyp.write_text("the cat sat\nhello there\n")
        ref.write_text("the cat sat\nhello there\n")
        result = runner.invoke(main, ["evaluate", "--hyp", str(hyp), "--ref", str(ref)])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["bleu_1"] == 1.0

    def test_length_mismatch_exits_2(self, runner, tmp_path):
        hyp = tmp_path / "h.txt"
        ref = tmp_path / "r.txt"
        hyp.write_text("one line\n")
        ref.write_text("one line\nand another\n")
        result = runner.invoke(main, ["evaluate", "--hyp", str(hyp), "--ref", str(ref)])
        assert result.exit_code == 2

    def test_vectors_add_embedding(self, runner, tmp_path, data_dir):
        hyp = tmp_path / "h.txt"
        ref = tmp_path / "r.txt"
        hyp.write_text("the cat\n")
        ref.write_text("the cat\n")
        result = runner.invoke(
            main,
            ["evaluate", "--hyp", str(hyp), "--ref", str(ref),
             "--vectors", str(data_dir / "vectors.txt")],
        )
        assert json.loads(result.output)["embedding_f1"] == pytest.approx(1.0)

    def test_plot_written(self, runner, tmp_path):
        hyp = tmp_path / "h.txt"
        ref = tmp_path / "r.txt"
        hyp.write_text("a b\nc d\n")
        ref.write_text("a b\nc e\n")
        plot_dir = tmp_path / "figs"
        result = runner.invoke(
            main,
            ["evaluate", "--hyp", str(hyp), "--ref", str(ref), "--plot", str(plot_dir)],
        )
        assert result.exit_code == 0
        assert (plot_dir / "metrics.png").stat().st_size > 0


class TestPipelineCmd:
    def test_smoke_and_report_rows(self, runner, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_jsonl(correlated_corpus(60), corpus)
        outdir = tmp_path / "run"
        result = runner.invoke(
            main,
            ["pipeline", "--corpus", str(corpus), "--outdir", str(outdir),
             "--order", "5", "--top-p", "0.5"],
        )
        assert result.exit_code == 0, result.output
        report = json.loads((outdir / "report.json").read_text())
        assert [row["realizer"] for row in report["rows"]] == [
            "noplan", "symbolic", "type", "ngram",
        ]
        tsv = (outdir / "report.tsv").read_text().splitlines()
        assert len(tsv) == 5
        assert (outdir / "report_quality.png").stat().st_size > 0
        assert (outdir / "report_diversity.png").stat().st_size > 0

    def test_config_file_with_flag_override(self, runner, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_jsonl(correlated_corpus(60), corpus)
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"corpus = {corpus}\nplanners = type\norder = 5\nseed = 1\n# comment\n"
        )
        outdir = tmp_path / "run"
        result = runner.invoke(
            main,
            ["pipeline", "--config", str(cfg), "--outdir", str(outdir),
             "--planners", "ngram"],
        )
        assert result.exit_code == 0, result.output
        report = json.loads((outdir / "report.json").read_text())
        assert report["config"]["planners"] == ["ngram"]

    def test_bad_config_key_exits_2(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nonsense = 1\n")
        result = runner.invoke(
            main, ["pipeline", "--config", str(cfg), "--outdir", str(tmp_path / "o")]
        )
        assert result.exit_code == 2


class TestChat:
    @pytest.fixture()
    def trained(self, runner, mini_corpus_path, tmp_path):
        dataset = tmp_path / "ex.jsonl"
        model = tmp_path / "m.json"
        runner.invoke(
            main,
            ["build-dataset", "--input", str(mini_corpus_path), "--output", str(dataset)],
        )
        runner.invoke(
            main,
            ["train", "--dataset", str(dataset), "--planner", "type",
             "--output", str(model)],
        )
        return dataset, model

    def test_session_transcript(self, runner, trained):
        dataset, model = trained
        result = runner.invoke(
            main,
            ["chat", "--dataset", str(dataset), "--model", str(model), "--seed", "1"],
            input="\nCould you tell me your full name?\n/seed 7\nWhat do they do?\n/quit\n",
        )
        assert result.exit_code == 0, result.output
        assert "input plan:    GIVE [tell [me your full name]]" in result.output
        assert "response plan:" in result.output
        assert "response:" in result.output
        assert "adherence:" in result.output

    def test_eof_ends_session(self, runner, trained):
        dataset, model = trained
        result = runner.invoke(
            main,
            ["chat", "--dataset", str(dataset), "--model", str(model)],
            input="hello\n",
        )
        assert result.exit_code == 0
