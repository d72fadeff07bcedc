import subprocess
import sys

from factqa.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestUsage:
    def test_help_exits_zero_and_lists_flags(self):
        proc = subprocess.run(
            [sys.executable, "-m", "factqa.cli", "train", "--help"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        for flag in ("--kb-triples", "--kb-aliases", "--kb-types",
                     "--dataset", "--checkpoint-dir", "--entity-repr",
                     "--encoder", "--pruning", "--combine", "--seed",
                     "--epochs"):
            assert flag in proc.stdout

    def test_unknown_command_is_usage_error(self, capsys):
        assert run_cli("frobnicate") == 1

    def test_bad_flag_is_usage_error(self):
        assert run_cli("gen-toy", "--no-such-flag") == 1

    def test_missing_file_is_data_error(self, tmp_path):
        code = run_cli("build-kb", "--kb-triples", str(tmp_path / "x.tsv"),
                       "--kb-aliases", str(tmp_path / "x.tsv"),
                       "--kb-types", str(tmp_path / "x.tsv"))
        assert code == 2


class TestGenToyAndBuildKb:
    def test_gen_toy_then_build_kb(self, tmp_path, capsys):
        out = tmp_path / "toy"
        assert run_cli("gen-toy", "--out", str(out), "--seed", "3") == 0
        gen_out = capsys.readouterr().out
        assert "train_questions=" in gen_out
        code = run_cli("build-kb",
                       "--kb-triples", str(out / "triples.tsv"),
                       "--kb-aliases", str(out / "aliases.tsv"),
                       "--kb-types", str(out / "types.tsv"))
        assert code == 0
        stats = capsys.readouterr().out
        assert "entities=" in stats and "facts=" in stats


class TestGradcheckCommand:
    def test_exits_zero_when_all_suites_pass(self, capsys):
        assert run_cli("gradcheck", "--seed", "0") == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out


class TestBenchCommand:
    def test_reports_both_backends(self, capsys):
        assert run_cli("bench", "--sizes", "16", "--repeats", "3",
                       "--seq-len", "4") == 0
        out = capsys.readouterr().out
        assert "numpy ms" in out


class TestTrainedCommands:
    def test_eval_prints_metrics(self, toy_dir, trained_pipeline, capsys):
        code = run_cli(
            "eval",
            "--kb-triples", toy_dir["triples"],
            "--kb-aliases", toy_dir["aliases"],
            "--kb-types", toy_dir["types"],
            "--dataset", toy_dir["test"],
            "--checkpoint-dir", trained_pipeline["checkpoint_dir"])
        assert code == 0
        out = capsys.readouterr().out
        for key in ("accuracy=", "recall=", "single_subject_acc=",
                    "multi_subject_acc="):
            assert key in out

    def test_eval_writes_predictions(self, toy_dir, trained_pipeline,
                                     tmp_path, capsys):
        pred_path = tmp_path / "preds.tsv"
        code = run_cli(
            "eval",
            "--kb-triples", toy_dir["triples"],
            "--kb-aliases", toy_dir["aliases"],
            "--kb-types", toy_dir["types"],
            "--dataset", toy_dir["test"],
            "--checkpoint-dir", trained_pipeline["checkpoint_dir"],
            "--predictions-out", str(pred_path))
        assert code == 0
        capsys.readouterr()
        lines = pred_path.read_text().strip().split("\n")
        assert len(lines) > 0
        assert all(len(line.split("\t")) == 5 for line in lines)

    def test_answer_single_question(self, toy_dir, trained_pipeline,
                                    capsys):
        code = run_cli(
            "answer",
            "--kb-triples", toy_dir["triples"],
            "--kb-aliases", toy_dir["aliases"],
            "--kb-types", toy_dir["types"],
            "--checkpoint-dir", trained_pipeline["checkpoint_dir"],
            "--question", "Who created the character Harry Potter")
        assert code == 0
        out = capsys.readouterr().out
        assert "subject=HarryPotter" in out
        assert "relation=character_created_by" in out
        assert "objects=JKRowling" in out

    def test_answer_reads_stdin(self, toy_dir, trained_pipeline, capsys,
                                monkeypatch):
        import io
        monkeypatch.setattr(
            "sys.stdin",
            io.StringIO("who wrote the book the silver crown\nexit\n"))
        code = run_cli(
            "answer",
            "--kb-triples", toy_dir["triples"],
            "--kb-aliases", toy_dir["aliases"],
            "--kb-types", toy_dir["types"],
            "--checkpoint-dir", trained_pipeline["checkpoint_dir"])
        assert code == 0
        out = capsys.readouterr().out
        assert "relation=book_written_by" in out
