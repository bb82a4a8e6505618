import json
import subprocess
import sys

import pytest

from eventboot.cli import main
from eventboot.synth import SynthSpec, generate


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    generate(SynthSpec(n_days=8, seed=3)).write(out)
    (out / "config.yaml").write_text(
        "paths:\n  corpus: documents.jsonl\n  embeddings: embeddings.txt\n  gold: gold.jsonl\n"
        "  test: test.jsonl\n  heldout: heldout.jsonl\n  output: run\neval:\n  resamples: 200\n"
    )
    return out


def test_eval_of_gold_against_itself(data, tmp_path, capsys):
    rc = main(["eval", "--predictions", str(data / "test.jsonl"), "--gold", str(data / "test.jsonl"),
               "--out", str(tmp_path / "self")])
    assert rc == 0
    assert json.loads((tmp_path / "self.json").read_text())["f1"] == 1.0
    assert (tmp_path / "self.png").stat().st_size > 0
    assert "MICRO" in capsys.readouterr().out


def test_eval_exits_zero_for_poor_scores(data, tmp_path):
    (tmp_path / "empty.jsonl").write_text("")
    assert main(["eval", "--config", str(data / "config.yaml"), "--predictions", str(tmp_path / "empty.jsonl")]) == 0


def test_cluster_with_infinite_threshold(data, tmp_path):
    out = tmp_path / "c.jsonl"
    assert main(["cluster", "--config", str(data / "config.yaml"), "--theta-pair", "inf", "--out", str(out)]) == 0
    assert out.read_text() == ""


def test_missing_input_names_the_path(tmp_path, capsys):
    rc = main(["cluster", "--corpus", str(tmp_path / "nowhere.jsonl"), "--out", str(tmp_path / "c.jsonl")])
    assert rc == 2
    assert "nowhere.jsonl" in capsys.readouterr().err


def test_malformed_data_is_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"doc_id": "a", "date": "2020-01-01", "sentences": []}\n{"doc_id": 5}\n')
    assert main(["ingest", "--corpus", str(bad), "--out", str(tmp_path / "n.jsonl")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_config_errors_are_exit_one_and_all_listed(data, capsys):
    rc = main(["cluster", "--config", str(data / "config.yaml"), "--theta-sim", "7", "--workers", "0", "--out", "x"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "theta_sim" in err and "workers" in err


def test_usage_errors_are_exit_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["nonsense"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["cluster"])
    assert e.value.code == 1


def test_missing_required_path_setting(tmp_path, capsys):
    assert main(["cluster", "--out", str(tmp_path / "c.jsonl")]) == 1
    assert "--corpus" in capsys.readouterr().err


def test_selftrain_writes_every_output(data, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["selftrain", "--config", str(data / "config.yaml"), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    for want in ("clusters.jsonl", "labeled.jsonl", "harvested.jsonl", "bootstrap.jsonl", "model_gold.tsv",
                 "model_selftrain.tsv", "eval_gold.json", "eval_selftrain.txt", "comparison.json",
                 "comparison.png", "funnel.png", "runlog.jsonl"):
        assert want in names
    stages = [json.loads(line)["stage"] for line in (out / "runlog.jsonl").read_text().splitlines()]
    assert stages[:7] == ["ingest", "train_gold", "cluster", "label", "assign", "emit", "train_selftrain"]
    assert "F1 gain" in capsys.readouterr().out


def test_synth_then_config_runs(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "d"), "--seed", "2"]) == 0
    assert (tmp_path / "d" / "config.yaml").exists()
    assert main(["ingest", "--config", str(tmp_path / "d" / "config.yaml"), "--out", str(tmp_path / "n.jsonl")]) == 0


def test_module_entry_point(capsys):
    proc = subprocess.run([sys.executable, "-m", "eventboot", "config"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "theta_event: 2" in proc.stdout
