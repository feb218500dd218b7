import json
from pathlib import Path

import pytest

from folkmotif.cli import main
from folkmotif.melody import read_jsonl, write_jsonl
from folkmotif.tokens import read_token_file

KERN_SONG = """**kern
*M4/4
4c
4d
4e
4f
=
4g
4a
4g
4f
*-
"""

KERN_SONG_LOW = """**kern
*M4/4
4C
4D
4E
4F
=
4G
4A
4G
4F
*-
"""


@pytest.fixture
def kern_dirs(tmp_path):
    german = tmp_path / "german"
    chinese = tmp_path / "chinese"
    german.mkdir()
    chinese.mkdir()
    for i in range(3):
        (german / f"g{i}.krn").write_text(KERN_SONG)
        (chinese / f"c{i}.krn").write_text(KERN_SONG_LOW)
    (german / "broken.krn").write_text("**kern\n4c\n")  # note before any meter
    return german, chinese


def test_no_command_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "subcommand" in capsys.readouterr().out or True


def test_malformed_source_pair_is_usage_error(tmp_path, capsys):
    assert main(["ingest", "just-a-path", "--out", str(tmp_path / "c.jsonl")]) == 1
    assert "LABEL=PATH" in capsys.readouterr().err


def test_missing_file_is_data_error(tmp_path):
    assert main(["ingest", f"x={tmp_path}/nope.krn", "--out", str(tmp_path / "c.jsonl")]) == 2


def test_ingest_reports_counts_and_skips(kern_dirs, tmp_path, capsys):
    german, chinese = kern_dirs
    out = tmp_path / "corpus.jsonl"
    assert main(["ingest", f"german={german}", f"chinese={chinese}", "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert "wrote 6 melodies" in captured.out
    assert "1 file(s) skipped" in captured.out
    assert "broken.krn" in captured.err
    melodies = read_jsonl(out.read_bytes())
    assert sorted({m.label for m in melodies}) == ["chinese", "german"]


def test_tokenize_writes_token_file(kern_dirs, tmp_path):
    german, chinese = kern_dirs
    corpus = tmp_path / "corpus.jsonl"
    tokens = tmp_path / "tokens.tsv"
    main(["ingest", f"german={german}", f"chinese={chinese}", "--out", str(corpus)])
    assert main(["tokenize", "--corpus", str(corpus), "--mode", "rhythmic",
                 "--mw-size", "1", "--out", str(tokens)]) == 0
    songs = read_token_file(tokens.read_text())
    assert len(songs) == 6
    assert all(t.count("-") == 2 for s in songs for t in s.tokens)


def synth_pipeline(tmp_path, *, songs_per_class=8):
    corpus = tmp_path / "synthetic.jsonl"
    tokens = tmp_path / "tokens.tsv"
    emb = tmp_path / "embeddings.txt"
    vocab = tmp_path / "vocab.tsv"
    assert main(["synth-corpus", "--songs-per-class", str(songs_per_class),
                 "--min-length", "10", "--max-length", "14", "--seed", "1",
                 "--out", str(corpus)]) == 0
    assert main(["tokenize", "--corpus", str(corpus), "--mw-size", "2",
                 "--out", str(tokens)]) == 0
    assert main(["train-embeddings", "--tokens", str(tokens), "--dim", "8",
                 "--window", "2", "--negatives", "2", "--epochs", "2",
                 "--out-embeddings", str(emb), "--out-vocab", str(vocab)]) == 0
    return corpus, tokens, emb, vocab


def test_train_embeddings_reports_objective(tmp_path, capsys):
    synth_pipeline(tmp_path)
    out = capsys.readouterr().out
    assert "epoch 1/2: objective" in out
    assert "x 8 embeddings" in out


def test_similar_lists_neighbors(tmp_path, capsys):
    _, _, emb, vocab = synth_pipeline(tmp_path)
    token = vocab.read_text().splitlines()[0].split("\t")[0]
    capsys.readouterr()
    assert main(["similar", token, "--embeddings", str(emb), "--k", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert all(len(line.split("\t")) == 2 for line in lines)


def test_similar_unknown_token_is_data_error(tmp_path, capsys):
    _, _, emb, _ = synth_pipeline(tmp_path)
    assert main(["similar", "no-such-motif", "--embeddings", str(emb)]) == 2
    assert "error" in capsys.readouterr().err


def test_train_classifier_writes_model_metrics_alphas(tmp_path, capsys):
    _, tokens, emb, vocab = synth_pipeline(tmp_path)
    model = tmp_path / "model.txt"
    metrics = tmp_path / "metrics.json"
    alphas = tmp_path / "alphas"
    assert main(["train-classifier", "--tokens", str(tokens), "--embeddings", str(emb),
                 "--vocab", str(vocab), "--hidden", "5", "--attention-dim", "3",
                 "--epochs", "2", "--max-len", "30", "--out", str(model),
                 "--out-json", str(metrics), "--alpha-dir", str(alphas)]) == 0
    out = capsys.readouterr().out
    assert "accuracy" in out
    assert model.is_file()
    assert 0.0 <= json.loads(metrics.read_text())["accuracy"] <= 1.0
    csvs = list(alphas.glob("*.csv"))
    assert len(csvs) == 4  # 25% of 16 songs
    assert csvs[0].read_text().splitlines()[0] == "motif,weight"


def test_classifier_divergence_exit_code(tmp_path, capsys):
    _, tokens, emb, vocab = synth_pipeline(tmp_path)
    assert main(["train-classifier", "--tokens", str(tokens), "--embeddings", str(emb),
                 "--vocab", str(vocab), "--hidden", "5", "--attention-dim", "3",
                 "--epochs", "3", "--lr", "1e9", "--out", str(tmp_path / "m.txt")]) == 3
    assert "diverged" in capsys.readouterr().err


def test_baseline_average(tmp_path, capsys):
    _, tokens, emb, vocab = synth_pipeline(tmp_path)
    svm = tmp_path / "svm.txt"
    assert main(["baseline", "average", "--tokens", str(tokens), "--embeddings", str(emb),
                 "--vocab", str(vocab), "--out-svm", str(svm)]) == 0
    assert "accuracy" in capsys.readouterr().out
    assert svm.read_text().startswith("svm ")


def test_baseline_average_requires_embeddings(tmp_path, capsys):
    _, tokens, _, _ = synth_pipeline(tmp_path)
    assert main(["baseline", "average", "--tokens", str(tokens)]) == 1
    assert "--embeddings" in capsys.readouterr().err


def test_baseline_doc2vec(tmp_path, capsys):
    _, tokens, _, vocab = synth_pipeline(tmp_path)
    assert main(["baseline", "doc2vec", "--tokens", str(tokens), "--vocab", str(vocab),
                 "--dim", "8", "--epochs", "2"]) == 0
    assert "accuracy" in capsys.readouterr().out


def test_evaluate_from_csv(tmp_path, capsys):
    preds = tmp_path / "preds.csv"
    preds.write_text("id,gold,predicted\ns1,a,a\ns2,a,b\ns3,b,b\n")
    out_json = tmp_path / "m.json"
    assert main(["evaluate", "--predictions", str(preds), "--out-json", str(out_json)]) == 0
    assert "0.6667" in capsys.readouterr().out
    assert json.loads(out_json.read_text())["accuracy"] == pytest.approx(2 / 3)


def test_evaluate_rejects_headerless_csv(tmp_path, capsys):
    preds = tmp_path / "preds.csv"
    preds.write_text("s1,a,a\n")
    assert main(["evaluate", "--predictions", str(preds)]) == 2


def write_single_label_corpora(tmp_path):
    source = tmp_path / "all.jsonl"
    main(["synth-corpus", "--songs-per-class", "8", "--min-length", "10",
          "--max-length", "14", "--seed", "2", "--out", str(source)])
    melodies = read_jsonl(source.read_bytes())
    paths = {}
    for label in ("alpha", "beta"):
        path = tmp_path / f"{label}.jsonl"
        path.write_bytes(write_jsonl([m for m in melodies if m.label == label]))
        paths[label] = path
    return paths


FAST_EXPERIMENT = {
    "embedding": {"dim": 8, "window": 2, "negatives": 2, "epochs": 2},
    "classifier": {"hidden": 5, "attention_dim": 3, "epochs": 2, "max_len": 30},
    "svm": {"epochs": 50},
}


def test_experiment_one_end_to_end(tmp_path, capsys):
    paths = write_single_label_corpora(tmp_path)
    config = tmp_path / "config.json"
    config.write_text(json.dumps(FAST_EXPERIMENT))
    out_dir = tmp_path / "out"
    assert main(["experiment", "1", f"german={paths['alpha']}", f"chinese={paths['beta']}",
                 "--config", str(config), "--out-dir", str(out_dir)]) == 0
    out = capsys.readouterr().out
    assert "experiment 1" in out
    assert (out_dir / "metrics.json").is_file()
    assert (out_dir / "model.txt").is_file()
    labels = json.loads((out_dir / "metrics.json").read_text())["labels"]
    assert labels == ["chinese", "german"]


def test_experiment_source_count_enforced(tmp_path, capsys):
    paths = write_single_label_corpora(tmp_path)
    args = ["experiment", "2", f"a={paths['alpha']}", f"b={paths['beta']}"]
    assert main(args) == 1
    assert "exactly 3" in capsys.readouterr().err


def test_experiment_bad_config_is_data_error(tmp_path, capsys):
    paths = write_single_label_corpora(tmp_path)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"modle": "attention"}))
    assert main(["experiment", "1", f"a={paths['alpha']}", f"b={paths['beta']}",
                 "--config", str(config)]) == 2
    assert "unknown experiment config fields" in capsys.readouterr().err


def test_synth_corpus_custom_inventories(tmp_path):
    out = tmp_path / "c.jsonl"
    assert main(["synth-corpus", "--inventory", "x=1", "--inventory", "y=4,6",
                 "--noise", "2", "--songs-per-class", "3", "--min-length", "10",
                 "--max-length", "12", "--out", str(out)]) == 0
    melodies = read_jsonl(out.read_bytes())
    assert sorted({m.label for m in melodies}) == ["x", "y"]
    assert len(melodies) == 6


def test_synth_corpus_overlapping_inventories_rejected(tmp_path, capsys):
    assert main(["synth-corpus", "--inventory", "x=1", "--inventory", "y=1",
                 "--out", str(tmp_path / "c.jsonl")]) == 2
