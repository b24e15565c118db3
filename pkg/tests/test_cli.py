import json
import os

import numpy as np
import pytest

from cvnmt.cli import (EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main,
                       read_config_file, run_gradcheck)
from cvnmt.model import read_attention_tsv

FIX = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture(name):
    return os.path.join(FIX, name)


def first_sentence_file(tmp_path, name="one.src.conllu"):
    text = open(fixture("tiny3.src.conllu"), encoding="utf-8").read()
    block = text.split("\n\n")[0] + "\n\n"
    path = tmp_path / name
    path.write_text(block, encoding="utf-8")
    return str(path)


TRAIN_ARGS = [
    "--train-src", fixture("tiny3.src.conllu"), "--train-tgt", fixture("tiny3.tgt.conllu"),
    "--dev-src", fixture("tiny3.src.conllu"), "--dev-tgt", fixture("tiny3.tgt.conllu"),
    "--hidden", "6", "--embed", "4", "--batch", "2", "--lr", "0.05",
    "--epochs", "2", "--patience", "1", "--seed", "3",
]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli-train")
    ckpt = str(base / "model.ckpt")
    code = main(["train", *TRAIN_ARGS, "--checkpoint", ckpt])
    assert code == EXIT_OK
    return ckpt


# ---------------------------------------------------------------------------
# argument and config handling
# ---------------------------------------------------------------------------

def test_no_command_is_usage_error(capsys):
    assert main([]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["gradcheck", "--frobnicate", "1"]) == EXIT_USAGE


def test_missing_required_option_is_usage_error(capsys):
    assert main(["train", "--train-src", "x"]) == EXIT_USAGE
    assert "missing required" in capsys.readouterr().err


def test_missing_data_file_is_data_error(capsys):
    code = main(["translate", "--checkpoint", "/nonexistent/model.ckpt",
                 "--test-src", fixture("tiny3.src.conllu")])
    assert code == EXIT_DATA


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "train.cfg"
    cfg.write_text("# comment\nalpha = 0.9\nhidden = 8\ntrain-src = missing.conllu\n")
    code = main(["train", "--config", str(cfg), "--alpha", "0.25",
                 "--train-tgt", "m", "--dev-src", "m", "--dev-tgt", "m",
                 "--checkpoint", str(tmp_path / "c")])
    # flag beats file, file beats default; run then dies on the fake corpus
    assert code == EXIT_DATA
    err = capsys.readouterr().err
    assert "config train: alpha = 0.25" in err
    assert "config train: hidden = 8" in err
    assert "config train: epochs = 300" in err


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_option = 1\n")
    assert main(["gradcheck", "--config", str(cfg)]) == EXIT_USAGE
    assert "unknown config key" in capsys.readouterr().err


def test_malformed_config_line_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("just some words\n")
    assert main(["gradcheck", "--config", str(cfg)]) == EXIT_USAGE


def test_read_config_file_normalizes_dashes(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("train-src = a.conllu\n\n# note\nlr = 0.5\n")
    assert read_config_file(str(cfg)) == {"train_src": "a.conllu", "lr": "0.5"}


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def test_train_writes_checkpoint_history_and_sidecars(trained, capsys):
    assert os.path.exists(trained)
    for suffix in (".src.words", ".src.deps", ".tgt.words", ".tgt.deps"):
        assert os.path.exists(trained + suffix)
    history_path = trained + ".history.jsonl"
    assert os.path.exists(history_path)
    records = [json.loads(line) for line in open(history_path)]
    assert len(records) >= 1
    for rec in records:
        assert set(rec) == {"epoch", "train_loss", "dev_bleu", "elapsed_seconds"}


def test_train_is_deterministic_modulo_wall_clock(tmp_path, capsys):
    paths = []
    for name in ("a", "b"):
        # same basename so the sidecar names in the header match byte for byte
        (tmp_path / name).mkdir()
        ckpt = str(tmp_path / name / "model.ckpt")
        assert main(["train", *TRAIN_ARGS, "--checkpoint", ckpt]) == EXIT_OK
        paths.append(ckpt)
    blobs = [open(p, "rb").read() for p in paths]
    assert blobs[0] == blobs[1]  # checkpoint bytes carry no timestamps
    histories = []
    for p in paths:
        recs = [json.loads(line) for line in open(p + ".history.jsonl")]
        for rec in recs:
            rec.pop("elapsed_seconds")
        histories.append(recs)
    assert histories[0] == histories[1]


def test_train_rejects_mismatched_corpora(tmp_path, capsys):
    code = main(["train", "--train-src", fixture("tiny3.src.conllu"),
                 "--train-tgt", fixture("ambig4.tgt.conllu"),
                 "--dev-src", fixture("tiny3.src.conllu"),
                 "--dev-tgt", fixture("tiny3.tgt.conllu"),
                 "--hidden", "4", "--embed", "4",
                 "--checkpoint", str(tmp_path / "c.ckpt")])
    assert code == EXIT_DATA


# ---------------------------------------------------------------------------
# translate
# ---------------------------------------------------------------------------

def test_translate_to_stdout_and_file_agree(trained, tmp_path, capsys):
    code = main(["translate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu")])
    assert code == EXIT_OK
    stdout_lines = capsys.readouterr().out.splitlines()
    out = tmp_path / "hyp.txt"
    dep_out = tmp_path / "hyp.deps.txt"
    code = main(["translate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"),
                 "--out", str(out), "--dep-output", str(dep_out)])
    assert code == EXIT_OK
    file_lines = out.read_text().splitlines()
    assert file_lines == stdout_lines
    assert len(file_lines) == 3
    dep_lines = dep_out.read_text().splitlines()
    assert len(dep_lines) == 3
    for words, deps in zip(file_lines, dep_lines):
        assert len(words.split()) == len(deps.split())


def test_translate_beam_one_matches_default(trained, tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    assert main(["translate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"), "--out", str(a)]) == EXIT_OK
    assert main(["translate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"), "--beam", "1",
                 "--out", str(b)]) == EXIT_OK
    assert a.read_text() == b.read_text()


def test_translate_wider_beam_runs(trained, tmp_path):
    out = tmp_path / "beam3.txt"
    assert main(["translate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"), "--beam", "3",
                 "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 3


def test_translate_empty_input_gives_empty_output(trained, tmp_path):
    src = tmp_path / "empty.conllu"
    src.write_text("")
    out = tmp_path / "empty.txt"
    assert main(["translate", "--checkpoint", trained,
                 "--test-src", str(src), "--out", str(out)]) == EXIT_OK
    assert out.read_text() == ""


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def test_evaluate_emits_machine_readable_report(trained, capsys):
    code = main(["evaluate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"),
                 "--test-tgt", fixture("tiny3.tgt.conllu")])
    assert code == EXIT_OK
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert set(payload) == {"bleu", "precisions", "bp", "dep_accuracy"}
    assert 0.0 <= payload["bleu"] <= 1.0
    assert len(payload["precisions"]) == 4
    assert "dependency label accuracy" in captured.err


def test_evaluate_with_buckets(trained, capsys):
    code = main(["evaluate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"),
                 "--test-tgt", fixture("tiny3.tgt.conllu"),
                 "--buckets", "10,20"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["buckets"]) == 3
    assert [b["edge"] for b in payload["buckets"]] == [10, 20, None]
    assert sum(b["count"] for b in payload["buckets"]) == 3


@pytest.mark.parametrize("raw", ["20,10", "0,5", "a,b", ""])
def test_evaluate_rejects_bad_buckets(trained, raw, capsys):
    code = main(["evaluate", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"),
                 "--test-tgt", fixture("tiny3.tgt.conllu"),
                 "--buckets", raw])
    if raw == "":
        assert code == EXIT_OK  # empty string falls back to no buckets
    else:
        assert code == EXIT_USAGE


def test_evaluate_empty_corpus_is_data_error(trained, tmp_path, capsys):
    src = tmp_path / "empty.src.conllu"
    tgt = tmp_path / "empty.tgt.conllu"
    src.write_text("")
    tgt.write_text("")
    code = main(["evaluate", "--checkpoint", trained,
                 "--test-src", str(src), "--test-tgt", str(tgt)])
    assert code == EXIT_DATA


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------

def test_gradcheck_passes_and_is_deterministic(capsys):
    assert main(["gradcheck", "--seed", "1"]) == EXIT_OK
    first = capsys.readouterr().out
    lines = first.strip().splitlines()
    assert len(lines) >= 16
    assert all(line.startswith("gradcheck ") and line.endswith("PASS") for line in lines)
    assert main(["gradcheck", "--seed", "1"]) == EXIT_OK
    assert capsys.readouterr().out == first


def test_gradcheck_unattainable_tolerance_fails(capsys):
    assert main(["gradcheck", "--seed", "1", "--tolerance", "1e-13"]) == EXIT_VERIFY
    captured = capsys.readouterr()
    assert "FAIL" in captured.out
    assert "FAILED" in captured.err


def test_run_gradcheck_api_reports_every_op():
    lines, ok = run_gradcheck(0)
    assert ok
    names = {line.split(":")[0].removeprefix("gradcheck ").strip() for line in lines}
    for expected in ("cmatmul.matvec", "cmatmul.rows", "ctanh", "crelu", "csoftmax",
                     "modulus", "cdot", "readout", "rnn.step", "syntax_embed"):
        assert expected in names, expected


# ---------------------------------------------------------------------------
# dump-attention
# ---------------------------------------------------------------------------

def test_dump_attention_writes_normalized_planes(trained, tmp_path, capsys):
    src = first_sentence_file(tmp_path)
    prefix = str(tmp_path / "attn")
    code = main(["dump-attention", "--checkpoint", trained,
                 "--test-src", src, "--out", prefix])
    assert code == EXIT_OK
    printed = capsys.readouterr().out.strip().splitlines()
    assert printed == [prefix + ".re.tsv", prefix + ".im.tsv"]
    src_toks, tgt_toks, re_mat = read_attention_tsv(prefix + ".re.tsv")
    _, _, im_mat = read_attention_tsv(prefix + ".im.tsv")
    assert re_mat.shape == im_mat.shape
    assert re_mat.shape[1] == len(src_toks)
    assert len(tgt_toks) == re_mat.shape[0] >= 1
    np.testing.assert_allclose(re_mat.sum(axis=1), 1.0, atol=1e-5)
    np.testing.assert_allclose(im_mat.sum(axis=1), 1.0, atol=1e-5)


def test_dump_attention_requires_exactly_one_sentence(trained, tmp_path, capsys):
    code = main(["dump-attention", "--checkpoint", trained,
                 "--test-src", fixture("tiny3.src.conllu"),
                 "--out", str(tmp_path / "x")])
    assert code == EXIT_DATA
    assert "exactly 1" in capsys.readouterr().err


def test_dump_attention_real_baseline(trained, tmp_path, capsys):
    src = first_sentence_file(tmp_path)
    prefix = str(tmp_path / "attn")
    code = main(["dump-attention", "--checkpoint", trained,
                 "--test-src", src, "--out", prefix, "--real-baseline"])
    assert code == EXIT_OK
    printed = capsys.readouterr().out.strip().splitlines()
    assert printed[-1] == prefix + ".baseline.tsv"
    _, _, base = read_attention_tsv(prefix + ".baseline.tsv")
    assert base.shape[1] == 3
    np.testing.assert_allclose(base.sum(axis=1), 1.0, atol=1e-5)


def test_dump_attention_baseline_equals_re_plane_for_degenerate_model(tmp_path, capsys):
    # checkpoint whose stored model is already the zero-imaginary twin: the
    # baseline decode is then the same computation, so the matrices coincide
    from cvnmt.data import build_vocabs, load_conllu_parallel
    from cvnmt.training import TrainConfig, build_model, save_checkpoint

    examples = load_conllu_parallel(fixture("tiny3.src.conllu"), fixture("tiny3.tgt.conllu"))
    vocabs = build_vocabs(examples)
    config = TrainConfig(hidden_dim=6, embed_dim=4, seed=8)
    model = build_model(vocabs, config).zero_imaginary_copy()
    ckpt = str(tmp_path / "real.ckpt")
    save_checkpoint(model, config, ckpt)
    src = first_sentence_file(tmp_path)
    prefix = str(tmp_path / "attn")
    code = main(["dump-attention", "--checkpoint", ckpt,
                 "--test-src", src, "--out", prefix, "--real-baseline"])
    assert code == EXIT_OK
    _, _, re_mat = read_attention_tsv(prefix + ".re.tsv")
    _, _, im_mat = read_attention_tsv(prefix + ".im.tsv")
    _, _, base = read_attention_tsv(prefix + ".baseline.tsv")
    np.testing.assert_allclose(base, re_mat, atol=1e-8)
    assert not im_mat.any()  # real mode drops the imaginary weight plane
