"""The prepare pipeline: alignment, degradation, atomicity, idempotence."""
import glob
import logging
import os
import string
import tempfile

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES
from corpus_prep.conllu import validate_conllu
from corpus_prep.errors import DataError, SetupError
from corpus_prep.prepare import (PrepJob, prepare, read_lines, unk_fallback)

from cvnmt.data import load_conllu_parallel


def job_for(tmp_path, src_lines, tgt_lines, model="rule:en"):
    src_in = str(tmp_path / "in.src.txt")
    tgt_in = str(tmp_path / "in.tgt.txt")
    for path, lines in ((src_in, src_lines), (tgt_in, tgt_lines)):
        with open(path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
    return PrepJob(src_lang="en", tgt_lang="fr", src_in=src_in, tgt_in=tgt_in,
                   src_out=str(tmp_path / "out.src.conllu"),
                   tgt_out=str(tmp_path / "out.tgt.conllu"),
                   model_src=model, model_tgt=model)


def fixture_job(tmp_path, stem):
    return PrepJob(src_lang="en", tgt_lang="fr",
                   src_in=os.path.join(FIXTURES, f"{stem}.src.txt"),
                   tgt_in=os.path.join(FIXTURES, f"{stem}.tgt.txt"),
                   src_out=str(tmp_path / "out.src.conllu"),
                   tgt_out=str(tmp_path / "out.tgt.conllu"),
                   model_src="rule:en", model_tgt="rule:fr")


def token_rows(path):
    rows = []
    for line in open(path, encoding="utf-8").read().splitlines():
        if line and not line.startswith("#"):
            rows.append(line.split("\t"))
    return rows


def test_two_line_fixture_has_two_blocks_with_full_deprel(tmp_path):
    job = fixture_job(tmp_path, "two")
    summary = prepare(job)
    assert summary.src_sentences == 2
    assert summary.tgt_sentences == 2
    assert summary.src_unparseable == 0
    text = open(job.src_out, encoding="utf-8").read()
    assert text.count("# sent_id") == 2
    for row in token_rows(job.src_out):
        assert len(row) == 10
        assert row[7] not in ("", "_")


def test_read_lines_ignores_trailing_newline(tmp_path):
    path = str(tmp_path / "x.txt")
    open(path, "w", encoding="utf-8").write("a\nb\n")
    assert read_lines(path) == ["a", "b"]
    open(path, "w", encoding="utf-8").write("a\nb")
    assert read_lines(path) == ["a", "b"]
    open(path, "w", encoding="utf-8").write("")
    assert read_lines(path) == []


def test_empty_inputs_make_empty_valid_outputs(tmp_path):
    job = job_for(tmp_path, [], [])
    summary = prepare(job)
    assert summary.src_sentences == 0
    assert summary.tgt_sentences == 0
    assert os.path.getsize(job.src_out) == 0
    assert validate_conllu(job.src_out) == []
    assert load_conllu_parallel(job.src_out, job.tgt_out) == []


def test_mismatched_line_counts_write_nothing(tmp_path):
    job = job_for(tmp_path, ["a b", "c d", "e f"], ["x y", "z w"])
    with pytest.raises(DataError, match="line counts differ"):
        prepare(job)
    assert not os.path.exists(job.src_out)
    assert not os.path.exists(job.tgt_out)
    assert glob.glob(str(tmp_path / ".prep-*")) == []


def test_backends_resolve_before_inputs_are_touched(tmp_path):
    job = PrepJob(src_lang="en", tgt_lang="fr",
                  src_in=str(tmp_path / "absent.src"),
                  tgt_in=str(tmp_path / "absent.tgt"),
                  src_out=str(tmp_path / "o.src"), tgt_out=str(tmp_path / "o.tgt"),
                  model_src="bogus:x", model_tgt="rule:fr")
    with pytest.raises(SetupError):
        prepare(job)


def test_missing_input_file_raises(tmp_path):
    job = job_for(tmp_path, ["a b"], ["c d"])
    os.unlink(job.tgt_in)
    with pytest.raises(FileNotFoundError):
        prepare(job)


def test_unparseable_line_degrades_to_unk_labels(tmp_path, caplog):
    job = job_for(tmp_path, ["The cat sat .", "?? !!"], ["ok ok", "ok ok"])
    with caplog.at_level(logging.WARNING, logger="corpus_prep"):
        summary = prepare(job)
    assert summary.src_sentences == 2
    assert summary.src_unparseable == 1
    assert summary.tgt_unparseable == 0
    rows = [r for r in token_rows(job.src_out)]
    degraded = [r for r in rows if r[7] == "unk"]
    assert [r[1] for r in degraded] == ["??", "!!"]
    assert any("line 2" in rec.getMessage() for rec in caplog.records)


def test_empty_line_keeps_its_alignment_slot(tmp_path):
    job = job_for(tmp_path, ["a cat", "", "a dog"], ["un chat", "vide", "un chien"])
    summary = prepare(job)
    assert summary.src_sentences == 3
    assert summary.src_unparseable == 1
    pairs = load_conllu_parallel(job.src_out, job.tgt_out)
    assert len(pairs) == 3
    assert pairs[1].source.tokens == ["_"]
    assert pairs[1].source.deps == ["unk"]


def test_unk_fallback_shapes():
    tokens = unk_fallback("a b  c")
    assert [t.form for t in tokens] == ["a", "b", "c"]
    assert all(t.deprel == "unk" for t in tokens)
    assert [t.head for t in tokens] == [0, 1, 1]
    assert [t.form for t in unk_fallback("")] == ["_"]


def test_ten_line_fixture_preserves_alignment(tmp_path):
    job = fixture_job(tmp_path, "ten")
    summary = prepare(job)
    assert summary.src_sentences == len(read_lines(job.src_in)) == 10
    assert summary.tgt_sentences == 10
    assert summary.src_unparseable == 1  # the "?? !!" line
    pairs = load_conllu_parallel(job.src_out, job.tgt_out)
    assert len(pairs) == 10
    for pair in pairs:
        assert len(pair.source.tokens) == len(pair.source.deps)
        assert len(pair.target.tokens) == len(pair.target.deps)


def test_rerun_is_byte_identical(tmp_path):
    job = fixture_job(tmp_path, "ten")
    prepare(job)
    first = (open(job.src_out, "rb").read(), open(job.tgt_out, "rb").read())
    prepare(job)
    second = (open(job.src_out, "rb").read(), open(job.tgt_out, "rb").read())
    assert first == second


_line = st.text(alphabet=string.ascii_letters + string.digits + " .,!?'-",
                max_size=30)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6).flatmap(
    lambda n: st.tuples(st.lists(_line, min_size=n, max_size=n),
                        st.lists(_line, min_size=n, max_size=n))))
def test_random_corpora_round_trip(pair):
    src_lines, tgt_lines = pair
    with tempfile.TemporaryDirectory() as tmp:
        import pathlib
        job = job_for(pathlib.Path(tmp), src_lines, tgt_lines)
        summary = prepare(job)
        assert summary.src_sentences == len(src_lines)
        assert summary.tgt_sentences == len(tgt_lines)
        assert validate_conllu(job.src_out) == []
        assert validate_conllu(job.tgt_out) == []
        pairs = load_conllu_parallel(job.src_out, job.tgt_out)
        assert len(pairs) == len(src_lines)
        first = open(job.src_out, "rb").read()
        prepare(job)
        assert open(job.src_out, "rb").read() == first
