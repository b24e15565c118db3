"""Acceptance: the prepared pair round-trips into the translator's loader."""
import os

from conftest import FIXTURES, record
from corpus_prep.conllu import validate_conllu
from corpus_prep.prepare import PrepJob, prepare, read_lines

from cvnmt.data import load_conllu_parallel


def test_corpus_round_trip(tmp_path):
    job = PrepJob(src_lang="en", tgt_lang="fr",
                  src_in=os.path.join(FIXTURES, "ten.src.txt"),
                  tgt_in=os.path.join(FIXTURES, "ten.tgt.txt"),
                  src_out=str(tmp_path / "ten.src.conllu"),
                  tgt_out=str(tmp_path / "ten.tgt.conllu"),
                  model_src="rule:en", model_tgt="rule:fr")
    in_counts = (len(read_lines(job.src_in)), len(read_lines(job.tgt_in)))
    summary = prepare(job)

    src_violations = validate_conllu(job.src_out)
    tgt_violations = validate_conllu(job.tgt_out)
    pairs = load_conllu_parallel(job.src_out, job.tgt_out)
    parity = all(len(p.source.tokens) == len(p.source.deps)
                 and len(p.target.tokens) == len(p.target.deps)
                 for p in pairs)

    counts_ok = (summary.src_sentences == in_counts[0] == 10
                 and summary.tgt_sentences == in_counts[1] == 10
                 and len(pairs) == 10)

    first = (open(job.src_out, "rb").read(), open(job.tgt_out, "rb").read())
    prepare(job)
    second = (open(job.src_out, "rb").read(), open(job.tgt_out, "rb").read())

    record("corpus-round-trip",
           not src_violations and not tgt_violations and counts_ok
           and parity and first == second,
           f"violations src={len(src_violations)} tgt={len(tgt_violations)}, "
           f"counts {summary.src_sentences}/{summary.tgt_sentences} vs "
           f"inputs {in_counts}, pairs {len(pairs)}, "
           f"identical_rerun={first == second}")
