"""Backend behavior: tokenization, heuristic trees, failure modes."""
import importlib.util

import pytest

from corpus_prep.backends import (ParseFailure, RuleBackend, resolve_backend)
from corpus_prep.errors import SetupError

HAS_SPACY = importlib.util.find_spec("spacy") is not None


def parse(line):
    return RuleBackend("en").parse(line)


def test_tokenization_splits_words_and_punctuation():
    forms = [t.form for t in parse("The cat sat, briefly.")]
    assert forms == ["The", "cat", "sat", ",", "briefly", "."]


def test_root_is_first_content_word():
    tokens = parse("The cat sat on the mat .")
    roots = [t for t in tokens if t.deprel == "root"]
    assert len(roots) == 1
    assert roots[0].form == "cat"
    assert roots[0].head == 0


def test_everything_else_attaches_to_the_root():
    tokens = parse("The cat sat on the mat .")
    root_id = next(i for i, t in enumerate(tokens, 1) if t.deprel == "root")
    for i, tok in enumerate(tokens, 1):
        if i != root_id:
            assert tok.head == root_id


def test_label_inventory_is_not_degenerate():
    tokens = parse("A dog barked at 42 birds, loudly !")
    labels = {t.deprel for t in tokens}
    assert {"root", "det", "case", "nummod", "punct", "obj", "nmod"} <= labels


def test_content_words_alternate_argument_labels():
    tokens = parse("cats chase mice dogs foxes")
    assert [t.deprel for t in tokens] == ["root", "obj", "nmod", "obj", "nmod"]


def test_numbers_and_upos_tags():
    tokens = parse("The 42 cats .")
    assert [t.upos for t in tokens] == ["DET", "NUM", "NOUN", "PUNCT"]
    assert tokens[1].deprel == "nummod"


def test_function_words_only_still_roots_something():
    tokens = parse("the of")
    assert tokens[0].deprel == "root"
    assert tokens[0].head == 0


def test_deterministic():
    line = "A dog barked at the mail carrier !"
    assert parse(line) == parse(line)


@pytest.mark.parametrize("line", ["", "   ", "?? !!", "... --- !!!"])
def test_no_word_characters_is_a_parse_failure(line):
    with pytest.raises(ParseFailure):
        parse(line)


def test_resolve_rule_backend():
    backend = resolve_backend("rule:de")
    assert backend.lang == "de"


@pytest.mark.parametrize("model_id", ["stanford:en", "rule", "en", "rule:", ":en"])
def test_bad_model_identifiers_are_setup_errors(model_id):
    with pytest.raises(SetupError):
        resolve_backend(model_id)


@pytest.mark.skipif(HAS_SPACY, reason="spacy installed; missing-package path unreachable")
def test_spacy_without_package_is_a_setup_error():
    with pytest.raises(SetupError, match="spacy"):
        resolve_backend("spacy:en_core_web_sm")


@pytest.mark.skipif(not HAS_SPACY, reason="spacy not installed")
def test_spacy_backend_parses_when_available():
    try:
        backend = resolve_backend("spacy:en_core_web_sm")
    except SetupError:
        pytest.skip("spacy model en_core_web_sm not installed")
    tokens = backend.parse("The cat sat on the mat.")
    assert tokens
    assert all(t.deprel for t in tokens)
    assert sum(1 for t in tokens if t.head == 0) >= 1
