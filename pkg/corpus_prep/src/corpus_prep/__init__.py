"""Corpus preparation: line-aligned plain text -> aligned CoNLL-U pairs."""

from .backends import ParsedToken, ParseFailure, resolve_backend
from .conllu import Violation, validate_conllu, write_corpus
from .errors import DataError, PrepError, SetupError
from .prepare import PrepJob, PrepSummary, prepare

__all__ = [
    "DataError", "ParseFailure", "ParsedToken", "PrepError", "PrepJob",
    "PrepSummary", "SetupError", "Violation", "prepare", "resolve_backend",
    "validate_conllu", "write_corpus",
]
