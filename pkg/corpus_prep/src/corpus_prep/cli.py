"""Command-line front end: ``prepare`` and ``validate``.

Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 environment
or verification problem (missing parser model; violations found).
"""
from __future__ import annotations

import argparse
import logging
import sys

from .conllu import validate_conllu
from .errors import DataError, SetupError
from .prepare import PrepJob, prepare

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SETUP = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpus-prep",
        description="Convert line-aligned plain-text corpora into the "
                    "CoNLL-U pairs the translator consumes.")
    sub = parser.add_subparsers(dest="command")

    prep = sub.add_parser("prepare", help="parse a corpus pair to CoNLL-U")
    for flag, help_text in (
            ("--src-lang", "source language code"),
            ("--tgt-lang", "target language code"),
            ("--src-in", "source text, one sentence per line"),
            ("--tgt-in", "target text, one sentence per line"),
            ("--src-out", "source CoNLL-U output path"),
            ("--tgt-out", "target CoNLL-U output path"),
            ("--model-src", "source parser model, e.g. rule:en or "
                            "spacy:en_core_web_sm"),
            ("--model-tgt", "target parser model")):
        prep.add_argument(flag, required=True, help=help_text)

    val = sub.add_parser("validate", help="structurally check a CoNLL-U file")
    val.add_argument("--path", required=True, help="CoNLL-U file to check")
    return parser


def cmd_prepare(args) -> int:
    job = PrepJob(src_lang=args.src_lang, tgt_lang=args.tgt_lang,
                  src_in=args.src_in, tgt_in=args.tgt_in,
                  src_out=args.src_out, tgt_out=args.tgt_out,
                  model_src=args.model_src, model_tgt=args.model_tgt)
    summary = prepare(job)
    print(summary)
    return EXIT_OK


def cmd_validate(args) -> int:
    violations = validate_conllu(args.path)
    for violation in violations:
        print(violation)
    if violations:
        print(f"{len(violations)} violation(s) in {args.path}")
        return EXIT_SETUP
    print(f"no violations in {args.path}")
    return EXIT_OK


def main(argv) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "prepare":
            return cmd_prepare(args)
        return cmd_validate(args)
    except SetupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint():
    sys.exit(main(sys.argv[1:]))
