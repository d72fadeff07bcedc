"""Command-line interface.

Subcommands: build-kb, gen-toy, train, eval, answer, gradcheck, bench.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .backend import BACKEND_NAME
from .config import RunConfig, apply_setting, load_config_file
from .diagnostics import TOLERANCE, run_gradient_suites
from .errors import DataError, NumericsError
from .inference import answer_with_candidates, serialize_prediction
from .pipeline import evaluate, load_kb, load_models, train_all
from .toydata import generate_toy_corpus, write_toy_corpus
from .training import load_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_PATH_FLAGS = ["kb_triples", "kb_aliases", "kb_types", "dataset",
               "checkpoint_dir", "embedding_file"]
_CHOICE_FLAGS = {
    "entity_repr": ("random", "pretrained", "typevec"),
    "encoder": ("bigru", "avg"),
    "pruning": ("focused", "ngram"),
    "combine": ("softmax", "raw"),
}
_INT_FLAGS = ["seed", "workers", "epochs", "embedding_dim", "hidden_size",
              "num_layers", "relation_dim", "entity_dim", "batch_size",
              "m_r", "m_s", "transe_epochs"]
_FLOAT_FLAGS = ["dropout", "alpha", "gamma_r", "gamma_s", "momentum",
                "init_range", "lr_relation", "lr_labeler", "lr_subject",
                "lr_typevec_encoder", "lr_embed_avg", "transe_lr",
                "transe_margin"]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    for name in _PATH_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}")
    for name, choices in _CHOICE_FLAGS.items():
        parser.add_argument(f"--{name.replace('_', '-')}", choices=choices)
    for name in _INT_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=int)
    for name in _FLOAT_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=float)
    parser.add_argument("--hub-relations",
                        help="comma-separated relation names always kept "
                             "in negative samples when eligible")
    parser.add_argument("--freeze-entities", action="store_const", const=True)


def _build_config(args) -> RunConfig:
    config = RunConfig()
    if args.config:
        load_config_file(args.config, config)
    flag_names = (_PATH_FLAGS + list(_CHOICE_FLAGS) + _INT_FLAGS
                  + _FLOAT_FLAGS + ["hub_relations", "freeze_entities"])
    for name in flag_names:
        value = getattr(args, name, None)
        if value is not None:
            apply_setting(config, name, str(value))
    config.validate()
    return config


def build_parser() -> _Parser:
    parser = _Parser(prog="factqa",
                     description="Single-fact question answering over an "
                                 "in-memory knowledge base")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kb", parents=[], help="load KB files and "
                       "report statistics")
    _add_config_flags(p)
    p.set_defaults(func=cmd_build_kb)

    p = sub.add_parser("gen-toy", help="write the synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_gen_toy)

    p = sub.add_parser("train", help="train labeler, relation and subject "
                       "models; write checkpoints and loss curves")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="answer a dataset and report accuracy "
                       "and pruning recall")
    _add_config_flags(p)
    p.add_argument("--predictions-out", help="write per-question "
                   "predictions as TSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("answer", help="answer questions interactively")
    _add_config_flags(p)
    p.add_argument("--question", help="answer one question and exit")
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("gradcheck", help="finite-difference checks on all "
                       "backward passes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="compare numba and numpy kernel "
                       "backends")
    p.add_argument("--seq-len", type=int, default=12)
    p.add_argument("--sizes", default="64,128,256")
    p.add_argument("--repeats", type=int, default=200)
    p.set_defaults(func=cmd_bench)
    return parser


def cmd_build_kb(args) -> int:
    config = _build_config(args)
    kb = load_kb(config)
    for key, value in kb.stats().items():
        print(f"{key}={value}")
    return EXIT_OK


def cmd_gen_toy(args) -> int:
    corpus = generate_toy_corpus(args.seed, args.test_fraction)
    paths = write_toy_corpus(corpus, args.out)
    print(f"triples={len(corpus.triples)}")
    print(f"train_questions={len(corpus.train)}")
    print(f"test_questions={len(corpus.test)}")
    for key, path in paths.items():
        print(f"{key}={path}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _build_config(args)
    kb = load_kb(config)
    result = train_all(config, kb)
    print(f"backend={BACKEND_NAME}")
    print(f"label_match_rate={result['match_rate']:.4f}")
    for name, curve in result["curves"].items():
        print(f"final_loss_{name}={curve[-1]:.6f}")
    print(f"checkpoint_dir={config.checkpoint_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _build_config(args)
    config.require_paths("dataset", "checkpoint_dir")
    kb = load_kb(config)
    labeler, rel_model, subj_model, _ = load_models(config.checkpoint_dir, kb)
    samples = load_dataset(config.dataset, kb)
    metrics = evaluate(kb, rel_model, subj_model, labeler, samples,
                       pruning=config.pruning, combine=config.combine)
    for key in ("accuracy", "recall", "single_subject_acc",
                "multi_subject_acc"):
        print(f"{key}={metrics[key]:.4f}")
    for key in ("single_subject_count", "multi_subject_count"):
        print(f"{key}={metrics[key]}")
    print(f"mean_candidate_subjects={metrics['mean_candidate_subjects']:.4f}")
    if args.predictions_out:
        with open(args.predictions_out, "w", encoding="utf-8") as fh:
            for sample, pred in zip(samples, metrics["predictions"]):
                fh.write(serialize_prediction(sample.question, pred, kb)
                         + "\n")
    return EXIT_OK


def _print_prediction(kb, pred, candidates) -> None:
    if pred is None:
        print("no answer (empty candidate set)")
        return
    objects = ",".join(kb.entity_name(o) for o in pred.objects)
    print(f"subject={kb.entity_name(pred.subject)} "
          f"relation={kb.relation_name(pred.relation)} "
          f"objects={objects} "
          f"log_p_relation={pred.log_prob_relation:.6f} "
          f"log_p_subject={pred.log_prob_subject:.6f} "
          f"combined={pred.combined:.6f} "
          f"candidates={pred.candidate_count}")


def cmd_answer(args) -> int:
    config = _build_config(args)
    config.require_paths("checkpoint_dir")
    kb = load_kb(config)
    labeler, rel_model, subj_model, _ = load_models(config.checkpoint_dir, kb)

    def handle(question: str) -> None:
        pred, candidates = answer_with_candidates(
            kb, rel_model, subj_model, labeler, question,
            pruning=config.pruning, combine=config.combine)
        _print_prediction(kb, pred, candidates)

    if args.question:
        handle(args.question)
        return EXIT_OK
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        if line in ("exit", "quit"):
            break
        try:
            handle(line)
        except ValueError as exc:
            print(f"error: {exc}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = run_gradient_suites(args.seed, args.epsilon)
    failed = False
    for name, err in results.items():
        status = "PASS" if err < TOLERANCE else "FAIL"
        failed = failed or status == "FAIL"
        print(f"{name}: max_rel_err={err:.3e} {status}")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_bench(args) -> int:
    from .bench import format_benchmark, run_benchmark

    sizes = tuple(int(s) for s in args.sizes.split(","))
    rows = run_benchmark(args.seq_len, sizes, args.repeats)
    print(f"active backend: {BACKEND_NAME}")
    print(format_benchmark(rows))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
