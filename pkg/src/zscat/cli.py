"""Command-line entry point: train, eval, predict, gradcheck.

Exit codes are stable across subcommands: 0 success, 2 usage or config
error, 3 I/O or data error, 4 numeric failure during training, 5
gradient-check failure.

Options may come from flags or from a ``key=value`` config file
(``--config``); flags win.  Every train run records its resolved config
next to the checkpoint, and every report TSV gets a rendered PNG sibling.
"""

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import models, nn, report
from .data import load_fixture_tree  # noqa: F401  (re-exported convenience)
from .data import parse_category_tree, parse_corpus, parse_labeled_dataset, split_corpus
from .embeddings import load_embeddings
from .errors import (AllWordsOutOfVocabulary, CorruptCheckpoint, DataFormatError,
                     DegenerateSplit, DegenerateVocabulary, EmptyEvaluationSet,
                     EmptySentence, MalformedEmbeddingFile, NonFiniteLoss, UnknownLabel)
from .inference import class_scores, classify_multilabel, classify_single, evaluate_dataset
from .text import DEFAULT_TARGET_LENGTH
from .training import TrainConfig, evaluate_binary, sample_pairs, train, unseen_tag_pairs

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_GRADCHECK = 5

GRADCHECK_EMBED_DIM = 4
GRADCHECK_HIDDEN_DIM = 5
GRADCHECK_TOKENS = 6
GRADCHECK_TOLERANCE = 1e-4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    arch: int = 1
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    threshold: float = 0.5
    hidden: int = models.DEFAULT_HIDDEN_DIM
    target_length: int = DEFAULT_TARGET_LENGTH
    mode: str = "single"
    oov: str = "zero"
    fine_tune_embeddings: bool = False
    test_fraction: float = 0.1
    lr: float = nn.ADAM_LR
    beta1: float = nn.ADAM_BETA1
    beta2: float = nn.ADAM_BETA2
    eps: float = nn.ADAM_EPS
    embedding_format: str = "text"
    dataset_format: str = "tsv_generic"
    embeddings: str | None = None
    corpus: str | None = None
    tree: str | None = None
    dataset: str | None = None
    checkpoint: str | None = None


def _parse_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(name: str, raw: str, target_type):
    if target_type is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"config key {name}: expected a boolean, got {raw!r}")
    try:
        return target_type(raw)
    except ValueError as exc:
        raise UsageError(f"config key {name}: {exc}") from exc


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < explicit flags into a RunConfig."""
    file_values = _parse_config_file(args.config) if getattr(args, "config", None) else {}
    config = RunConfig()
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(config, f.name, flag)
        elif f.name in file_values:
            target = type(getattr(config, f.name)) if getattr(config, f.name) is not None else str
            setattr(config, f.name, _coerce(f.name, file_values[f.name], target))
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    if config.arch not in (1, 2, 3):
        raise UsageError(f"--arch must be 1, 2 or 3, got {config.arch}")
    if not 0.0 <= config.threshold <= 1.0:
        raise UsageError(f"--threshold must be in [0, 1], got {config.threshold}")
    if config.epochs < 0:
        raise UsageError(f"--epochs must be >= 0, got {config.epochs}")
    if config.target_length < 1:
        raise UsageError(f"--target-length must be >= 1, got {config.target_length}")
    if config.oov != "zero":
        raise UsageError(f"--oov supports only 'zero', got {config.oov!r}")
    if config.mode not in ("single", "multilabel"):
        raise UsageError(f"--mode must be single or multilabel, got {config.mode!r}")
    if not 0.0 <= config.test_fraction < 1.0:
        raise UsageError(f"test_fraction must be in [0, 1), got {config.test_fraction}")


def _require(config: RunConfig, *names: str) -> None:
    for name in names:
        if not getattr(config, name):
            raise UsageError(f"missing required option --{name.replace('_', '-')}")


def _load_store(config: RunConfig):
    with open(config.embeddings, "rb") as f:
        return load_embeddings(f, config.embedding_format)


def _write_config(config: RunConfig, path: Path) -> None:
    skip = {"embeddings", "corpus", "tree", "dataset", "checkpoint"}
    lines = [f"{f.name}={getattr(config, f.name)}"
             for f in fields(RunConfig) if f.name not in skip]
    path.write_text("\n".join(sorted(lines)) + "\n", encoding="utf-8")


def cmd_train(config: RunConfig) -> int:
    _require(config, "embeddings", "corpus", "checkpoint")
    store = _load_store(config)
    with open(config.corpus, "rb") as f:
        corpus = parse_corpus(f)

    test_corpus = None
    if config.test_fraction > 0.0:
        split = split_corpus(corpus, config.test_fraction, config.seed)
        corpus, test_corpus = split.train, split.test

    model = models.RelatednessModel.create(config.arch, store.dim,
                                           hidden_dim=config.hidden, seed=config.seed)
    train_config = TrainConfig(epochs=config.epochs, batch_size=config.batch_size,
                               lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                               eps=config.eps, seed=config.seed,
                               target_length=config.target_length,
                               fine_tune_embeddings=config.fine_tune_embeddings)
    model, metrics = train(model, store, corpus, train_config)

    ckpt = Path(config.checkpoint)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    models.save_checkpoint_file(model, ckpt)
    _write_config(config, ckpt.with_suffix(ckpt.suffix + ".config"))
    metrics_path = ckpt.with_suffix(ckpt.suffix + ".metrics.tsv")
    report.write_training_metrics(metrics_path, metrics)
    if metrics:
        report.render_training_curves(metrics_path.with_suffix(".png"), metrics)
        print(f"final_loss={metrics[-1].loss:.6g}")
        print(f"final_accuracy={metrics[-1].accuracy:.6g}")

    if test_corpus is not None and config.epochs > 0:
        pairs = sample_pairs(test_corpus, config.seed)
        result = evaluate_binary(model, store, pairs, config.target_length)
        print(f"test_accuracy={result.accuracy:.6g}")
        unseen = unseen_tag_pairs(pairs, corpus.tag_vocabulary)
        if unseen:
            unseen_result = evaluate_binary(model, store, unseen, config.target_length)
            print(f"unseen_tag_accuracy={unseen_result.accuracy:.6g}")
    print(f"checkpoint={ckpt}")
    return EXIT_OK


def cmd_eval(config: RunConfig) -> int:
    _require(config, "embeddings", "checkpoint", "tree", "dataset")
    store = _load_store(config)
    model = models.load_checkpoint_file(config.checkpoint)
    with open(config.tree, "rb") as f:
        tree = parse_category_tree(f)
    with open(config.dataset, "rb") as f:
        dataset = parse_labeled_dataset(f, config.dataset_format)

    result = evaluate_dataset(model, store, dataset, tree, mode=config.mode,
                              threshold=config.threshold,
                              target_length=config.target_length)
    ckpt = Path(config.checkpoint)
    report_path = ckpt.with_suffix(ckpt.suffix + ".eval.tsv")
    report.write_eval_report(report_path, result)
    report.render_eval_figure(report_path.with_suffix(".png"), result)

    for name, counts in result.counts.items():
        print(f"class={name} precision={counts.precision:.6g} recall={counts.recall:.6g}")
    if config.mode == "multilabel":
        print(f"threshold={config.threshold:.6g}")
    print(f"report={report_path}")
    print(f"accuracy={result.accuracy:.6g}")
    return EXIT_OK


def cmd_predict(config: RunConfig, sentence: str) -> int:
    _require(config, "embeddings", "checkpoint", "tree")
    store = _load_store(config)
    model = models.load_checkpoint_file(config.checkpoint)
    with open(config.tree, "rb") as f:
        tree = parse_category_tree(f)

    scored = class_scores(model, store, sentence, tree,
                          target_length=config.target_length)
    for name in tree.class_names():
        print(f"{name}\t{scored.scores[name]:.6g}")
    if config.mode == "multilabel":
        chosen = classify_multilabel(scored, config.threshold)
        ordered = [n for n in tree.class_names() if n in chosen]
        print(f"predicted={','.join(ordered)}")
    else:
        print(f"predicted={classify_single(scored)}")
    return EXIT_OK


def cmd_gradcheck(config: RunConfig) -> int:
    failures = []
    for arch_id in (1, 2, 3):
        model = models.RelatednessModel.create(arch_id, GRADCHECK_EMBED_DIM,
                                               hidden_dim=GRADCHECK_HIDDEN_DIM,
                                               seed=config.seed + arch_id)
        errors = models.gradient_check(model, n_tokens=GRADCHECK_TOKENS,
                                       seed=config.seed + arch_id)
        for block, err in errors.items():
            ok = err < GRADCHECK_TOLERANCE
            print(f"arch={arch_id} block={block} max_rel_err={err:.3e} "
                  f"{'ok' if ok else 'FAIL'}")
            if not ok:
                failures.append(f"arch{arch_id}/{block}")
    if failures:
        print(f"gradcheck_failed={','.join(failures)}")
        return EXIT_GRADCHECK
    print("gradcheck=ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zscat",
                                     description="Zero-shot text categorization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file; flags take precedence")
        p.add_argument("--arch", type=int, choices=(1, 2, 3))
        p.add_argument("--embeddings", help="embedding file path")
        p.add_argument("--corpus", help="training corpus TSV path")
        p.add_argument("--tree", help="category tree file path")
        p.add_argument("--dataset", help="labeled dataset path")
        p.add_argument("--checkpoint", help="model checkpoint path")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--mode", choices=("single", "multilabel"))
        p.add_argument("--hidden", type=int)
        p.add_argument("--target-length", dest="target_length", type=int)
        p.add_argument("--oov", choices=("zero",))
        p.add_argument("--fine-tune-embeddings", dest="fine_tune_embeddings",
                       action="store_true", default=None)
        p.add_argument("--embedding-format", dest="embedding_format",
                       choices=("text", "word2vec-binary"))
        p.add_argument("--dataset-format", dest="dataset_format",
                       choices=("tsv_generic", "csv_uci"))

    add_common(sub.add_parser("train", help="train a relatedness model"))
    add_common(sub.add_parser("eval", help="evaluate a checkpoint on a labeled dataset"))
    predict = sub.add_parser("predict", help="score one sentence against a category tree")
    add_common(predict)
    predict.add_argument("sentence", help="sentence text to classify")
    add_common(sub.add_parser("gradcheck", help="finite-difference check of all gradients"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "eval":
            return cmd_eval(config)
        if args.command == "predict":
            if not args.sentence or not args.sentence.strip():
                raise EmptySentence("sentence argument is empty")
            return cmd_predict(config, args.sentence)
        if args.command == "gradcheck":
            return cmd_gradcheck(config)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, EmptySentence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteLoss as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, MalformedEmbeddingFile, CorruptCheckpoint, UnknownLabel,
            DegenerateVocabulary, DegenerateSplit, EmptyEvaluationSet,
            AllWordsOutOfVocabulary, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
