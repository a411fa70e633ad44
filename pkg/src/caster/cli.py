"""Command-line interface: mine, pretrain, train, predict, explain.

Flag values take precedence over a ``--config`` key=value file, which in
turn overrides built-in defaults.  Every command is deterministic given
``--seed`` (env var CASTER_SEED is the fallback); the effective
configuration is echoed into the output directory for provenance.

Exit codes: 0 success, 1 runtime failure (IO/parse/training), 2
usage/validation error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import model as model_mod
from . import metrics
from .corpus import (
    CorpusFormatError,
    PairCorpus,
    PairExample,
    SmilesParseError,
    atom_tokenize,
    load_pair_corpus,
    load_smiles_corpus,
)
from .featurize import featurize_pairs
from .model import (
    CasterModel,
    CheckpointError,
    LossWeights,
    ModelConfig,
    TrainingConfig,
    TrainingError,
    explain_pair,
    load_checkpoint,
    save_checkpoint,
)
from .spm import Vocabulary, VocabularyError, mine_vocabulary



class UsageError(ValueError):
    pass


DEFAULTS = {
    "min_freq": 50,
    "max_merges": 30000,
    "latent_dim": 50,
    "encoder_hidden": "500,500",
    "decoder_hidden": "500,500",
    "predictor_hidden": "1024,1024,1024,256,64",
    "alpha": 0.1,
    "beta": 0.1,
    "gamma": 1.0,
    "lambda1": 1e-5,
    "lambda2": 0.1,
    "magnifier": 100.0,
    "batch_size": 256,
    "lr": 1e-3,
    "pretrain_epochs": 1,
    "max_epochs": 20,
    "patience": 5,
    "split": "7:1:2",
    "split_mode": "ratio",
    "fold_index": 0,
    "refine_steps": 0,
    "refine_lr": 0.1,
    "dtype": "float64",
    "f1_threshold": 0.5,
}

_CASTS = {
    "min_freq": int, "max_merges": int, "latent_dim": int, "batch_size": int,
    "pretrain_epochs": int, "max_epochs": int, "patience": int, "fold_index": int,
    "refine_steps": int, "seed": int,
    "alpha": float, "beta": float, "gamma": float, "lambda1": float, "lambda2": float,
    "magnifier": float, "lr": float, "refine_lr": float, "f1_threshold": float,
}


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


class Settings:
    """Resolved option values: flags > config file > defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str, default=None):
        flag = self._args.get(key)
        if flag is not None:
            return flag
        if key in self._file:
            cast = _CASTS.get(key, str)
            return cast(self._file[key])
        if key in DEFAULTS:
            return _CASTS.get(key, str)(str(DEFAULTS[key])) if key in _CASTS else DEFAULTS[key]
        return default

    def seed(self) -> int:
        value = self.get("seed")
        if value is not None:
            return int(value)
        env = os.environ.get("CASTER_SEED")
        return int(env) if env else 0

    def effective(self, keys) -> dict:
        out = {key: self.get(key) for key in keys}
        out["seed"] = self.seed()
        return out


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in str(text).split(",") if t)
    except ValueError as err:
        raise UsageError(f"bad layer-size list {text!r}") from err


def _parse_split(text: str) -> tuple[float, float, float]:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"--split must be three colon-separated numbers, got {text!r}")
    try:
        nums = [float(p) for p in parts]
    except ValueError as err:
        raise UsageError(f"bad --split value {text!r}") from err
    total = sum(nums)
    if total <= 0 or any(v <= 0 for v in nums):
        raise UsageError("--split ratios must be positive")
    return tuple(v / total for v in nums)


_MODEL_KEYS = (
    "latent_dim", "encoder_hidden", "decoder_hidden", "predictor_hidden",
    "magnifier", "refine_steps", "refine_lr", "dtype",
)
_WEIGHT_KEYS = ("alpha", "beta", "gamma", "lambda1", "lambda2")
_TRAIN_KEYS = (
    "batch_size", "lr", "pretrain_epochs", "max_epochs", "patience",
    "split", "split_mode", "fold_index",
)


def _model_config(s: Settings) -> ModelConfig:
    return ModelConfig(
        latent_dim=s.get("latent_dim"),
        encoder_hidden=_parse_hidden(s.get("encoder_hidden")),
        decoder_hidden=_parse_hidden(s.get("decoder_hidden")),
        predictor_hidden=_parse_hidden(s.get("predictor_hidden")),
        magnifier=s.get("magnifier"),
        projection_refine_steps=s.get("refine_steps"),
        projection_refine_lr=s.get("refine_lr"),
        dtype=s.get("dtype"),
    )


def _loss_weights(s: Settings) -> LossWeights:
    try:
        return LossWeights(*(s.get(k) for k in _WEIGHT_KEYS))
    except ValueError as err:
        raise UsageError(str(err)) from err


def _training_config(s: Settings) -> TrainingConfig:
    try:
        return TrainingConfig(
            batch_size=s.get("batch_size"),
            lr=s.get("lr"),
            pretrain_epochs=s.get("pretrain_epochs"),
            max_epochs=s.get("max_epochs"),
            patience=s.get("patience"),
            split_ratio=_parse_split(s.get("split")),
            split_mode=s.get("split_mode"),
            fold_index=s.get("fold_index"),
            seed=s.seed(),
        )
    except ValueError as err:
        raise UsageError(str(err)) from err


def _echo_config(out_dir: Path, s: Settings, keys) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = sorted(s.effective(keys).items())
    text = "".join(f"{k}={v}\n" for k, v in rows)
    (out_dir / "config_used.txt").write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_mine(args) -> int:
    s = Settings(args)
    min_freq = s.get("min_freq")
    max_merges = s.get("max_merges")
    if min_freq < 1:
        raise UsageError(f"--min-freq must be >= 1, got {min_freq}")
    if max_merges < 0:
        raise UsageError(f"--max-merges must be >= 0, got {max_merges}")
    compounds = load_smiles_corpus(args.corpus)
    vocab = mine_vocabulary([atom_tokenize(c) for c in compounds], min_freq, max_merges)
    vocab.save(args.out)
    print(f"k={vocab.k} merges={len(vocab.merges)}")
    return 0


def _load_vocab(path) -> Vocabulary:
    return Vocabulary.load(path)


def cmd_pretrain(args) -> int:
    s = Settings(args)
    vocab = _load_vocab(args.vocab)
    corpus = load_pair_corpus(args.unlabelled, "unlabelled")
    config = _training_config(s)
    weights = _loss_weights(s)
    model = CasterModel(vocab.k, _model_config(s), weights, seed=s.seed(), vocab_hash=vocab.content_hash())
    out_dir = Path(args.out_dir)
    _echo_config(out_dir, s, _MODEL_KEYS + _WEIGHT_KEYS + _TRAIN_KEYS)
    history = model_mod.pretrain(model, corpus, vocab, config)
    ckpt = out_dir / "pretrained.ckpt"
    save_checkpoint(ckpt, model)
    with open(out_dir / "pretrain_history.tsv", "w", encoding="utf-8") as fh:
        fh.write("epoch\tbatch\tloss\trecon\tproj\n")
        for row in history:
            fh.write(
                f"{row['epoch']}\t{row['batch']}\t{row['loss']:.6f}\t{row['recon']:.6f}\t{row['proj']:.6f}\n"
            )
    print(f"pretrained checkpoint written to {ckpt}")
    return 0


def cmd_train(args) -> int:
    s = Settings(args)
    vocab = _load_vocab(args.vocab)
    corpus = load_pair_corpus(args.labelled, "labelled")
    config = _training_config(s)
    weights = _loss_weights(s)
    if args.init_checkpoint:
        model = load_checkpoint(args.init_checkpoint, vocab=vocab)
        model.weights = weights
    else:
        model = CasterModel(
            vocab.k, _model_config(s), weights, seed=s.seed(), vocab_hash=vocab.content_hash()
        )
    out_dir = Path(args.out_dir)
    _echo_config(out_dir, s, _MODEL_KEYS + _WEIGHT_KEYS + _TRAIN_KEYS)
    result = model_mod.train(model, corpus, vocab, config)
    save_checkpoint(out_dir / "model.ckpt", model)
    metrics.write_history(out_dir / "history.tsv", result.history)
    metrics.write_report(out_dir / "test_metrics.tsv", result.test_metrics)
    print(
        f"best epoch {result.best_epoch}: "
        f"test roc_auc={result.test_metrics['roc_auc']:.4f} "
        f"pr_auc={result.test_metrics['pr_auc']:.4f} f1={result.test_metrics['f1']:.4f}"
    )
    return 0


def cmd_predict(args) -> int:
    vocab = _load_vocab(args.vocab)
    model = load_checkpoint(args.checkpoint, vocab=vocab)
    corpus = load_pair_corpus(args.pairs, "unlabelled")
    X, _ = featurize_pairs(corpus, vocab)
    probs = model.predict_pairs(X)
    with open(args.out, "w", encoding="utf-8") as fh:
        for pair_id, p in enumerate(probs):
            fh.write(f"{pair_id}\t{p:.6f}\n")
    print(f"wrote {len(probs)} scores to {args.out}")
    return 0


def cmd_explain(args) -> int:
    vocab = _load_vocab(args.vocab)
    model = load_checkpoint(args.checkpoint, vocab=vocab)
    atom_tokenize(args.left)
    atom_tokenize(args.right)
    probe = PairCorpus([PairExample(args.left, args.right)], "unlabelled")
    X, _ = featurize_pairs(probe, vocab)
    prob = float(model.predict_pairs(X)[0])
    table = explain_pair(model, args.left, args.right, vocab)
    lines = "".join(f"{tok}\t{coef:.6f}\n" for tok, coef in table)
    if args.out:
        Path(args.out).write_text(lines, encoding="utf-8")
    else:
        sys.stdout.write(lines)
    print(f"interaction probability: {prob:.6f}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, help="random seed (default: $CASTER_SEED or 0)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")


def _add_hyper(p: argparse.ArgumentParser) -> None:
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--encoder-hidden", dest="encoder_hidden")
    p.add_argument("--decoder-hidden", dest="decoder_hidden")
    p.add_argument("--predictor-hidden", dest="predictor_hidden")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--magnifier", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--pretrain-epochs", type=int, dest="pretrain_epochs")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--patience", type=int)
    p.add_argument("--split", help="train:val:test ratio, e.g. 7:1:2")
    p.add_argument("--split-mode", dest="split_mode", help="'ratio' or 'folds:<n>'")
    p.add_argument("--fold-index", type=int, dest="fold_index")
    p.add_argument("--refine-steps", type=int, dest="refine_steps")
    p.add_argument("--refine-lr", type=float, dest="refine_lr")
    p.add_argument("--dtype", choices=("float64", "float32"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caster", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine a substructure vocabulary from a SMILES corpus")
    p.add_argument("--corpus", required=True, help="one SMILES per line, no header")
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("--max-merges", type=int, dest="max_merges")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("pretrain", help="stage 1: unsupervised training on unlabelled pairs")
    p.add_argument("--vocab", required=True)
    p.add_argument("--unlabelled", required=True, help="TSV: smiles_1<TAB>smiles_2")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    _add_hyper(p)
    _add_common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="stage 2: supervised training with early stopping")
    p.add_argument("--vocab", required=True)
    p.add_argument("--labelled", required=True, help="TSV: smiles_1<TAB>smiles_2<TAB>label")
    p.add_argument("--init-checkpoint", dest="init_checkpoint",
                   help="stage-1 checkpoint; when set, the architecture comes from "
                        "the checkpoint and architecture flags are ignored")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    _add_hyper(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score pairs with a trained checkpoint")
    p.add_argument("--vocab", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="ranked substructure coefficients for one pair")
    p.add_argument("--vocab", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_explain)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except CheckpointError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (CorpusFormatError, SmilesParseError, VocabularyError, TrainingError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
