"""Interaction model: auto-encoder, dictionary projection, predictor.

The pipeline embeds a pair's multi-hot substructure vector x into a latent
z, reconstructs x from z (reconstruction loss), expresses z in the basis
of encoded single-hot substructure indicators via a ridge projection whose
closed form is differentiated analytically (projection loss), and feeds
the magnified projection coefficients to a batch-normalized perceptron
that scores the interaction probability (classification loss).

Training is two-staged: unsupervised pre-training on unlabelled pairs
minimizes alpha*recon + beta*projection; supervised fine-tuning adds
gamma*classification with ROC-AUC early stopping on a validation split.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import metrics
from .corpus import PairCorpus
from .featurize import featurize_pairs, functional_representation
from .nn import MLP, Adam, merge_grads, sigmoid
from .spm import Vocabulary

log = logging.getLogger(__name__)

CKPT_MAGIC = "caster-ckpt v1"

_CLAMP = 1e-12


class TrainingError(RuntimeError):
    """Raised when optimization produces non-finite values or bad splits."""


class CheckpointError(ValueError):
    """Raised for malformed checkpoints or vocabulary mismatches."""


@dataclass(frozen=True)
class LossWeights:
    """Weights of the aggregated loss and the projection regularizers."""

    alpha: float = 0.1
    beta: float = 0.1
    gamma: float = 1.0
    lambda1: float = 1e-5
    lambda2: float = 0.1

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "lambda2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.lambda1 <= 0:
            raise ValueError("lambda1 must be positive (the projection solve requires it)")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of the encoder, decoder and predictor stacks."""

    latent_dim: int = 50
    encoder_hidden: tuple[int, ...] = (500, 500)
    decoder_hidden: tuple[int, ...] = (500, 500)
    predictor_hidden: tuple[int, ...] = (1024, 1024, 1024, 256, 64)
    magnifier: float = 100.0
    projection_refine_steps: int = 0
    projection_refine_lr: float = 0.1
    dtype: str = "float64"

    def np_dtype(self):
        return np.dtype(self.dtype)


@dataclass(frozen=True)
class TrainingConfig:
    batch_size: int = 256
    lr: float = 1e-3
    pretrain_epochs: int = 1
    max_epochs: int = 20
    patience: int = 5
    split_ratio: tuple[float, float, float] = (0.7, 0.1, 0.2)
    split_mode: str = "ratio"  # "ratio" or "folds:<n>"
    fold_index: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (batch normalization)")
        if any(r <= 0 for r in self.split_ratio) or abs(sum(self.split_ratio) - 1.0) > 1e-9:
            raise ValueError("split ratios must be positive and sum to 1")
        if self.split_mode != "ratio":
            if not self.split_mode.startswith("folds:") or int(self.split_mode[6:]) < 2:
                raise ValueError(f"split_mode must be 'ratio' or 'folds:<n>', got {self.split_mode!r}")
            if not 0 <= self.fold_index < int(self.split_mode[6:]):
                raise ValueError("fold_index out of range")


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def reconstruction_loss(x: np.ndarray, xhat: np.ndarray) -> float:
    """Binary cross-entropy summed over features, averaged over the batch."""
    x = np.atleast_2d(x)
    xhat = np.clip(np.atleast_2d(xhat), _CLAMP, 1.0 - _CLAMP)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {xhat.shape}")
    per_sample = -(x * np.log(xhat) + (1.0 - x) * np.log(1.0 - xhat)).sum(axis=1)
    return float(per_sample.mean())


def classification_loss(p: np.ndarray, y: np.ndarray) -> float:
    """Binary cross-entropy of interaction probabilities, batch-averaged."""
    p = np.clip(np.asarray(p, dtype=np.float64), _CLAMP, 1.0 - _CLAMP)
    y = np.asarray(y, dtype=np.float64)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())


def projection_loss(z, B, r, lambda1: float, lambda2: float) -> float:
    """Ridge projection objective plus the basis Frobenius penalty.

    The residual and coefficient terms are averaged over the batch; the
    lambda2 * ||B||_F^2 term is charged once (it regularizes parameters,
    not data).
    """
    z = np.atleast_2d(z)
    r = np.atleast_2d(r)
    resid = z - r @ B.T
    data_term = 0.5 * float((resid**2).sum(axis=1).mean())
    coef_term = 0.5 * lambda1 * float((r**2).sum(axis=1).mean())
    return data_term + coef_term + lambda2 * float((B**2).sum())


# ---------------------------------------------------------------------------
# Ridge projection
# ---------------------------------------------------------------------------

def ridge_coefficients(z: np.ndarray, B: np.ndarray, lambda1: float, route: str = "dual") -> np.ndarray:
    """Closed-form minimizer of 0.5*||z - B r||^2 + (lambda1/2)*||r||^2.

    `route="dual"` solves the d x d system (B B^T + lambda1 I) w = z and
    returns B^T w; `route="primal"` solves the equivalent k x k system
    (B^T B + lambda1 I) r = B^T z.  Both accept a single vector (d,) or a
    batch (n, d) and return matching shapes.

    With lambda1 = 0 only the primal route is available and B must have
    full column rank.
    """
    single = z.ndim == 1
    Z = np.atleast_2d(z)
    d, k = B.shape
    if Z.shape[1] != d:
        raise ValueError(f"z has dimension {Z.shape[1]}, basis has d={d}")
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    if lambda1 == 0 or route == "primal":
        M = B.T @ B + lambda1 * np.eye(k, dtype=B.dtype)
        try:
            factor = cho_factor(M)
        except np.linalg.LinAlgError as err:
            raise ValueError(
                "singular projection system (rank-deficient basis); use a positive lambda1"
            ) from err
        rhs = B.T @ Z.T
        R = cho_solve(factor, rhs)
        R += cho_solve(factor, rhs - M @ R)  # one refinement pass for sharpness
        R = R.T
    elif route == "dual":
        M = B @ B.T + lambda1 * np.eye(d, dtype=B.dtype)
        factor = cho_factor(M)
        W = cho_solve(factor, Z.T)
        W += cho_solve(factor, Z.T - M @ W)
        R = W.T @ B
    else:
        raise ValueError(f"unknown route {route!r}")
    return R[0] if single else R


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

class CasterModel:
    """Encoder/decoder/predictor triple over a fixed substructure vocabulary."""

    def __init__(
        self,
        k: int,
        config: ModelConfig | None = None,
        weights: LossWeights | None = None,
        seed: int = 0,
        vocab_hash: str = "",
    ):
        self.config = config or ModelConfig()
        self.weights = weights or LossWeights()
        self.k = k
        self.vocab_hash = vocab_hash
        d = self.config.latent_dim
        if not 0 < d < k:
            raise ValueError(f"latent_dim must satisfy 0 < d < k, got d={d}, k={k}")
        dtype = self.config.np_dtype()
        rng = np.random.default_rng(seed)
        self.encoder = MLP(k, self.config.encoder_hidden, d, rng, name="encoder", dtype=dtype)
        self.decoder = MLP(d, self.config.decoder_hidden, k, rng, name="decoder", dtype=dtype)
        self.predictor = MLP(
            k, self.config.predictor_hidden, 1, rng, batchnorm=True, name="predictor", dtype=dtype
        )
        self._eye = np.eye(k, dtype=dtype)

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            **self.encoder.parameters(),
            **self.decoder.parameters(),
            **self.predictor.parameters(),
        }

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {
            **self.encoder.state_arrays(),
            **self.decoder.state_arrays(),
            **self.predictor.state_arrays(),
        }

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.state_arrays().items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        arrays = self.state_arrays()
        for name, value in snap.items():
            arrays[name][...] = value

    # -- forward pieces ----------------------------------------------------

    def _as_batch(self, x: np.ndarray) -> np.ndarray:
        return np.atleast_2d(np.asarray(x, dtype=self.config.np_dtype()))

    def encode(self, x: np.ndarray) -> np.ndarray:
        single = x.ndim == 1
        z, _ = self.encoder.forward(self._as_batch(x))
        return z[0] if single else z

    def decode(self, z: np.ndarray) -> np.ndarray:
        single = z.ndim == 1
        logits, _ = self.decoder.forward(self._as_batch(z))
        # keep outputs strictly inside (0, 1) even at float saturation
        xhat = np.clip(sigmoid(logits), _CLAMP, 1.0 - _CLAMP)
        return xhat[0] if single else xhat

    def dictionary_basis(self) -> np.ndarray:
        """d x k basis whose column i is the encoding of single-hot i.

        Recomputed from the current encoder parameters on every call.
        """
        rows, _ = self.encoder.forward(self._eye)
        return rows.T

    def project(self, z: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
        """Projection coefficients for latent vectors, with optional refinement."""
        if B is None:
            B = self.dictionary_basis()
        r = ridge_coefficients(z, B, self.weights.lambda1)
        for _ in range(self.config.projection_refine_steps):
            resid = np.atleast_2d(r) @ B.T - np.atleast_2d(z)
            step = resid @ B + self.weights.lambda1 * np.atleast_2d(r)
            r = r - self.config.projection_refine_lr * (step[0] if r.ndim == 1 else step)
        return r

    def predict_probability(self, r: np.ndarray) -> np.ndarray:
        """sigmoid(predictor(magnified coefficients)), inference-mode batch norm."""
        single = r.ndim == 1
        logits, _ = self.predictor.forward(self.config.magnifier * self._as_batch(r), training=False)
        p = sigmoid(logits[:, 0])
        return float(p[0]) if single else p

    def predict_pairs(self, X: np.ndarray, chunk: int = 1024) -> np.ndarray:
        """Interaction probabilities for a batch of functional vectors."""
        X = np.atleast_2d(X)
        B = self.dictionary_basis()
        out = np.empty(X.shape[0], dtype=np.float64)
        for lo in range(0, X.shape[0], chunk):
            part = X[lo : lo + chunk]
            r = self.project(self.encode(part), B)
            out[lo : lo + chunk] = self.predict_probability(r)
        return out

    # -- one training step (forward + analytic backward) --------------------

    def step(self, X: np.ndarray, y: np.ndarray | None, training: bool = True):
        """Aggregated loss and gradients for one batch.

        Returns (loss, parts, grads) where parts holds the unweighted
        recon/proj/clf values.  Gradients flow through the closed-form
        ridge solve and any refinement steps.
        """
        w = self.weights
        n = X.shape[0]
        lam1 = w.lambda1
        d = self.latent_dim

        X = np.asarray(X, dtype=self.config.np_dtype())
        Z, cache_x = self.encoder.forward(X, training)
        Brows, cache_u = self.encoder.forward(self._eye, training)
        B = Brows.T

        M = B @ B.T + lam1 * np.eye(d, dtype=B.dtype)
        factor = cho_factor(M)
        Wsol = cho_solve(factor, Z.T)  # (d, n)
        R = Wsol.T @ B  # (n, k)

        refine_caches = []
        lr_in = self.config.projection_refine_lr
        for _ in range(self.config.projection_refine_steps):
            E = R @ B.T - Z
            refine_caches.append((R, E))
            R = R - lr_in * (E @ B + lam1 * R)

        resid = Z - R @ B.T
        lp = (
            0.5 * float((resid**2).sum(axis=1).mean())
            + 0.5 * lam1 * float((R**2).sum(axis=1).mean())
            + w.lambda2 * float((B**2).sum())
        )

        dec_logits, cache_d = self.decoder.forward(Z, training)
        Xhat = sigmoid(dec_logits)
        lr_loss = reconstruction_loss(X, Xhat)

        lc = 0.0
        P = None
        cache_p = None
        if y is not None:
            logits, cache_p = self.predictor.forward(self.config.magnifier * R, training)
            P = sigmoid(logits[:, 0])
            lc = classification_loss(P, y)

        loss = w.alpha * lr_loss + w.beta * lp + (w.gamma * lc if y is not None else 0.0)
        if not np.isfinite(loss):
            raise TrainingError(
                f"non-finite loss (recon={lr_loss}, proj={lp}, clf={lc}); "
                "check the learning rate and input featurization"
            )

        grad_Z = np.zeros_like(Z)
        grad_B = np.zeros_like(B)
        grad_R = np.zeros_like(R)
        grad_dicts = []

        if w.alpha != 0.0:
            g_dec = w.alpha * (Xhat - X) / n
            gz, dec_grads = self.decoder.backward(cache_d, g_dec)
            grad_Z += gz
            grad_dicts.append(dec_grads)

        if w.beta != 0.0:
            grad_Z += w.beta * resid / n
            grad_R += w.beta * (lam1 * R - resid @ B) / n
            grad_B += w.beta * (2.0 * w.lambda2 * B - resid.T @ R / n)

        if y is not None and w.gamma != 0.0:
            g_logits = (w.gamma * (P - y) / n)[:, None]
            g_pin, pred_grads = self.predictor.backward(cache_p, g_logits)
            grad_R += self.config.magnifier * g_pin
            grad_dicts.append(pred_grads)

        # Back through the unrolled refinement steps, newest first.
        for R_prev, E in reversed(refine_caches):
            G = grad_R
            grad_Z += lr_in * (G @ B.T)
            grad_B -= lr_in * (E.T @ G + B @ (G.T @ R_prev))
            grad_R = G - lr_in * ((G @ B.T) @ B + lam1 * G)

        # Back through R = Wsol^T B with Wsol = M^{-1} Z^T, M = B B^T + lam1 I.
        grad_W = B @ grad_R.T
        grad_B += Wsol @ grad_R
        grad_Zt = cho_solve(factor, grad_W)
        grad_Z += grad_Zt.T
        grad_M = -grad_Zt @ Wsol.T
        grad_B += (grad_M + grad_M.T) @ B

        if w.alpha != 0.0 or w.beta != 0.0 or (y is not None and w.gamma != 0.0):
            _, enc_from_data = self.encoder.backward(cache_x, grad_Z)
            _, enc_from_basis = self.encoder.backward(cache_u, grad_B.T)
            grad_dicts.extend([enc_from_data, enc_from_basis])

        parts = {"recon": lr_loss, "proj": lp, "clf": lc}
        return loss, parts, merge_grads(*grad_dicts)


# ---------------------------------------------------------------------------
# Data splitting
# ---------------------------------------------------------------------------

def split_indices(n: int, config: TrainingConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic train/validation/test index split.

    In fold mode the permuted indices are cut into exclusive folds, the
    configured fold becomes the run's dataset, and the ratio split is
    applied within it.
    """
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    if config.split_mode.startswith("folds:"):
        n_folds = int(config.split_mode[6:])
        perm = np.array_split(perm, n_folds)[config.fold_index]
    m = len(perm)
    r_train, r_val, _ = config.split_ratio
    n_train = int(round(m * r_train))
    n_val = int(round(m * r_val))
    return perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]


def _check_both_classes(y: np.ndarray, name: str) -> None:
    # ValueError: this is an input-validation failure, not a runtime one
    if len(y) == 0 or y.min() == y.max():
        raise ValueError(f"{name} split does not contain both classes")


def _batches(order: np.ndarray, batch_size: int):
    for lo in range(0, len(order), batch_size):
        batch = order[lo : lo + batch_size]
        if len(batch) >= 2:  # batch norm cannot train on a single sample
            yield batch


# ---------------------------------------------------------------------------
# Two-stage training
# ---------------------------------------------------------------------------

def pretrain(
    model: CasterModel,
    unlabelled: PairCorpus,
    vocab: Vocabulary,
    config: TrainingConfig,
    weights: LossWeights | None = None,
) -> list[dict]:
    """Stage 1: unsupervised training on unlabelled pairs.

    Minimizes alpha*recon + beta*proj for `config.pretrain_epochs` epochs.
    Returns one history row per batch with the unweighted loss parts.
    """
    if len(unlabelled) == 0:
        raise TrainingError("unlabelled corpus is empty")
    if weights is not None:
        model.weights = weights
    X, _ = featurize_pairs(unlabelled, vocab)
    return pretrain_arrays(model, X, config)


def pretrain_arrays(model: CasterModel, X: np.ndarray, config: TrainingConfig) -> list[dict]:
    rng = np.random.default_rng(config.seed)
    adam = Adam(model.parameters(), lr=config.lr)
    history: list[dict] = []
    for epoch in range(config.pretrain_epochs):
        order = rng.permutation(X.shape[0])
        for bi, batch in enumerate(_batches(order, config.batch_size)):
            loss, parts, grads = model.step(X[batch], None, training=True)
            adam.step(grads)
            history.append({"epoch": epoch, "batch": bi, "loss": loss, **parts})
    return history


@dataclass
class TrainResult:
    history: list[dict]
    best_epoch: int
    test_metrics: dict[str, float]
    test_scores: np.ndarray
    test_labels: np.ndarray
    split: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


def train(
    model: CasterModel,
    labelled: PairCorpus,
    vocab: Vocabulary,
    config: TrainingConfig,
    weights: LossWeights | None = None,
) -> TrainResult:
    """Stage 2: supervised fine-tuning with early stopping.

    Splits the corpus per `config`, minimizes the aggregated loss, tracks
    validation ROC-AUC each epoch, restores the best checkpoint and
    reports test metrics.
    """
    if weights is not None:
        model.weights = weights
    X, y = featurize_pairs(labelled, vocab)
    if y is None:
        raise TrainingError("supervised training needs a labelled corpus")
    return train_arrays(model, X, y, config)


def train_arrays(model: CasterModel, X: np.ndarray, y: np.ndarray, config: TrainingConfig) -> TrainResult:
    idx_train, idx_val, idx_test = split_indices(X.shape[0], config)
    for name, idx in (("train", idx_train), ("validation", idx_val), ("test", idx_test)):
        _check_both_classes(y[idx], name)

    rng = np.random.default_rng(config.seed + 1)
    adam = Adam(model.parameters(), lr=config.lr)
    history: list[dict] = []
    best_auc = -np.inf
    best_epoch = -1
    best_state = model.snapshot()
    bad_epochs = 0

    for epoch in range(config.max_epochs):
        order = idx_train[rng.permutation(len(idx_train))]
        sums = {"loss": 0.0, "recon": 0.0, "proj": 0.0, "clf": 0.0}
        n_batches = 0
        for batch in _batches(order, config.batch_size):
            loss, parts, grads = model.step(X[batch], y[batch], training=True)
            adam.step(grads)
            sums["loss"] += loss
            for key in ("recon", "proj", "clf"):
                sums[key] += parts[key]
            n_batches += 1
        val_auc = metrics.roc_auc(model.predict_pairs(X[idx_val]), y[idx_val])
        row = {k: v / max(n_batches, 1) for k, v in sums.items()}
        row.update({"epoch": epoch, "val_roc_auc": val_auc})
        history.append(row)
        log.info("epoch %d: loss=%.4f val_roc_auc=%.4f", epoch, row["loss"], val_auc)

        if val_auc > best_auc:
            best_auc = val_auc
            best_epoch = epoch
            best_state = model.snapshot()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > config.patience:
                break

    model.restore(best_state)
    test_scores = model.predict_pairs(X[idx_test])
    test_labels = y[idx_test]
    test_metrics = {
        "roc_auc": metrics.roc_auc(test_scores, test_labels),
        "pr_auc": metrics.pr_auc(test_scores, test_labels),
        "f1": metrics.f1_at_threshold(test_scores, test_labels),
    }
    return TrainResult(
        history,
        best_epoch,
        test_metrics,
        test_scores,
        test_labels,
        {"train": idx_train, "val": idx_val, "test": idx_test},
    )


# ---------------------------------------------------------------------------
# Explanation
# ---------------------------------------------------------------------------

def explain_pair(model: CasterModel, left: str, right: str, vocab: Vocabulary) -> list[tuple[str, float]]:
    """Magnified projection coefficients of the substructures present in a pair.

    Returns (substructure, coefficient) sorted by descending coefficient
    magnitude; empty (with a warning) when the pair shares no vocabulary
    substructure.
    """
    x = functional_representation(left, right, vocab)
    present = np.flatnonzero(x)
    if len(present) == 0:
        log.warning("pair shares no vocabulary substructure; nothing to explain")
        return []
    r = model.project(model.encode(x))
    magnified = model.config.magnifier * r
    ranked = sorted(present, key=lambda i: (-abs(magnified[i]), i))
    names = vocab.tokens()
    return [(names[i], float(magnified[i])) for i in ranked]


# ---------------------------------------------------------------------------
# Checkpoint persistence
# ---------------------------------------------------------------------------

def _fmt_floats(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_checkpoint(path, model: CasterModel) -> None:
    """Write a versioned text checkpoint with exact decimal parameter values."""
    cfg = model.config
    w = model.weights
    lines = [
        CKPT_MAGIC,
        f"k={model.k}",
        f"d={cfg.latent_dim}",
        f"encoder_hidden={','.join(map(str, cfg.encoder_hidden))}",
        f"decoder_hidden={','.join(map(str, cfg.decoder_hidden))}",
        f"predictor_hidden={','.join(map(str, cfg.predictor_hidden))}",
        f"alpha={w.alpha!r}",
        f"beta={w.beta!r}",
        f"gamma={w.gamma!r}",
        f"lambda1={w.lambda1!r}",
        f"lambda2={w.lambda2!r}",
        f"magnifier={cfg.magnifier!r}",
        f"refine_steps={cfg.projection_refine_steps}",
        f"refine_lr={cfg.projection_refine_lr!r}",
        f"dtype={cfg.dtype}",
        f"vocab_hash={model.vocab_hash}",
        "",
    ]
    for name, arr in sorted(model.state_arrays().items()):
        shape = "x".join(map(str, arr.shape))
        lines.append(f"param {name} {shape}")
        if arr.ndim == 1:
            lines.append(_fmt_floats(arr))
        else:
            lines.extend(_fmt_floats(row) for row in arr)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_hidden(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


def load_checkpoint(path, vocab: Vocabulary | None = None, expected_vocab_hash: str | None = None) -> CasterModel:
    """Load a checkpoint, refusing a vocabulary whose hash does not match."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CKPT_MAGIC:
        raise CheckpointError(f"{path}: missing {CKPT_MAGIC!r} header")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i]:
        key, _, value = lines[i].partition("=")
        header[key] = value
        i += 1
    i += 1

    try:
        k = int(header["k"])
        config = ModelConfig(
            latent_dim=int(header["d"]),
            encoder_hidden=_parse_hidden(header["encoder_hidden"]),
            decoder_hidden=_parse_hidden(header["decoder_hidden"]),
            predictor_hidden=_parse_hidden(header["predictor_hidden"]),
            magnifier=float(header["magnifier"]),
            projection_refine_steps=int(header.get("refine_steps", "0")),
            projection_refine_lr=float(header.get("refine_lr", "0.1")),
            dtype=header.get("dtype", "float64"),
        )
        weights = LossWeights(
            alpha=float(header["alpha"]),
            beta=float(header["beta"]),
            gamma=float(header["gamma"]),
            lambda1=float(header["lambda1"]),
            lambda2=float(header["lambda2"]),
        )
        stored_hash = header["vocab_hash"]
    except (KeyError, ValueError) as err:
        raise CheckpointError(f"{path}: malformed header: {err}") from err

    expected = expected_vocab_hash
    if vocab is not None:
        expected = vocab.content_hash()
    if expected is not None and expected != stored_hash:
        raise CheckpointError(
            f"{path}: checkpoint was trained against a different vocabulary "
            f"(stored hash {stored_hash[:12]}..., expected {expected[:12]}...)"
        )

    model = CasterModel(k, config, weights, seed=0, vocab_hash=stored_hash)
    arrays = model.state_arrays()
    seen = set()
    while i < len(lines):
        if not lines[i]:
            i += 1
            continue
        tag, name, shape_text = lines[i].split(" ")
        if tag != "param":
            raise CheckpointError(f"{path}: line {i + 1}: expected a param block")
        if name not in arrays:
            raise CheckpointError(f"{path}: unknown parameter {name!r}")
        shape = tuple(int(t) for t in shape_text.split("x"))
        if arrays[name].shape != shape:
            raise CheckpointError(
                f"{path}: parameter {name!r} has shape {shape}, model expects {arrays[name].shape}"
            )
        i += 1
        n_rows = 1 if len(shape) == 1 else shape[0]
        block = lines[i : i + n_rows]
        values = np.array([[float(v) for v in row.split(" ")] for row in block], dtype=np.float64)
        arrays[name][...] = values.reshape(shape)
        seen.add(name)
        i += n_rows
    missing = set(arrays) - seen
    if missing:
        raise CheckpointError(f"{path}: missing parameters {sorted(missing)}")
    return model
