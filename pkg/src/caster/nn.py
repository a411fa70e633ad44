"""Minimal dense-network building blocks on numpy.

Hand-written forward/backward passes for affine layers, ReLU, sigmoid and
1-D batch normalization, plus a bias-corrected Adam optimizer and a
central-finite-difference gradient checker.  Caches are passed explicitly
so the same layer can be applied to several inputs within one step.
Double precision throughout by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit as sigmoid  # numerically stable logistic


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def glorot_uniform(out_dim: int, in_dim: int, rng: np.random.Generator, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, size=(out_dim, in_dim)).astype(dtype)


class Dense:
    """Affine map y = x W^T + b for row-major batches."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype=np.float64):
        self.W = glorot_uniform(out_dim, in_dim, rng, dtype)
        self.b = np.zeros(out_dim, dtype=dtype)

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"expected input of shape (n, {self.in_dim}), got {x.shape}")
        return x @ self.W.T + self.b

    def backward(self, x: np.ndarray, grad_out: np.ndarray):
        """Gradients for the cached input `x`; returns (grad_x, grad_W, grad_b)."""
        if grad_out.shape != (x.shape[0], self.out_dim):
            raise ValueError(f"upstream gradient shape {grad_out.shape} does not match output")
        return grad_out @ self.W, grad_out.T @ x, grad_out.sum(axis=0)


class BatchNorm1d:
    """Per-feature normalization with running statistics for inference."""

    def __init__(self, dim: int, momentum: float = 0.1, eps: float = 1e-5, dtype=np.float64):
        if not 0.0 < momentum < 1.0:
            raise ValueError("momentum must be in (0, 1)")
        if eps <= 0.0:
            raise ValueError("epsilon must be positive")
        self.gamma = np.ones(dim, dtype=dtype)
        self.beta = np.zeros(dim, dtype=dtype)
        self.running_mean = np.zeros(dim, dtype=dtype)
        self.running_var = np.ones(dim, dtype=dtype)
        self.momentum = momentum
        self.eps = eps

    def forward(self, x: np.ndarray, training: bool):
        if training:
            if x.shape[0] < 2:
                raise ValueError("batch normalization needs batch size >= 2 in training mode")
            mean = x.mean(axis=0)
            var = x.var(axis=0)  # biased, matches the normalization below
            inv = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * inv
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (var - self.running_var)
        else:
            inv = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean) * inv
        return self.gamma * xhat + self.beta, (training, xhat, inv)

    def backward(self, cache, grad_out: np.ndarray):
        """Returns (grad_x, grad_gamma, grad_beta) for the cached forward call."""
        training, xhat, inv = cache
        grad_gamma = (grad_out * xhat).sum(axis=0)
        grad_beta = grad_out.sum(axis=0)
        dxhat = grad_out * self.gamma
        if training:
            n = xhat.shape[0]
            grad_x = (inv / n) * (
                n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
        else:
            grad_x = dxhat * inv
        return grad_x, grad_gamma, grad_beta


class MLP:
    """Dense stack with ReLU hidden units, optional batch norm, linear output."""

    def __init__(
        self,
        in_dim: int,
        hidden: tuple[int, ...],
        out_dim: int,
        rng: np.random.Generator,
        batchnorm: bool = False,
        name: str = "mlp",
        dtype=np.float64,
    ):
        dims = [in_dim, *hidden, out_dim]
        self.name = name
        self.layers = [Dense(dims[i], dims[i + 1], rng, dtype) for i in range(len(dims) - 1)]
        self.norms = [BatchNorm1d(h, dtype=dtype) for h in hidden] if batchnorm else None

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays, keyed by stable names (views, not copies)."""
        params: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.layers):
            params[f"{self.name}.{i}.W"] = layer.W
            params[f"{self.name}.{i}.b"] = layer.b
        if self.norms:
            for i, bn in enumerate(self.norms):
                params[f"{self.name}.{i}.bn.gamma"] = bn.gamma
                params[f"{self.name}.{i}.bn.beta"] = bn.beta
        return params

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Trainable parameters plus non-trainable running statistics."""
        arrays = self.parameters()
        if self.norms:
            for i, bn in enumerate(self.norms):
                arrays[f"{self.name}.{i}.bn.running_mean"] = bn.running_mean
                arrays[f"{self.name}.{i}.bn.running_var"] = bn.running_var
        return arrays

    def forward(self, x: np.ndarray, training: bool = False):
        """Returns (output, caches); pass the caches back to `backward`."""
        caches = []
        h = x
        for i, layer in enumerate(self.layers[:-1]):
            a = layer.forward(h)
            bn_cache = None
            if self.norms:
                a, bn_cache = self.norms[i].forward(a, training)
            caches.append((h, bn_cache, a))
            h = relu(a)
        caches.append(h)
        return self.layers[-1].forward(h), caches

    def backward(self, caches, grad_out: np.ndarray):
        """Returns (grad_input, grads) for the forward call that built `caches`."""
        grads: dict[str, np.ndarray] = {}
        h_last = caches[-1]
        g, gW, gb = self.layers[-1].backward(h_last, grad_out)
        last = len(self.layers) - 1
        grads[f"{self.name}.{last}.W"] = gW
        grads[f"{self.name}.{last}.b"] = gb
        for i in range(last - 1, -1, -1):
            x_in, bn_cache, pre_relu = caches[i]
            g = g * (pre_relu > 0)
            if self.norms:
                g, ggamma, gbeta = self.norms[i].backward(bn_cache, g)
                grads[f"{self.name}.{i}.bn.gamma"] = ggamma
                grads[f"{self.name}.{i}.bn.beta"] = gbeta
            g, gW, gb = self.layers[i].backward(x_in, g)
            grads[f"{self.name}.{i}.W"] = gW
            grads[f"{self.name}.{i}.b"] = gb
        return g, grads


class Adam:
    """Bias-corrected Adam over a dict of named parameter arrays (updated in place)."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, g in grads.items():
            p = self.params[name]
            m = self.m[name]
            v = self.v[name]
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    worst_param: str
    worst_index: tuple
    n_checked: int
    per_param: dict[str, float]


def gradient_check(
    loss_fn,
    params: dict[str, np.ndarray],
    tolerance: float = 1e-4,
    step: float = 1e-5,
    max_entries_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    `loss_fn` takes no arguments, reads the (mutated) `params` arrays and
    returns (loss, grads) with grads keyed like `params`.  The relative
    error uses a small floor in the denominator so finite-difference noise
    on near-zero gradients does not register as failure.
    """
    loss, analytic = loss_fn()
    if not np.isfinite(loss):
        raise ValueError(f"loss is not finite: {loss}")

    max_rel = 0.0
    worst = ("", ())
    n_checked = 0
    per_param: dict[str, float] = {}
    for name, p in params.items():
        a = analytic.get(name)
        if a is None:
            continue
        indices = list(np.ndindex(p.shape))
        if max_entries_per_param is not None and len(indices) > max_entries_per_param:
            picker = rng if rng is not None else np.random.default_rng(0)
            chosen = picker.choice(len(indices), size=max_entries_per_param, replace=False)
            indices = [indices[i] for i in chosen]
        param_max = 0.0
        for idx in indices:
            orig = p[idx]
            p[idx] = orig + step
            loss_plus, _ = loss_fn()
            p[idx] = orig - step
            loss_minus, _ = loss_fn()
            p[idx] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            rel = abs(a[idx] - numeric) / max(abs(a[idx]), abs(numeric), 1e-4)
            param_max = max(param_max, rel)
            n_checked += 1
            if rel > max_rel:
                max_rel = rel
                worst = (name, idx)
        per_param[name] = param_max
    return GradCheckReport(max_rel, max_rel <= tolerance, worst[0], worst[1], n_checked, per_param)


def merge_grads(*grad_dicts: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Sum gradient dicts, accumulating shared keys."""
    out: dict[str, np.ndarray] = {}
    for grads in grad_dicts:
        for name, g in grads.items():
            if name in out:
                out[name] = out[name] + g
            else:
                out[name] = g
    return out
