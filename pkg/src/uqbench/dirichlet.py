"""Dirichlet-based uncertainty heads: evidential loss and prior-network loss.

Concentration parameters are handled as arrays: a single vector (K,) or a
batch (n, K). Loss functions return the batch-mean loss together with the
gradient of that mean, so they compose directly with the training step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ClampSaturationWarning, ConfigError, DomainError
from .special import digamma, lgamma, trigamma

ALPHA_CLAMP_LO = 1e-6
ALPHA_CLAMP_HI = 1e6
_LOG_CLAMP_LO = np.log(ALPHA_CLAMP_LO)
_LOG_CLAMP_HI = np.log(ALPHA_CLAMP_HI)


@dataclass(frozen=True)
class DirichletParams:
    """Positive concentration vector with the derived evidential quantities.

    evidence = alpha - 1, precision = sum(alpha), belief = evidence/precision,
    u_mass = K/precision; u_mass + sum(belief) == 1 holds by construction.
    """

    alpha: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.alpha, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("alpha must be a vector of length >= 2")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise DomainError("alpha entries must be positive and finite")
        object.__setattr__(self, "alpha", arr)

    @property
    def num_classes(self) -> int:
        return self.alpha.size

    @property
    def precision(self) -> float:
        return float(self.alpha.sum())

    @property
    def evidence(self) -> np.ndarray:
        return self.alpha - 1.0

    @property
    def belief(self) -> np.ndarray:
        return self.evidence / self.precision

    @property
    def u_mass(self) -> float:
        return self.num_classes / self.precision

    @property
    def expected_probs(self) -> np.ndarray:
        return self.alpha / self.precision


def _as_alpha(a, name: str = "alpha") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} entries must be positive and finite")
    return arr


def softplus(x: np.ndarray) -> np.ndarray:
    """log(1 + exp(x)), overflow-safe."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def edl_transform(logits: np.ndarray, activation: str = "softplus") -> np.ndarray:
    """Evidence-based concentrations: alpha = act(logits) + 1.

    softplus keeps a nonzero gradient everywhere; relu is available for
    fidelity experiments.
    """
    z = np.asarray(logits, dtype=float)
    if activation == "softplus":
        return softplus(z) + 1.0
    if activation == "relu":
        return np.maximum(z, 0.0) + 1.0
    raise ConfigError(f"unknown evidence activation {activation!r}")


def dirichlet_kl(alpha, beta):
    """Closed-form KL(Dir(alpha) || Dir(beta)), batched over leading axis.

    Returns a float for vector inputs, an array of per-row values for
    (n, K) inputs. Result is clamped at 0 against rounding.
    """
    a = _as_alpha(alpha, "alpha")
    b = _as_alpha(beta, "beta")
    if a.shape[-1] != b.shape[-1]:
        raise DomainError("alpha and beta must have the same length")
    scalar = a.ndim == 1 and b.ndim == 1
    a2, b2 = np.broadcast_arrays(np.atleast_2d(a), np.atleast_2d(b))
    sa = a2.sum(axis=1)
    sb = b2.sum(axis=1)
    kl = (
        np.asarray(lgamma(sa))
        - np.asarray(lgamma(sb))
        + np.sum(lgamma(b2) - lgamma(a2), axis=1)
        + np.sum((a2 - b2) * (digamma(a2) - np.asarray(digamma(sa))[:, None]), axis=1)
    )
    kl = np.maximum(kl, 0.0)
    return float(kl[0]) if scalar else kl


def _one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if np.any(labels < 0) or np.any(labels >= num_classes):
        raise DomainError(f"labels must lie in [0, {num_classes})")
    out = np.zeros((labels.size, num_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def anneal_coefficient(epoch: int, anneal_epochs: int) -> float:
    """Regularizer weight min(1, epoch/anneal_epochs); epoch is 0-based."""
    if anneal_epochs <= 0:
        return 1.0
    return min(1.0, epoch / anneal_epochs)


def edl_loss(alpha, labels, epoch: int = 0, anneal_epochs: int = 10):
    """Evidential loss: expected squared error + variance + annealed KL.

    Per sample, with p = alpha/S and y one-hot:
        sum_k (y_k - p_k)^2 + p_k (1 - p_k) / (S + 1)
        + lambda * KL(Dir(alpha with true class replaced by 1) || Dir(1))
    where lambda = min(1, epoch / anneal_epochs).

    Returns (mean loss, gradient of the mean w.r.t. alpha).
    """
    a = np.atleast_2d(_as_alpha(alpha))
    n, k = a.shape
    y = _one_hot(labels, k)
    s = a.sum(axis=1, keepdims=True)
    p = a / s
    lam = anneal_coefficient(epoch, anneal_epochs)

    q = np.sum(p * p, axis=1, keepdims=True)
    err = np.sum((y - p) ** 2, axis=1)
    var = ((1.0 - q) / (s + 1.0))[:, 0]

    # alpha with the true-class component pinned to 1
    a_tilde = a * (1.0 - y) + y
    ones = np.ones_like(a_tilde)
    kl = dirichlet_kl(a_tilde, ones)

    loss = float(np.mean(err + var + lam * kl))

    # gradient of the per-sample loss w.r.t. alpha
    inner = np.sum((p - y) * p, axis=1, keepdims=True)
    g_err = (2.0 / s) * ((p - y) - inner)
    g_var = -(2.0 / s) * (p - q) / (s + 1.0) - (1.0 - q) / (s + 1.0) ** 2
    s_tilde = a_tilde.sum(axis=1, keepdims=True)
    g_kl = (a_tilde - 1.0) * trigamma(a_tilde) - (s_tilde - k) * trigamma(s_tilde)
    g_kl = g_kl * (1.0 - y)  # pinned component does not move with alpha
    grad = (g_err + g_var + lam * g_kl) / n
    if np.ndim(alpha) == 1:
        grad = grad[0]
    return loss, grad


def edl_logit_loss(logits, labels, epoch: int = 0, anneal_epochs: int = 10, activation: str = "softplus"):
    """Evidential loss as a function of logits (for the training step)."""
    z = np.asarray(logits, dtype=float)
    alpha = edl_transform(z, activation)
    loss, dalpha = edl_loss(alpha, labels, epoch, anneal_epochs)
    if activation == "softplus":
        dalpha_dz = 1.0 / (1.0 + np.exp(-z))  # sigmoid
    else:
        dalpha_dz = (z > 0.0).astype(float)
    return loss, dalpha * dalpha_dz


def pn_target(label: int | None, num_classes: int, concentration: float = 100.0) -> np.ndarray:
    """Dirichlet target: sharp toward ``label``, flat all-ones for OOD (None)."""
    if num_classes < 2:
        raise ConfigError("num_classes must be >= 2")
    if concentration <= 0:
        raise ConfigError("concentration must be > 0")
    alpha = np.ones(num_classes)
    if label is not None:
        if not 0 <= label < num_classes:
            raise DomainError(f"label {label} outside [0, {num_classes})")
        alpha[label] += concentration
    return alpha


def pn_targets(labels, num_classes: int, concentration: float = 100.0, ood_mask=None) -> np.ndarray:
    """Batch of targets; rows with ``ood_mask`` True get the flat target."""
    labels = np.asarray(labels, dtype=int)
    out = np.ones((labels.size, num_classes))
    if ood_mask is None:
        ood_mask = np.zeros(labels.size, dtype=bool)
    ood_mask = np.asarray(ood_mask, dtype=bool)
    in_rows = ~ood_mask
    if np.any((labels[in_rows] < 0) | (labels[in_rows] >= num_classes)):
        raise DomainError(f"labels must lie in [0, {num_classes})")
    out[np.arange(labels.size)[in_rows], labels[in_rows]] += concentration
    return out


def pn_transform(logits, warn: bool = True):
    """Concentrations alpha = exp(logits), clamped to [1e-6, 1e6].

    Emits ClampSaturationWarning when more than 1% of the entries in a
    batch saturate the clamp.
    """
    z = np.asarray(logits, dtype=float)
    alpha = np.clip(np.exp(np.clip(z, _LOG_CLAMP_LO, _LOG_CLAMP_HI)), ALPHA_CLAMP_LO, ALPHA_CLAMP_HI)
    if warn:
        frac = float(np.mean((z <= _LOG_CLAMP_LO) | (z >= _LOG_CLAMP_HI)))
        if frac > 0.01:
            warnings.warn(
                f"{frac:.1%} of concentration entries hit the clamp bounds",
                ClampSaturationWarning,
                stacklevel=2,
            )
    return alpha


def pn_loss(alpha_pred, alpha_target, direction: str = "target-to-pred"):
    """KL loss between predicted and target Dirichlet parameters.

    The default direction KL(target || predicted) matches the forward
    formulation; "pred-to-target" gives the reverse. Returns
    (mean loss, gradient of the mean w.r.t. alpha_pred).
    """
    p = np.atleast_2d(_as_alpha(alpha_pred, "alpha_pred"))
    t = np.atleast_2d(_as_alpha(alpha_target, "alpha_target"))
    if p.shape != t.shape:
        raise DomainError("alpha_pred and alpha_target must have the same shape")
    n, k = p.shape
    sp = p.sum(axis=1, keepdims=True)
    st = t.sum(axis=1, keepdims=True)
    if direction == "target-to-pred":
        kl = dirichlet_kl(t, p)
        grad = (digamma(p) - digamma(sp) - (digamma(t) - digamma(st))) / n
    elif direction == "pred-to-target":
        kl = dirichlet_kl(p, t)
        grad = ((p - t) * trigamma(p) - (sp - st) * trigamma(sp)) / n
    else:
        raise ConfigError(f"unknown KL direction {direction!r}")
    loss = float(np.mean(kl))
    if np.ndim(alpha_pred) == 1:
        grad = grad[0]
    return loss, grad


def pn_logit_loss(logits, alpha_target, direction: str = "target-to-pred", warn: bool = True):
    """Prior-network loss as a function of logits (for the training step)."""
    z = np.asarray(logits, dtype=float)
    alpha = pn_transform(z, warn=warn)
    loss, dalpha = pn_loss(alpha, alpha_target, direction)
    inside = (z > _LOG_CLAMP_LO) & (z < _LOG_CLAMP_HI)
    return loss, dalpha * np.where(inside, alpha, 0.0)


def dirichlet_scores(alpha):
    """(predictive entropy of alpha/S, precision S); batched over rows."""
    a = np.asarray(alpha, dtype=float)
    _as_alpha(a)
    s = a.sum(axis=-1)
    p = a / s[..., None]
    ent = -np.sum(np.where(p > 0.0, p * np.log(p), 0.0), axis=-1)
    if a.ndim == 1:
        return float(ent), float(s)
    return ent, s
