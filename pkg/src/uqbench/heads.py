"""Per-sample uncertainty scores for the four quantification methods.

Heads are identified by the strings in ``HEADS``; the entropy of the
(mean or expected) categorical distribution, in nats, is the score every
head reports for cross-head comparisons. Head-specific extras (MC output
variance, Dirichlet precision, uncertainty mass) ride along in the record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dirichlet, nn
from .exceptions import ConfigError, ShapeError
from .rng import RngStream

HEADS = ("ce-entropy", "mc-dropout", "edl", "pn-in", "pn-out")

# Display labels used in every report, CSV, and plot legend.
HEAD_LABELS = {
    "ce-entropy": "CE",
    "mc-dropout": "MC",
    "edl": "EDL",
    "pn-in": "PN(in)",
    "pn-out": "PN(out)",
}

# Which trained model serves which head (CE and MC share one model).
HEAD_MODEL = {
    "ce-entropy": "ce",
    "mc-dropout": "ce",
    "edl": "edl",
    "pn-in": "pn-in",
    "pn-out": "pn-out",
}

_HEAD_KIND_FOR_MODEL = {"ce": "softmax-ce", "edl": "edl", "pn-in": "prior-net", "pn-out": "prior-net"}


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax over the last axis."""
    z = np.asarray(logits, dtype=float)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def entropy(probs: np.ndarray) -> np.ndarray | float:
    """Shannon entropy in nats over the last axis; 0*log(0) counts as 0."""
    p = np.asarray(probs, dtype=float)
    h = -np.sum(np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0), axis=-1)
    return float(h) if p.ndim == 1 else h


def weighted_ce_loss(logits, labels, class_weights=None):
    """Weighted cross-entropy over a batch of logits.

    Per sample: loss = -w_y * log softmax(logits)_y with gradient
    w_y * (softmax(logits) - onehot(y)). Returns the batch mean and the
    gradient of that mean.
    """
    z = np.atleast_2d(np.asarray(logits, dtype=float))
    labels = np.atleast_1d(np.asarray(labels, dtype=int))
    n, k = z.shape
    if np.any(labels < 0) or np.any(labels >= k):
        raise ConfigError(f"labels must lie in [0, {k})")
    if class_weights is None:
        w = np.ones(k)
    else:
        w = np.asarray(class_weights, dtype=float)
        if w.shape != (k,):
            raise ShapeError(f"class_weights must have length {k}")
        if np.any(w <= 0):
            raise ConfigError("class_weights must be positive")
    shifted = z - np.max(z, axis=1, keepdims=True)
    log_probs = shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
    wy = w[labels]
    loss = float(np.mean(-wy * log_probs[np.arange(n), labels]))
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    grad *= wy[:, None] / n
    if np.ndim(logits) == 1:
        grad = grad[0]
    return loss, grad


@dataclass
class McDropoutResult:
    mean: np.ndarray                 # (n, K) average softmax output
    per_class_variance: np.ndarray   # (n, K) population variance per class
    entropy_of_mean: np.ndarray      # (n,)
    variance_score: np.ndarray       # (n,) mean of per-class variances


def mc_dropout_predict(model: nn.MLPModel, x: np.ndarray, passes: int = 20, rng: RngStream | None = None) -> McDropoutResult:
    """Average of ``passes`` stochastic forward passes with dropout active.

    Deterministic given the supplied stream. With dropout_rate 0 the
    variance is exactly 0 and the mean equals the deterministic softmax.
    """
    if passes < 2:
        raise ConfigError(f"mc_dropout_predict needs passes >= 2, got {passes}")
    if rng is None:
        rng = RngStream(0)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if model.dropout_rate == 0.0:
        # every pass is identical: mean is one pass, variance exactly 0
        mean = softmax(nn.forward(model, x))
        var = np.zeros_like(mean)
        return McDropoutResult(
            mean=mean,
            per_class_variance=var,
            entropy_of_mean=np.asarray(entropy(mean)),
            variance_score=var.mean(axis=1),
        )
    outputs = np.stack([softmax(nn.forward(model, x, rng=rng)) for _ in range(passes)])
    mean = outputs.mean(axis=0)
    var = np.mean((outputs - mean) ** 2, axis=0)
    return McDropoutResult(
        mean=mean,
        per_class_variance=var,
        entropy_of_mean=np.asarray(entropy(mean)),
        variance_score=var.mean(axis=1),
    )


@dataclass
class UncertaintyRecord:
    """Scores for one sample; only the fields defined for the head are set."""

    sample_id: int
    predicted_class: int
    correct: bool | None
    entropy_nats: float
    mc_variance: float | None = None
    precision: float | None = None
    u_mass: float | None = None


@dataclass
class HeadScores:
    """Vectorized per-sample scores for one head over one feature matrix."""

    head: str
    predicted: np.ndarray
    entropy_nats: np.ndarray
    mc_variance: np.ndarray | None = None
    precision: np.ndarray | None = None
    u_mass: np.ndarray | None = None

    def records(self, sample_ids, labels=None) -> list[UncertaintyRecord]:
        ids = np.asarray(sample_ids)
        correct = None if labels is None else (self.predicted == np.asarray(labels))
        out = []
        for i in range(len(ids)):
            out.append(
                UncertaintyRecord(
                    sample_id=int(ids[i]),
                    predicted_class=int(self.predicted[i]),
                    correct=None if correct is None else bool(correct[i]),
                    entropy_nats=float(self.entropy_nats[i]),
                    mc_variance=None if self.mc_variance is None else float(self.mc_variance[i]),
                    precision=None if self.precision is None else float(self.precision[i]),
                    u_mass=None if self.u_mass is None else float(self.u_mass[i]),
                )
            )
        return out


def score_head(
    model: nn.MLPModel,
    x: np.ndarray,
    head: str,
    mc_passes: int = 20,
    rng: RngStream | None = None,
    edl_activation: str = "softplus",
) -> HeadScores:
    """Predicted class plus uncertainty scores for every row of ``x``."""
    if head not in HEADS:
        raise ConfigError(f"unknown head {head!r}")
    expected_kind = _HEAD_KIND_FOR_MODEL[HEAD_MODEL[head]]
    if model.head_kind != expected_kind:
        raise ConfigError(f"head {head!r} needs a {expected_kind!r} model, got {model.head_kind!r}")
    x = np.atleast_2d(np.asarray(x, dtype=float))

    if head == "mc-dropout":
        res = mc_dropout_predict(model, x, passes=mc_passes, rng=rng)
        return HeadScores(
            head=head,
            predicted=np.argmax(res.mean, axis=1),
            entropy_nats=res.entropy_of_mean,
            mc_variance=res.variance_score,
        )

    logits = nn.forward(model, x)
    if head == "ce-entropy":
        probs = softmax(logits)
        return HeadScores(
            head=head,
            predicted=np.argmax(probs, axis=1),
            entropy_nats=np.asarray(entropy(probs)),
        )
    if head == "edl":
        alpha = dirichlet.edl_transform(logits, activation=edl_activation)
        ent, precision = dirichlet.dirichlet_scores(alpha)
        k = alpha.shape[-1]
        return HeadScores(
            head=head,
            predicted=np.argmax(alpha, axis=1),
            entropy_nats=ent,
            precision=precision,
            u_mass=k / precision,
        )
    # pn-in / pn-out
    alpha = dirichlet.pn_transform(logits, warn=False)
    ent, precision = dirichlet.dirichlet_scores(alpha)
    return HeadScores(
        head=head,
        predicted=np.argmax(alpha, axis=1),
        entropy_nats=ent,
        precision=precision,
    )
