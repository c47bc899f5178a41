"""The four uncertainty tests plus the SNR corruption sweep.

Each test takes a trained model, a head name, and datasets, and returns
plain result objects; artifact writing lives in the pipeline layer. Wrong
and OOD groups are the "positive" (higher-uncertainty) side of every
AUROC. Group means that would be empty are reported as absent, never zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import heads
from .data import Dataset, mix_batch_at_snr
from .exceptions import ConfigError, MetricError
from .metrics import CdfCurve, accuracy, auroc, empirical_cdf, pcc, uar
from .nn import MLPModel
from .rng import RngStream

CI_Z = 1.96  # normal-approximation 95% interval


@dataclass
class CorrectnessResult:
    records: list
    curves: list[CdfCurve]            # correct / wrong groups that exist
    auroc_misclassification: float | None
    uar: float
    accuracy: float


@dataclass
class OodDomainResult:
    curves: list[CdfCurve]            # "in" plus one per OOD kind
    auroc_by_kind: dict[str, float]
    auroc_pooled: float | None


@dataclass
class SnrPoint:
    snr_db: float
    uar: float
    mean_unc_correct: float | None
    ci95_correct: float | None
    mean_unc_wrong: float | None
    ci95_wrong: float | None


@dataclass
class EvalSummary:
    """Everything reported for one head; absent tests stay None."""

    head: str
    label: str
    uar: float | None = None
    accuracy: float | None = None
    auroc_misclassification: float | None = None
    auroc_ood: float | None = None
    auroc_ood_by_kind: dict[str, float] | None = None
    pcc_agreement: float | None = None
    mean_uncertainty_in: float | None = None
    mean_uncertainty_out: float | None = None
    out_in_ratio: float | None = None
    per_snr: list[SnrPoint] | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "head": self.head,
            "label": self.label,
            "uar": self.uar,
            "accuracy": self.accuracy,
            "auroc_misclassification": self.auroc_misclassification,
            "auroc_ood": self.auroc_ood,
            "auroc_ood_by_kind": self.auroc_ood_by_kind,
            "pcc_agreement": self.pcc_agreement,
            "mean_uncertainty_in": self.mean_uncertainty_in,
            "mean_uncertainty_out": self.mean_uncertainty_out,
            "out_in_ratio": self.out_in_ratio,
            "per_snr": None
            if self.per_snr is None
            else [
                {
                    "snr_db": p.snr_db,
                    "uar": p.uar,
                    "mean_unc_correct": p.mean_unc_correct,
                    "ci95_correct": p.ci95_correct,
                    "mean_unc_wrong": p.mean_unc_wrong,
                    "ci95_wrong": p.ci95_wrong,
                }
                for p in self.per_snr
            ],
            "metadata": self.metadata,
        }
        return doc


def _score(model: MLPModel, x, head: str, mc_passes: int, rng: RngStream | None) -> heads.HeadScores:
    return heads.score_head(model, x, head, mc_passes=mc_passes, rng=rng)


def run_correctness_test(
    model: MLPModel,
    head: str,
    dataset: Dataset,
    mc_passes: int = 20,
    rng: RngStream | None = None,
) -> CorrectnessResult:
    """Uncertainty separation between correct and wrong predictions."""
    scores = _score(model, dataset.features, head, mc_passes, rng)
    correct = scores.predicted == dataset.labels
    unc = scores.entropy_nats
    curves = []
    if np.any(correct):
        curves.append(empirical_cdf(unc[correct], "correct"))
    if np.any(~correct):
        curves.append(empirical_cdf(unc[~correct], "wrong"))
    score_auroc = None
    if np.any(correct) and np.any(~correct):
        score_auroc = auroc(unc[~correct], unc[correct])
    return CorrectnessResult(
        records=scores.records(dataset.ids, dataset.labels),
        curves=curves,
        auroc_misclassification=score_auroc,
        uar=uar(scores.predicted, dataset.labels, model.num_classes),
        accuracy=accuracy(scores.predicted, dataset.labels),
    )


def run_rater_test(
    model: MLPModel,
    head: str,
    dataset: Dataset,
    mc_passes: int = 20,
    rng: RngStream | None = None,
) -> float | None:
    """PCC between per-sample uncertainty and rater agreement.

    Returns None (undefined) when agreement has zero variance.
    """
    if dataset.agreement is None:
        raise ConfigError("rater test needs a dataset with rater votes")
    scores = _score(model, dataset.features, head, mc_passes, rng)
    try:
        return pcc(scores.entropy_nats, dataset.agreement)
    except MetricError:
        return None


def run_unknown_class_test(
    model: MLPModel,
    head: str,
    in_dataset: Dataset,
    heldout_dataset: Dataset,
    mc_passes: int = 20,
    rng: RngStream | None = None,
) -> tuple[float, float, float]:
    """(mean uncertainty in, mean uncertainty out, out/in ratio)."""
    if len(in_dataset) == 0 or len(heldout_dataset) == 0:
        raise ConfigError("unknown-class test needs nonempty groups")
    rng_in = None if rng is None else rng.child(0)
    rng_out = None if rng is None else rng.child(1)
    unc_in = _score(model, in_dataset.features, head, mc_passes, rng_in).entropy_nats
    unc_out = _score(model, heldout_dataset.features, head, mc_passes, rng_out).entropy_nats
    mean_in = float(unc_in.mean())
    mean_out = float(unc_out.mean())
    ratio = math.inf if mean_in == 0.0 else mean_out / mean_in
    return mean_in, mean_out, ratio


def run_ood_domain_test(
    model: MLPModel,
    head: str,
    in_dataset: Dataset,
    ood_sets: dict[str, Dataset],
    mc_passes: int = 20,
    rng: RngStream | None = None,
) -> OodDomainResult:
    """CDF per dataset and AUROC(ood vs in) per OOD kind."""
    if not ood_sets or any(len(ds) == 0 for ds in ood_sets.values()):
        raise ConfigError("ood-domain test needs nonempty OOD sets")
    rng_in = None if rng is None else rng.child(0)
    unc_in = _score(model, in_dataset.features, head, mc_passes, rng_in).entropy_nats
    curves = [empirical_cdf(unc_in, "in")]
    auroc_by_kind: dict[str, float] = {}
    pooled: list[np.ndarray] = []
    for i, (kind, ds) in enumerate(sorted(ood_sets.items())):
        rng_k = None if rng is None else rng.child(i + 1)
        unc_ood = _score(model, ds.features, head, mc_passes, rng_k).entropy_nats
        curves.append(empirical_cdf(unc_ood, f"ood:{kind}"))
        auroc_by_kind[kind] = auroc(unc_ood, unc_in)
        pooled.append(unc_ood)
    auroc_pooled = auroc(np.concatenate(pooled), unc_in)
    return OodDomainResult(curves=curves, auroc_by_kind=auroc_by_kind, auroc_pooled=auroc_pooled)


def _group_stats(values: np.ndarray) -> tuple[float | None, float | None]:
    if values.size == 0:
        return None, None
    mean = float(values.mean())
    if values.size < 2:
        return mean, None
    ci = CI_Z * float(values.std(ddof=1)) / math.sqrt(values.size)
    return mean, ci


def run_snr_sweep(
    model: MLPModel,
    head: str,
    dataset: Dataset,
    snr_grid_db,
    rng: RngStream,
    repeats: int = 1,
    mc_passes: int = 20,
) -> list[SnrPoint]:
    """Evaluate under additive noise at each SNR on the grid.

    Each (grid point, repeat) owns a derived noise stream, so the table is
    deterministic and points could run concurrently. ``math.inf`` acts as
    the no-corruption sentinel. Repeats pool their per-sample records.
    """
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    grid = list(snr_grid_db)
    if not grid:
        raise ConfigError("snr grid must be nonempty")
    points = []
    for si, snr_db in enumerate(grid):
        preds, uncs = [], []
        for rep in range(repeats):
            point_key = 1000 * si + rep
            noise_rng = rng.child(2 * point_key)
            if math.isinf(snr_db):
                corrupted = dataset.features
            else:
                corrupted = mix_batch_at_snr(dataset.features, float(snr_db), noise_rng)
            mc_rng = rng.child(2 * point_key + 1)
            scores = _score(model, corrupted, head, mc_passes, mc_rng)
            preds.append(scores.predicted)
            uncs.append(scores.entropy_nats)
        preds_all = np.concatenate(preds)
        uncs_all = np.concatenate(uncs)
        labels_all = np.tile(dataset.labels, repeats)
        correct = preds_all == labels_all
        mean_c, ci_c = _group_stats(uncs_all[correct])
        mean_w, ci_w = _group_stats(uncs_all[~correct])
        points.append(
            SnrPoint(
                snr_db=float(snr_db),
                uar=uar(preds_all, labels_all, model.num_classes),
                mean_unc_correct=mean_c,
                ci95_correct=ci_c,
                mean_unc_wrong=mean_w,
                ci95_wrong=ci_w,
            )
        )
    return points
