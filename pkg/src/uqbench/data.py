"""Synthetic classification data with simulated raters and OOD generators.

Feature vectors are abstract (no audio front end): class clusters are unit
Gaussians around mutually equidistant means, corruption is SNR-exact
additive noise in feature space, and "domain OOD" comes in three kinds
(uniform box, far shifted cluster, white-noise ramp). Everything is a pure
function of (config, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, CsvFormatError, DomainError
from .jsonio import dumps_canonical, format_float, read_json, sha256_hex, write_text_atomic
from .rng import RngStream

OOD_KINDS = ("uniform-box", "shifted-cluster", "white-noise-ramp")
WHITE_NOISE_RAMP_DEFAULT_N = 45

DEFAULT_CLASS_PRIORS = (0.60, 0.26, 0.08, 0.06)


@dataclass(frozen=True)
class SyntheticConfig:
    num_classes: int = 4
    feature_dim: int = 8
    class_priors: tuple[float, ...] = DEFAULT_CLASS_PRIORS
    cluster_separation: float = 3.0
    ambiguity_temperature: float = 1.0
    raters_per_sample: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        if self.feature_dim < self.num_classes:
            raise ConfigError("feature_dim must be >= num_classes (simplex construction)")
        priors = tuple(float(p) for p in self.class_priors)
        if len(priors) != self.num_classes:
            raise ConfigError("class_priors length must equal num_classes")
        if any(p <= 0 for p in priors) or abs(sum(priors) - 1.0) > 1e-9:
            raise ConfigError("class_priors must be positive and sum to 1")
        if self.cluster_separation <= 0:
            raise ConfigError("cluster_separation must be > 0")
        if self.ambiguity_temperature <= 0:
            raise ConfigError("ambiguity_temperature must be > 0")
        if self.raters_per_sample < 2:
            raise ConfigError("raters_per_sample must be >= 2")
        object.__setattr__(self, "class_priors", priors)

    def class_means(self) -> np.ndarray:
        """(K, d) means on the first K axes, pairwise distance = separation."""
        means = np.zeros((self.num_classes, self.feature_dim))
        scale = self.cluster_separation / np.sqrt(2.0)
        means[np.arange(self.num_classes), np.arange(self.num_classes)] = scale
        return means

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "feature_dim": self.feature_dim,
            "class_priors": [float(p) for p in self.class_priors],
            "cluster_separation": float(self.cluster_separation),
            "ambiguity_temperature": float(self.ambiguity_temperature),
            "raters_per_sample": self.raters_per_sample,
            "seed": self.seed,
        }

    def content_hash(self) -> str:
        return sha256_hex(dumps_canonical(self.to_dict()))[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticConfig":
        return cls(
            num_classes=data["num_classes"],
            feature_dim=data["feature_dim"],
            class_priors=tuple(data["class_priors"]),
            cluster_separation=data["cluster_separation"],
            ambiguity_temperature=data["ambiguity_temperature"],
            raters_per_sample=data["raters_per_sample"],
            seed=data["seed"],
        )


@dataclass(frozen=True)
class Sample:
    id: int
    features: np.ndarray
    true_label: int
    rater_votes: np.ndarray | None
    domain_tag: str


@dataclass
class Dataset:
    """Column-array storage; ``sample(i)`` gives the per-row view."""

    ids: np.ndarray
    features: np.ndarray
    labels: np.ndarray            # -1 marks samples without a class label
    domain_tags: np.ndarray       # per-sample tag strings
    split: str
    provenance: str
    votes: np.ndarray | None = None       # (n, R)
    agreement: np.ndarray | None = None   # (n,)
    label_map: dict[int, int] | None = field(default=None)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(
            id=int(self.ids[i]),
            features=self.features[i],
            true_label=int(self.labels[i]),
            rater_votes=None if self.votes is None else self.votes[i],
            domain_tag=str(self.domain_tags[i]),
        )

    def subset(self, index: np.ndarray, split: str | None = None) -> "Dataset":
        return Dataset(
            ids=self.ids[index],
            features=self.features[index],
            labels=self.labels[index],
            domain_tags=self.domain_tags[index],
            split=self.split if split is None else split,
            provenance=self.provenance,
            votes=None if self.votes is None else self.votes[index],
            agreement=None if self.agreement is None else self.agreement[index],
            label_map=self.label_map,
        )


def rater_vote_probs(features: np.ndarray, config: SyntheticConfig) -> np.ndarray:
    """Softmax of negative distances to class means over temperature."""
    means = config.class_means()
    dists = np.linalg.norm(features[:, None, :] - means[None, :, :], axis=2)
    scaled = -dists / config.ambiguity_temperature
    shifted = scaled - scaled.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _draw_votes(probs: np.ndarray, raters: int, rng: RngStream) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    u = rng.random((probs.shape[0], raters))
    return (u[:, :, None] > cum[:, None, :]).sum(axis=2).astype(int)


def _vote_agreement(votes: np.ndarray, num_classes: int) -> np.ndarray:
    counts = np.zeros((votes.shape[0], num_classes), dtype=int)
    for k in range(num_classes):
        counts[:, k] = (votes == k).sum(axis=1)
    return counts.max(axis=1) / votes.shape[1]


def simulate_raters(features: np.ndarray, config: SyntheticConfig, rng: RngStream) -> np.ndarray:
    """Per-sample rater votes, shape (n, R).

    Each rater draws independently from the distance softmax; the per-sample
    agreement is the majority share of the votes.
    """
    probs = rater_vote_probs(np.atleast_2d(features), config)
    return _draw_votes(probs, config.raters_per_sample, rng)


def generate_clusters(config: SyntheticConfig, n: int, rng: RngStream | None = None, split: str = "all", id_offset: int = 0) -> Dataset:
    """Gaussian class clusters with rater votes; deterministic given seed."""
    if n < config.num_classes:
        raise ConfigError(f"n={n} must be >= num_classes={config.num_classes}")
    if rng is None:
        rng = RngStream(config.seed)
    means = config.class_means()
    labels = rng.choice(config.num_classes, size=n, p=np.array(config.class_priors))
    labels = np.asarray(labels, dtype=int)
    features = means[labels] + rng.standard_normal((n, config.feature_dim))
    votes = simulate_raters(features, config, rng)
    agreement = _vote_agreement(votes, config.num_classes)
    return Dataset(
        ids=np.arange(id_offset, id_offset + n),
        features=features,
        labels=labels,
        domain_tags=np.array(["in-dist"] * n, dtype=object),
        split=split,
        provenance=config.content_hash(),
        votes=votes,
        agreement=agreement,
    )


def split_dataset(dataset: Dataset, sizes: dict[str, int]) -> dict[str, Dataset]:
    """Partition into named splits; sizes must sum to the dataset length."""
    total = sum(sizes.values())
    if total != len(dataset):
        raise ConfigError(f"split sizes sum to {total}, dataset has {len(dataset)}")
    out = {}
    start = 0
    for tag, size in sizes.items():
        out[tag] = dataset.subset(np.arange(start, start + size), split=tag)
        start += size
    return out


def holdout_class_split(dataset: Dataset, heldout: set[int]) -> tuple[Dataset, Dataset]:
    """Separate held-out classes; in-distribution labels become dense.

    The returned in-distribution dataset carries ``label_map`` (old -> new);
    held-out samples keep their original labels and are tagged
    ``heldout-class``.
    """
    heldout = set(int(c) for c in heldout)
    present = set(int(c) for c in np.unique(dataset.labels) if c >= 0)
    if not heldout:
        raise ConfigError("heldout set must be nonempty")
    if not heldout < present:
        raise ConfigError(f"heldout classes {sorted(heldout)} must be a proper subset of {sorted(present)}")
    is_out = np.isin(dataset.labels, sorted(heldout))
    in_ds = dataset.subset(np.flatnonzero(~is_out))
    out_ds = dataset.subset(np.flatnonzero(is_out))
    mapping = {old: new for new, old in enumerate(sorted(present - heldout))}
    in_ds.labels = np.array([mapping[int(c)] for c in in_ds.labels], dtype=int)
    in_ds.label_map = mapping
    out_ds.domain_tags = np.array(["heldout-class"] * len(out_ds), dtype=object)
    return in_ds, out_ds


def generate_ood_domain(
    kind: str,
    n: int,
    dim: int,
    rng: RngStream,
    class_means: np.ndarray | None = None,
    separation: float | None = None,
    box_margin: float = 1.0,
    provenance: str = "",
    id_offset: int = 0,
) -> Dataset:
    """Samples that belong to no class, tagged ``ood-domain:<kind>``.

    uniform-box needs ``class_means`` (box encloses and exceeds the
    in-distribution support); shifted-cluster needs ``class_means`` and
    ``separation`` (center at least 5x separation away from every mean);
    white-noise-ramp is zero-mean Gaussian with standard deviation rising
    geometrically from 1e-3 to 1e1.
    """
    if kind not in OOD_KINDS:
        raise ConfigError(f"unknown OOD kind {kind!r}")
    if n < 1:
        raise ConfigError("n must be >= 1")
    if kind == "uniform-box":
        if class_means is None:
            raise ConfigError("uniform-box needs class_means")
        lo = class_means.min(axis=0) - 4.0
        hi = class_means.max(axis=0) + 4.0
        span = hi - lo
        features = rng.uniform(lo - box_margin * span, hi + box_margin * span, size=(n, dim))
    elif kind == "shifted-cluster":
        if class_means is None or separation is None:
            raise ConfigError("shifted-cluster needs class_means and separation")
        centroid = class_means.mean(axis=0)
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        radius = 5.0 * separation + float(np.max(np.linalg.norm(class_means - centroid, axis=1)))
        center = centroid + direction * radius
        features = center + rng.standard_normal((n, dim))
    else:  # white-noise-ramp
        sigmas = np.geomspace(1e-3, 1e1, n)
        features = rng.standard_normal((n, dim)) * sigmas[:, None]
    return Dataset(
        ids=np.arange(id_offset, id_offset + n),
        features=features,
        labels=np.full(n, -1, dtype=int),
        domain_tags=np.array([f"ood-domain:{kind}"] * n, dtype=object),
        split="ood",
        provenance=provenance,
    )


def mix_at_snr(signal: np.ndarray, snr_db: float, noise: np.ndarray | None = None, rng: RngStream | None = None) -> np.ndarray:
    """Add noise scaled so the output hits the target SNR exactly.

    gain = sqrt(P_signal / (P_noise * 10^(snr_db/10))) with P the mean of
    squares; the achieved SNR matches the target to well under 1e-9 dB.
    """
    signal = np.asarray(signal, dtype=float)
    p_signal = float(np.mean(signal * signal))
    if p_signal <= 0.0:
        raise DomainError("signal has zero power")
    if noise is None:
        if rng is None:
            raise ConfigError("mix_at_snr needs a noise vector or an rng")
        noise = rng.standard_normal(signal.shape)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != signal.shape:
        raise DomainError("noise must match the signal shape")
    p_noise = float(np.mean(noise * noise))
    if p_noise <= 0.0:
        raise DomainError("noise has zero power")
    gain = np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    return signal + gain * noise


def mix_batch_at_snr(features: np.ndarray, snr_db: float, rng: RngStream) -> np.ndarray:
    """Row-wise ``mix_at_snr`` with fresh Gaussian noise per row."""
    x = np.asarray(features, dtype=float)
    noise = rng.standard_normal(x.shape)
    p_signal = np.mean(x * x, axis=1)
    if np.any(p_signal <= 0.0):
        raise DomainError("a sample has zero power")
    p_noise = np.mean(noise * noise, axis=1)
    gain = np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    return x + gain[:, None] * noise


def class_weights(labels: np.ndarray, num_classes: int | None = None) -> np.ndarray:
    """Inverse-frequency weights: w_k = n_total / (K * n_k)."""
    labels = np.asarray(labels, dtype=int)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=num_classes)
    if np.any(counts == 0):
        missing = [int(k) for k in np.flatnonzero(counts == 0)]
        raise ConfigError(f"class_weights: empty classes {missing}")
    return labels.size / (num_classes * counts.astype(float))


# ---------------------------------------------------------------------------
# CSV + sidecar persistence
# ---------------------------------------------------------------------------


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    d = dataset.feature_dim
    lines = [",".join(["id", "split", "domain_tag", "label", "agreement"] + [f"f{j}" for j in range(d)])]
    for i in range(len(dataset)):
        agreement = "" if dataset.agreement is None else format_float(float(dataset.agreement[i]))
        row = [
            str(int(dataset.ids[i])),
            dataset.split,
            str(dataset.domain_tags[i]),
            str(int(dataset.labels[i])),
            agreement,
        ] + [format_float(float(v)) for v in dataset.features[i]]
        lines.append(",".join(row))
    write_text_atomic(path, "\n".join(lines) + "\n")


def write_votes_csv(dataset: Dataset, path: str | Path) -> None:
    if dataset.votes is None:
        raise ConfigError("dataset has no rater votes")
    lines = ["id,rater,vote"]
    for i in range(len(dataset)):
        for r in range(dataset.votes.shape[1]):
            lines.append(f"{int(dataset.ids[i])},{r},{int(dataset.votes[i, r])}")
    write_text_atomic(path, "\n".join(lines) + "\n")


def write_sidecar(config: SyntheticConfig, path: str | Path, label_map: dict[int, int] | None = None) -> None:
    doc = {"config": config.to_dict(), "config_hash": config.content_hash()}
    if label_map is not None:
        doc["label_map"] = {str(k): v for k, v in label_map.items()}
    write_text_atomic(path, dumps_canonical(doc))


def read_dataset_csv(path: str | Path, votes_path: str | Path | None = None) -> Dataset:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        fixed = ["id", "split", "domain_tag", "label", "agreement"]
        if header[: len(fixed)] != fixed:
            raise CsvFormatError(f"{path}:1: unexpected header {header[:5]}")
        d = len(header) - len(fixed)
        ids, labels, tags, agreements, feats = [], [], [], [], []
        split = None
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvFormatError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            try:
                ids.append(int(row[0]))
                labels.append(int(row[3]))
                agreements.append(float(row[4]) if row[4] else np.nan)
                feats.append([float(v) for v in row[5:]])
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{line_no}: {exc}") from None
            split = row[1]
            tags.append(row[2])
    agreement = np.array(agreements)
    dataset = Dataset(
        ids=np.array(ids, dtype=int),
        features=np.array(feats, dtype=float).reshape(len(ids), d),
        labels=np.array(labels, dtype=int),
        domain_tags=np.array(tags, dtype=object),
        split=split or "unknown",
        provenance="",
        agreement=None if np.all(np.isnan(agreement)) else agreement,
    )
    if votes_path is not None and Path(votes_path).exists():
        dataset.votes = _read_votes_csv(votes_path, dataset.ids)
    return dataset


def _read_votes_csv(path: str | Path, ids: np.ndarray) -> np.ndarray:
    by_id: dict[int, list[int]] = {int(i): [] for i in ids}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["id", "rater", "vote"]:
            raise CsvFormatError(f"{path}:1: unexpected header {header}")
        for line_no, row in enumerate(reader, start=2):
            try:
                by_id[int(row[0])].append(int(row[2]))
            except (ValueError, KeyError) as exc:
                raise CsvFormatError(f"{path}:{line_no}: {exc}") from None
    return np.array([by_id[int(i)] for i in ids], dtype=int)
