"""Experiment orchestration: config, training pipelines, evaluation, manifest.

A run directory is fully determined by (config, seed): datasets, checkpoints,
result CSVs, summaries, and the manifest are byte-identical across repeated
runs. The CE model serves both the entropy and MC-dropout heads; EDL and the
two prior networks get their own training runs.

Derived seed scheme (all streams hang off the master seed):
    data=1, ce=2, edl=3, pn-in=4, pn-out=5, ood-train=6, ood-eval=10+,
    eval per (head, test) = 100*head_index + test_index under child(7).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    Dataset,
    OOD_KINDS,
    SyntheticConfig,
    WHITE_NOISE_RAMP_DEFAULT_N,
    class_weights,
    generate_clusters,
    generate_ood_domain,
    holdout_class_split,
    read_dataset_csv,
    split_dataset,
    write_dataset_csv,
    write_sidecar,
    write_votes_csv,
)
from .dirichlet import edl_logit_loss, pn_logit_loss, pn_targets
from .exceptions import ConfigError, NumericalDivergenceError
from .harness import EvalSummary, run_correctness_test, run_ood_domain_test, run_rater_test, run_snr_sweep, run_unknown_class_test
from .heads import HEAD_LABELS, HEAD_MODEL, HEADS, weighted_ce_loss
from .jsonio import dumps_canonical, format_float, read_json, sha256_hex, write_json_atomic, write_text_atomic
from .metrics import CdfCurve
from .nn import MLPModel, TrainConfig, build_mlp, init_optimizer, train_step
from .rng import RngStream

TESTS = ("correctness", "rater", "unknown-class", "ood-domain", "snr-sweep")
DEFAULT_SNR_GRID_DB = (30.0, 25.0, 20.0, 15.0, 10.0, 5.0, 0.0, -5.0, -10.0)

_SEED_KEYS = {"data": 1, "ce": 2, "edl": 3, "pn-in": 4, "pn-out": 5, "ood-train": 6, "eval": 7, "ood-eval": 10}

MODEL_FILES = {"ce": "ce.json", "edl": "edl.json", "pn-in": "pn-in.json", "pn-out": "pn-out.json"}


@dataclass(frozen=True)
class ModelSpec:
    hidden_sizes: tuple[int, ...] = (64, 64)
    activation: str = "tanh"
    dropout_rate: float = 0.2

    def to_dict(self) -> dict:
        return {
            "hidden_sizes": list(self.hidden_sizes),
            "activation": self.activation,
            "dropout_rate": float(self.dropout_rate),
        }


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float = 1e-4
    epochs: int = 5
    batch_size: int = 2
    anneal_epochs: int = 10
    pn_concentration: float = 100.0
    ood_fraction: float = 0.25
    ood_box_margin: float = 0.5
    optimizer: str = "adam"
    pn_kl_direction: str = "target-to-pred"
    edl_activation: str = "softplus"

    def to_dict(self) -> dict:
        return {
            "learning_rate": float(self.learning_rate),
            "epochs": int(self.epochs),
            "batch_size": int(self.batch_size),
            "anneal_epochs": int(self.anneal_epochs),
            "pn_concentration": float(self.pn_concentration),
            "ood_fraction": float(self.ood_fraction),
            "ood_box_margin": float(self.ood_box_margin),
            "optimizer": self.optimizer,
            "pn_kl_direction": self.pn_kl_direction,
            "edl_activation": self.edl_activation,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; see README for the JSON schema."""

    data: SyntheticConfig = field(default_factory=SyntheticConfig)
    n_train: int = 8000
    n_dev: int = 1000
    n_test: int = 2000
    heldout_classes: tuple[int, ...] = (3,)
    model: ModelSpec = field(default_factory=ModelSpec)
    train: TrainParams = field(default_factory=TrainParams)
    heads: tuple[str, ...] = HEADS
    tests: tuple[str, ...] = TESTS
    mc_passes: int = 20
    snr_grid_db: tuple[float, ...] = DEFAULT_SNR_GRID_DB
    snr_repeats: int = 3
    n_ood_eval: int = 500
    seed: int = 0
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.n_train < self.data.num_classes or self.n_dev < 1 or self.n_test < 1:
            raise ConfigError("split sizes too small")
        unknown = set(self.heads) - set(HEADS)
        if unknown:
            raise ConfigError(f"unknown heads {sorted(unknown)}; valid: {list(HEADS)}")
        if not self.heads:
            raise ConfigError("at least one head is required")
        unknown = set(self.tests) - set(TESTS)
        if unknown:
            raise ConfigError(f"unknown tests {sorted(unknown)}; valid: {list(TESTS)}")
        for c in self.heldout_classes:
            if not 0 <= c < self.data.num_classes:
                raise ConfigError(f"heldout class {c} outside [0, {self.data.num_classes})")
        if len(self.heldout_classes) >= self.data.num_classes:
            raise ConfigError("cannot hold out every class")
        if "unknown-class" in self.tests and not self.heldout_classes:
            raise ConfigError("unknown-class test needs heldout_classes")
        if "mc-dropout" in self.heads and self.model.dropout_rate <= 0.0:
            raise ConfigError("mc-dropout head needs model.dropout_rate > 0")
        if "pn-out" in self.heads and self.train.ood_fraction <= 0.0:
            raise ConfigError("pn-out head needs train.ood_fraction > 0 (its OOD training source)")
        if not 0.0 <= self.train.ood_fraction < 1.0:
            raise ConfigError("train.ood_fraction must be in [0, 1)")
        if self.train.learning_rate <= 0.0:
            raise ConfigError("train.learning_rate must be > 0")
        if self.mc_passes < 2:
            raise ConfigError("mc_passes must be >= 2")
        if self.snr_repeats < 1:
            raise ConfigError("snr_repeats must be >= 1")
        if "snr-sweep" in self.tests and not self.snr_grid_db:
            raise ConfigError("snr-sweep needs a nonempty snr_grid_db")

    @property
    def num_model_classes(self) -> int:
        return self.data.num_classes - len(self.heldout_classes)

    @property
    def models_needed(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(HEAD_MODEL[h] for h in self.heads))

    def to_dict(self) -> dict:
        return {
            "data": self.data.to_dict(),
            "n_train": self.n_train,
            "n_dev": self.n_dev,
            "n_test": self.n_test,
            "heldout_classes": list(self.heldout_classes),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "heads": list(self.heads),
            "tests": list(self.tests),
            "mc_passes": self.mc_passes,
            "snr_grid_db": [float(s) for s in self.snr_grid_db],
            "snr_repeats": self.snr_repeats,
            "n_ood_eval": self.n_ood_eval,
            "seed": self.seed,
            "out_dir": self.out_dir,
        }

    def content_hash(self) -> str:
        doc = self.to_dict()
        doc.pop("out_dir")  # identity is independent of where artifacts land
        return sha256_hex(dumps_canonical(doc))[:16]

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        known = {
            "data", "n_train", "n_dev", "n_test", "heldout_classes", "model",
            "train", "heads", "tests", "mc_passes", "snr_grid_db",
            "snr_repeats", "n_ood_eval", "seed", "out_dir",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        kwargs = {}
        if "data" in doc:
            data = dict(doc.pop("data"))
            data.setdefault("seed", 0)
            try:
                kwargs["data"] = SyntheticConfig.from_dict(data)
            except KeyError as exc:
                raise ConfigError(f"data section missing field {exc}") from None
        if "model" in doc:
            m = doc.pop("model")
            kwargs["model"] = ModelSpec(
                hidden_sizes=tuple(m.get("hidden_sizes", (64, 64))),
                activation=m.get("activation", "tanh"),
                dropout_rate=m.get("dropout_rate", 0.2),
            )
        if "train" in doc:
            t = dict(doc.pop("train"))
            bad = set(t) - set(TrainParams().to_dict())
            if bad:
                raise ConfigError(f"unknown train fields {sorted(bad)}")
            kwargs["train"] = TrainParams(**t)
        for key in ("heldout_classes", "heads", "tests", "snr_grid_db"):
            if key in doc:
                kwargs[key] = tuple(doc.pop(key))
        kwargs.update(doc)
        return cls(**kwargs)


def load_config(path: str | Path, seed: int | None = None, out_dir: str | None = None) -> ExperimentConfig:
    """Read a config JSON; CLI-style overrides win over file values."""
    doc = read_json(path)
    config = ExperimentConfig.from_dict(doc)
    if seed is not None:
        config = replace(config, seed=seed)
    if out_dir is not None:
        config = replace(config, out_dir=str(out_dir))
    return config


def derived_seed(master: int, key: str) -> int:
    return master * 1_000_003 + _SEED_KEYS[key]


# ---------------------------------------------------------------------------
# Data materialization
# ---------------------------------------------------------------------------


@dataclass
class RunData:
    train: Dataset
    dev: Dataset
    test: Dataset
    heldout: Dataset | None
    ood_eval: dict[str, Dataset]
    label_map: dict[int, int] | None
    class_weights: np.ndarray


def build_datasets(config: ExperimentConfig) -> RunData:
    """All datasets for a run, derived purely from the config."""
    data_cfg = replace(config.data, seed=derived_seed(config.seed, "data"))
    total = config.n_train + config.n_dev + config.n_test
    full = generate_clusters(data_cfg, total)
    splits = split_dataset(full, {"train": config.n_train, "dev": config.n_dev, "test": config.n_test})

    heldout_ds = None
    label_map = None
    if config.heldout_classes:
        held = set(config.heldout_classes)
        train_in, _ = holdout_class_split(splits["train"], held)
        dev_in, _ = holdout_class_split(splits["dev"], held)
        test_in, heldout_ds = holdout_class_split(splits["test"], held)
        label_map = train_in.label_map
    else:
        train_in, dev_in, test_in = splits["train"], splits["dev"], splits["test"]

    means = data_cfg.class_means()
    ood_eval: dict[str, Dataset] = {}
    if "ood-domain" in config.tests or "pn-out" in config.heads:
        for i, kind in enumerate(OOD_KINDS):
            n = WHITE_NOISE_RAMP_DEFAULT_N if kind == "white-noise-ramp" else config.n_ood_eval
            ood_eval[kind] = generate_ood_domain(
                kind,
                n,
                data_cfg.feature_dim,
                RngStream(derived_seed(config.seed, "ood-eval") + i),
                class_means=means,
                separation=data_cfg.cluster_separation,
                box_margin=config.train.ood_box_margin,
                provenance=data_cfg.content_hash(),
                id_offset=1_000_000 + i * 100_000,
            )

    weights = class_weights(train_in.labels, config.num_model_classes)
    return RunData(
        train=train_in,
        dev=dev_in,
        test=test_in,
        heldout=heldout_ds,
        ood_eval=ood_eval,
        label_map=label_map,
        class_weights=weights,
    )


def write_datasets(config: ExperimentConfig, run_data: RunData, run_dir: Path) -> dict[str, str]:
    """Write dataset CSVs (+ votes, + sidecar); returns relative paths."""
    data_dir = run_dir / "data"
    paths: dict[str, str] = {}
    for name, ds in (("train", run_data.train), ("dev", run_data.dev), ("test", run_data.test)):
        write_dataset_csv(ds, data_dir / f"{name}.csv")
        write_votes_csv(ds, data_dir / f"{name}_votes.csv")
        paths[name] = f"data/{name}.csv"
        paths[f"{name}_votes"] = f"data/{name}_votes.csv"
    if run_data.heldout is not None:
        write_dataset_csv(run_data.heldout, data_dir / "heldout.csv")
        paths["heldout"] = "data/heldout.csv"
    for kind, ds in run_data.ood_eval.items():
        write_dataset_csv(ds, data_dir / f"ood_{kind}.csv")
        paths[f"ood_{kind}"] = f"data/ood_{kind}.csv"
    write_sidecar(replace(config.data, seed=derived_seed(config.seed, "data")), data_dir / "synthetic_config.json", run_data.label_map)
    paths["sidecar"] = "data/synthetic_config.json"
    return paths


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _fit(model: MLPModel, features: np.ndarray, targets, train_cfg: TrainConfig, rng: RngStream, loss_builder, pipeline_name: str, use_dropout: bool = True) -> None:
    n = features.shape[0]
    opt_state = init_optimizer(model, train_cfg.optimizer)
    dropout_rng = rng if use_dropout and model.dropout_rate > 0.0 else None
    for epoch in range(train_cfg.epochs):
        loss_fn = loss_builder(epoch)
        perm = rng.permutation(n)
        for start in range(0, n, train_cfg.batch_size):
            idx = perm[start : start + train_cfg.batch_size]
            try:
                train_step(model, features[idx], targets[idx], loss_fn, opt_state, train_cfg, rng=dropout_rng)
            except NumericalDivergenceError as exc:
                raise NumericalDivergenceError(f"pipeline {pipeline_name!r} epoch {epoch}: {exc}") from exc


def _train_one(config: ExperimentConfig, run_data: RunData, name: str) -> tuple[MLPModel, TrainConfig]:
    k = config.num_model_classes
    seed = derived_seed(config.seed, name)
    rng = RngStream(seed)
    params = config.train
    head_kind = {"ce": "softmax-ce", "edl": "edl", "pn-in": "prior-net", "pn-out": "prior-net"}[name]
    loss_kind = {"ce": "weighted-ce", "edl": "edl", "pn-in": "pn", "pn-out": "pn"}[name]
    model = build_mlp(
        config.data.feature_dim,
        list(config.model.hidden_sizes),
        k,
        rng,
        activation=config.model.activation,
        dropout_rate=config.model.dropout_rate,
        head_kind=head_kind,
    )
    train_cfg = TrainConfig(
        learning_rate=params.learning_rate,
        epochs=params.epochs,
        batch_size=params.batch_size,
        seed=seed,
        class_weights=run_data.class_weights if name == "ce" else None,
        loss_kind=loss_kind,
        anneal_epochs=params.anneal_epochs,
        pn_concentration=params.pn_concentration,
        optimizer=params.optimizer,
    )

    x = run_data.train.features
    labels = run_data.train.labels
    if name == "ce":
        weights = run_data.class_weights

        def builder(epoch):
            return lambda logits, y: weighted_ce_loss(logits, y, weights)

        _fit(model, x, labels, train_cfg, rng, builder, name)
    elif name == "edl":
        anneal = params.anneal_epochs
        act = params.edl_activation

        def builder(epoch):
            return lambda logits, y: edl_logit_loss(logits, y, epoch=epoch, anneal_epochs=anneal, activation=act)

        _fit(model, x, labels, train_cfg, rng, builder, name)
    else:
        direction = params.pn_kl_direction
        targets = pn_targets(labels, k, params.pn_concentration)
        feats = x
        if name == "pn-out":
            # interleave flat-target box OOD at the configured epoch fraction
            f = params.ood_fraction
            n_ood = int(round(f / (1.0 - f) * x.shape[0]))
            ood = generate_ood_domain(
                "uniform-box",
                max(n_ood, 1),
                config.data.feature_dim,
                RngStream(derived_seed(config.seed, "ood-train")),
                class_means=replace(config.data, seed=0).class_means(),
                box_margin=params.ood_box_margin,
            )
            feats = np.concatenate([x, ood.features])
            targets = np.concatenate([targets, np.ones((len(ood), k))])

        def builder(epoch):
            return lambda logits, t: pn_logit_loss(logits, t, direction=direction, warn=False)

        # dropout noise fights the precision targets; prior nets train clean
        _fit(model, feats, targets, train_cfg, rng, builder, name, use_dropout=False)
    return model, train_cfg


def train_pipeline(config: ExperimentConfig, run_dir: str | Path | None = None, log=None) -> dict:
    """Generate data, train one model per required pipeline, write manifest."""
    run_dir = Path(run_dir if run_dir is not None else config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    config_doc = config.to_dict()
    config_doc.pop("out_dir")  # identity only; keeps artifacts location-independent
    write_text_atomic(run_dir / "config.json", dumps_canonical(config_doc))

    run_data = build_datasets(config)
    data_paths = write_datasets(config, run_data, run_dir)

    checkpoints: dict[str, str] = {}
    for name in config.models_needed:
        model, train_cfg = _train_one(config, run_data, name)
        rel = f"checkpoints/{MODEL_FILES[name]}"
        save_checkpoint(run_dir / rel, model, train_cfg, train_cfg.seed)
        checkpoints[name] = rel
        if log:
            log(f"trained {name} -> {rel}")

    manifest = {
        "config_hash": config.content_hash(),
        "tool_version": __version__,
        "seed": config.seed,
        "derived_seeds": {name: derived_seed(config.seed, name) for name in config.models_needed},
        "config_path": "config.json",
        "data": data_paths,
        "checkpoints": checkpoints,
        "summaries": {},
        "artifacts": [],
    }
    _write_manifest(run_dir, manifest)
    return manifest


def _write_manifest(run_dir: Path, manifest: dict) -> None:
    for rel in _manifest_files(manifest):
        if not (run_dir / rel).exists():
            raise ConfigError(f"manifest references missing file {rel}")
    write_json_atomic(run_dir / "manifest.json", manifest)


def _manifest_files(manifest: dict):
    yield manifest["config_path"]
    yield from manifest["data"].values()
    yield from manifest["checkpoints"].values()
    yield from manifest["summaries"].values()
    yield from manifest["artifacts"]


def load_manifest(run_dir: str | Path) -> dict:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest at {path}")
    return read_json(path)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _write_cdf_csv(path: Path, curves: list[CdfCurve], normalizer: float) -> None:
    lines = ["group,value,cum_frac,value_norm"]
    for curve in curves:
        for v, f in zip(curve.values, curve.cum_fracs):
            lines.append(
                f"{curve.group},{format_float(float(v))},{format_float(float(f))},{format_float(float(v) / normalizer)}"
            )
    write_text_atomic(path, "\n".join(lines) + "\n")


def _write_records_csv(path: Path, records) -> None:
    lines = ["id,predicted,correct,entropy_nats,mc_variance,precision,u_mass"]
    for r in records:
        fields = [
            str(r.sample_id),
            str(r.predicted_class),
            "" if r.correct is None else str(int(r.correct)),
            format_float(r.entropy_nats),
            "" if r.mc_variance is None else format_float(r.mc_variance),
            "" if r.precision is None else format_float(r.precision),
            "" if r.u_mass is None else format_float(r.u_mass),
        ]
        lines.append(",".join(fields))
    write_text_atomic(path, "\n".join(lines) + "\n")


def _write_snr_csv(path: Path, points) -> None:
    lines = ["snr_db,uar,mean_unc_correct,ci95_correct,mean_unc_wrong,ci95_wrong"]
    for p in points:
        fields = [
            format_float(p.snr_db),
            format_float(p.uar),
            "" if p.mean_unc_correct is None else format_float(p.mean_unc_correct),
            "" if p.ci95_correct is None else format_float(p.ci95_correct),
            "" if p.mean_unc_wrong is None else format_float(p.mean_unc_wrong),
            "" if p.ci95_wrong is None else format_float(p.ci95_wrong),
        ]
        lines.append(",".join(fields))
    write_text_atomic(path, "\n".join(lines) + "\n")


def _safe(head: str) -> str:
    return head.replace("-", "_")


def evaluate(config: ExperimentConfig, run_dir: str | Path | None = None, tests: tuple[str, ...] | None = None, log=None) -> dict[str, EvalSummary]:
    """Run the requested tests for every configured head; write artifacts.

    With an empty test tuple the manifest is validated and nothing is
    computed. Raises FileNotFoundError for missing checkpoints.
    """
    run_dir = Path(run_dir if run_dir is not None else config.out_dir)
    manifest = load_manifest(run_dir)
    tests = config.tests if tests is None else tests
    unknown = set(tests) - set(TESTS)
    if unknown:
        raise ConfigError(f"unknown tests {sorted(unknown)}")
    for rel in _manifest_files(manifest):
        if not (run_dir / rel).exists():
            raise FileNotFoundError(f"manifest references missing file {run_dir / rel}")
    if not tests:
        return {}

    models: dict[str, tuple] = {}
    for name in config.models_needed:
        rel = manifest["checkpoints"].get(name)
        if rel is None or not (run_dir / rel).exists():
            raise FileNotFoundError(f"missing checkpoint for model {name!r} at {run_dir / (rel or f'checkpoints/{MODEL_FILES[name]}')}")
        models[name] = load_checkpoint(run_dir / rel)

    test_ds = read_dataset_csv(run_dir / manifest["data"]["test"], run_dir / manifest["data"]["test_votes"])
    heldout_ds = None
    if "heldout" in manifest["data"]:
        heldout_ds = read_dataset_csv(run_dir / manifest["data"]["heldout"])
    ood_sets = {}
    for kind in OOD_KINDS:
        key = f"ood_{kind}"
        if key in manifest["data"]:
            ood_sets[kind] = read_dataset_csv(run_dir / manifest["data"][key])

    k = config.num_model_classes
    normalizer = float(np.log(k))
    results_dir = run_dir / "results"
    eval_rng = RngStream(derived_seed(config.seed, "eval"))
    summaries: dict[str, EvalSummary] = {}
    artifacts: list[str] = list(manifest.get("artifacts", []))

    for hi, head in enumerate(config.heads):
        model, _, _ = models[HEAD_MODEL[head]]
        summary = EvalSummary(
            head=head,
            label=HEAD_LABELS[head],
            metadata={
                "uncertainty_units": "nats",
                "entropy_normalizer": normalizer,
                "ci95": "normal approximation: mean +/- 1.96*sd/sqrt(n)",
                "mc_passes": config.mc_passes if head == "mc-dropout" else None,
            },
        )
        safe = _safe(head)

        if "correctness" in tests:
            res = run_correctness_test(model, head, test_ds, config.mc_passes, eval_rng.child(100 * hi + 0))
            summary.uar = res.uar
            summary.accuracy = res.accuracy
            summary.auroc_misclassification = res.auroc_misclassification
            rel = f"results/correctness_cdf_{safe}.csv"
            _write_cdf_csv(run_dir / rel, res.curves, normalizer)
            artifacts.append(rel)
            rel = f"results/records_{safe}.csv"
            _write_records_csv(run_dir / rel, res.records)
            artifacts.append(rel)

        if "rater" in tests:
            summary.pcc_agreement = run_rater_test(model, head, test_ds, config.mc_passes, eval_rng.child(100 * hi + 1))

        if "unknown-class" in tests:
            if heldout_ds is None:
                raise ConfigError("unknown-class test needs a heldout dataset in the run")
            mean_in, mean_out, ratio = run_unknown_class_test(
                model, head, test_ds, heldout_ds, config.mc_passes, eval_rng.child(100 * hi + 2)
            )
            summary.mean_uncertainty_in = mean_in
            summary.mean_uncertainty_out = mean_out
            summary.out_in_ratio = ratio

        if "ood-domain" in tests:
            if not ood_sets:
                raise ConfigError("ood-domain test needs OOD datasets in the run")
            res = run_ood_domain_test(model, head, test_ds, ood_sets, config.mc_passes, eval_rng.child(100 * hi + 3))
            summary.auroc_ood = res.auroc_pooled
            summary.auroc_ood_by_kind = dict(sorted(res.auroc_by_kind.items()))
            rel = f"results/ood_cdf_{safe}.csv"
            _write_cdf_csv(run_dir / rel, res.curves, normalizer)
            artifacts.append(rel)

        if "snr-sweep" in tests:
            points = run_snr_sweep(
                model, head, test_ds, config.snr_grid_db, eval_rng.child(100 * hi + 4),
                repeats=config.snr_repeats, mc_passes=config.mc_passes,
            )
            summary.per_snr = points
            rel = f"results/snr_{safe}.csv"
            _write_snr_csv(run_dir / rel, points)
            artifacts.append(rel)

        rel = f"results/summary_{safe}.json"
        write_json_atomic(run_dir / rel, summary.to_dict())
        manifest["summaries"][head] = rel
        summaries[head] = summary
        if log:
            log(f"evaluated {head} -> {rel}")

    manifest["artifacts"] = sorted(dict.fromkeys(artifacts))
    _write_manifest(run_dir, manifest)
    return summaries
