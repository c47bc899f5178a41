"""Request/response models for the HTTP service.

Config sections mirror the experiment config JSON; every field is optional
and unset fields fall back to the package defaults. Semantic validation
(priors sum to 1, head/test names, ...) happens in the core config layer.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class DataConfigModel(BaseModel):
    num_classes: int | None = None
    feature_dim: int | None = None
    class_priors: list[float] | None = None
    cluster_separation: float | None = None
    ambiguity_temperature: float | None = None
    raters_per_sample: int | None = None
    seed: int | None = None


class ModelConfigModel(BaseModel):
    hidden_sizes: list[int] | None = None
    activation: str | None = None
    dropout_rate: float | None = None


class TrainConfigModel(BaseModel):
    learning_rate: float | None = None
    epochs: int | None = None
    batch_size: int | None = None
    anneal_epochs: int | None = None
    pn_concentration: float | None = None
    ood_fraction: float | None = None
    optimizer: str | None = None
    pn_kl_direction: str | None = None
    edl_activation: str | None = None


class ExperimentConfigModel(BaseModel):
    data: DataConfigModel | None = None
    n_train: int | None = None
    n_dev: int | None = None
    n_test: int | None = None
    heldout_classes: list[int] | None = None
    model: ModelConfigModel | None = None
    train: TrainConfigModel | None = None
    heads: list[str] | None = None
    tests: list[str] | None = None
    mc_passes: int | None = None
    snr_grid_db: list[float] | None = None
    snr_repeats: int | None = None
    n_ood_eval: int | None = None
    seed: int | None = None

    def to_config_dict(self) -> dict:
        doc = self.model_dump(exclude_none=True)
        for section in ("data", "model", "train"):
            if section in doc and not doc[section]:
                del doc[section]
        return doc


class HealthResponse(BaseModel):
    status: str
    version: str


class RunRequest(BaseModel):
    config: ExperimentConfigModel = Field(default_factory=ExperimentConfigModel)
    run_id: str | None = None


class GenerateResponse(BaseModel):
    run_id: str
    run_dir: str
    files: dict[str, str]


class TrainResponse(BaseModel):
    run_id: str
    run_dir: str
    manifest: dict


class EvaluateRequest(BaseModel):
    run_id: str
    tests: list[str] | None = None


class SnrPointModel(BaseModel):
    snr_db: float
    uar: float
    mean_unc_correct: float | None = None
    ci95_correct: float | None = None
    mean_unc_wrong: float | None = None
    ci95_wrong: float | None = None


class SummaryModel(BaseModel):
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
    per_snr: list[SnrPointModel] | None = None
    metadata: dict


class EvaluateResponse(BaseModel):
    run_id: str
    run_dir: str
    summaries: dict[str, SummaryModel]


class PlotRequest(BaseModel):
    run_id: str


class PlotResponse(BaseModel):
    run_id: str
    plots: list[str]


class RunResponse(BaseModel):
    run_id: str
    run_dir: str
    manifest: dict
    summaries: dict[str, SummaryModel]


class ManifestResponse(BaseModel):
    run_id: str
    manifest: dict


class ScoreRequest(BaseModel):
    run_id: str
    head: str
    features: list[list[float]]
    mc_passes: int = 20
    seed: int = 0


class UncertaintyRecordModel(BaseModel):
    sample_id: int
    predicted_class: int
    entropy_nats: float
    entropy_norm: float
    mc_variance: float | None = None
    precision: float | None = None
    u_mass: float | None = None


class ScoreResponse(BaseModel):
    run_id: str
    head: str
    label: str
    records: list[UncertaintyRecordModel]
