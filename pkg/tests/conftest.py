import numpy as np
import pytest

from uqbench.data import SyntheticConfig
from uqbench.pipeline import ExperimentConfig, ModelSpec, TrainParams


def tiny_config(seed: int = 0, out_dir: str = "run", **overrides) -> ExperimentConfig:
    """Desk-scale-in-miniature config: all heads and tests, seconds to run."""
    kwargs = dict(
        data=SyntheticConfig(feature_dim=6, seed=0),
        n_train=400,
        n_dev=80,
        n_test=200,
        model=ModelSpec(hidden_sizes=(16, 16)),
        train=TrainParams(batch_size=16, epochs=2),
        snr_grid_db=(30.0, 0.0, -10.0),
        snr_repeats=1,
        n_ood_eval=60,
        mc_passes=5,
        seed=seed,
        out_dir=out_dir,
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


@pytest.fixture
def rng_features():
    rng = np.random.default_rng(7)
    return rng.standard_normal((40, 6))
