import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uqbench.data import (
    Dataset,
    SyntheticConfig,
    class_weights,
    generate_clusters,
    generate_ood_domain,
    holdout_class_split,
    mix_at_snr,
    mix_batch_at_snr,
    read_dataset_csv,
    simulate_raters,
    split_dataset,
    write_dataset_csv,
    write_votes_csv,
)
from uqbench.exceptions import ConfigError, DomainError
from uqbench.rng import RngStream


def small_config(**kw):
    defaults = dict(feature_dim=6, cluster_separation=3.0, seed=0)
    defaults.update(kw)
    return SyntheticConfig(**defaults)


class TestGenerateClusters:
    def test_linear_probe_reaches_99_percent_at_wide_separation(self):
        # oracle: an independent, mature probe certifies the data is separable
        from sklearn.linear_model import LogisticRegression

        d = 6
        config = small_config(cluster_separation=10.0 * np.sqrt(d))
        ds = generate_clusters(config, 4000)
        probe = LogisticRegression(max_iter=1000).fit(ds.features, ds.labels)
        assert probe.score(ds.features, ds.labels) >= 0.99

    def test_empirical_priors_match_within_one_percent(self):
        config = small_config()
        ds = generate_clusters(config, 100_000)
        freqs = np.bincount(ds.labels, minlength=4) / len(ds)
        np.testing.assert_allclose(freqs, [0.60, 0.26, 0.08, 0.06], atol=0.01)

    def test_same_seed_identical_files(self, tmp_path):
        for name in ("a", "b"):
            ds = generate_clusters(small_config(), 500)
            write_dataset_csv(ds, tmp_path / f"{name}.csv")
            write_votes_csv(ds, tmp_path / f"{name}_votes.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a_votes.csv").read_bytes() == (tmp_path / "b_votes.csv").read_bytes()

    def test_class_means_pairwise_distance(self):
        config = small_config(cluster_separation=5.0)
        means = config.class_means()
        for i in range(4):
            for j in range(i + 1, 4):
                assert np.linalg.norm(means[i] - means[j]) == pytest.approx(5.0, rel=1e-12)

    def test_degenerate_config_rejected(self):
        with pytest.raises(ConfigError):
            small_config(cluster_separation=-1.0)
        with pytest.raises(ConfigError):
            small_config(class_priors=(0.5, 0.5, 0.1, 0.1))
        with pytest.raises(ConfigError):
            generate_clusters(small_config(), 2)


class TestSimulateRaters:
    def test_zero_temperature_limit_at_cluster_mean(self):
        config = small_config(ambiguity_temperature=1e-9)
        means = config.class_means()
        votes = simulate_raters(means[1][None, :], config, RngStream(3))
        assert np.all(votes == 1)

    def test_agreement_bounds(self):
        config = small_config()
        ds = generate_clusters(config, 2000)
        r = config.raters_per_sample
        assert np.all(ds.agreement >= 1.0 / r - 1e-12)
        assert np.all(ds.agreement <= 1.0)

    def test_equidistant_sample_splits_two_ways(self):
        # halfway between two means, tiny temperature: raters split between
        # the two nearest classes, agreement near 0.5 + O(1/R)
        config = SyntheticConfig(feature_dim=6, raters_per_sample=10, ambiguity_temperature=1e-6, seed=0)
        means = config.class_means()
        midpoint = 0.5 * (means[0] + means[1])
        rng = RngStream(0)
        agreements = []
        for _ in range(300):
            votes = simulate_raters(midpoint[None, :], config, rng)[0]
            assert set(votes) <= {0, 1}
            counts = np.bincount(votes, minlength=4)
            agreements.append(counts.max() / 10)
        mean_agree = np.mean(agreements)
        # Monte-Carlo oracle over binomial(10, 1/2) majorities gives 0.623
        assert mean_agree == pytest.approx(0.623, abs=0.03)

    def test_agreement_monotone_in_temperature(self):
        temps = [0.3, 1.0, 3.0, 10.0]
        for seed in (0, 1, 2):
            means = []
            for t in temps:
                config = SyntheticConfig(feature_dim=6, ambiguity_temperature=t, seed=seed)
                ds = generate_clusters(config, 3000)
                means.append(ds.agreement.mean())
            assert all(b <= a + 1e-9 for a, b in zip(means, means[1:]))


class TestHoldoutSplit:
    def test_relabel_and_mapping(self):
        ds = generate_clusters(small_config(), 2000)
        in_ds, out_ds = holdout_class_split(ds, {3})
        assert set(np.unique(in_ds.labels)) == {0, 1, 2}
        assert in_ds.label_map == {0: 0, 1: 1, 2: 2}
        assert set(out_ds.domain_tags) == {"heldout-class"}
        in_ds2, _ = holdout_class_split(ds, {1})
        assert in_ds2.label_map == {0: 0, 2: 1, 3: 2}

    def test_disjoint_and_sizes(self):
        ds = generate_clusters(small_config(), 1500)
        in_ds, out_ds = holdout_class_split(ds, {2, 3})
        assert len(in_ds) + len(out_ds) == len(ds)
        assert not set(in_ds.ids) & set(out_ds.ids)

    def test_all_classes_rejected(self):
        ds = generate_clusters(small_config(), 100)
        with pytest.raises(ConfigError):
            holdout_class_split(ds, {0, 1, 2, 3})


class TestOodDomain:
    def test_white_noise_ramp_default_count_and_sigmas(self):
        ds = generate_ood_domain("white-noise-ramp", 45, 6, RngStream(0))
        assert len(ds) == 45
        norms = np.linalg.norm(ds.features, axis=1)
        assert norms[0] < 0.02  # near silence
        assert norms[-1] > 5.0

    def test_shifted_cluster_distance(self):
        config = small_config()
        means = config.class_means()
        ds = generate_ood_domain(
            "shifted-cluster", 200, 6, RngStream(1), class_means=means, separation=3.0
        )
        center = ds.features.mean(axis=0)
        for mean in means:
            assert np.linalg.norm(center - mean) >= 5.0 * 3.0

    def test_uniform_box_exceeds_support(self):
        config = small_config()
        means = config.class_means()
        ds = generate_ood_domain("uniform-box", 5000, 6, RngStream(2), class_means=means, box_margin=0.5)
        assert ds.features.min() < means.min() - 4.0
        assert ds.features.max() > means.max() + 4.0

    def test_tags_and_validation(self):
        ds = generate_ood_domain("white-noise-ramp", 10, 4, RngStream(0))
        assert set(ds.domain_tags) == {"ood-domain:white-noise-ramp"}
        with pytest.raises(ConfigError):
            generate_ood_domain("volcano", 10, 4, RngStream(0))
        with pytest.raises(ConfigError):
            generate_ood_domain("uniform-box", 10, 4, RngStream(0))  # needs class_means


class TestMixAtSnr:
    def test_closed_form_gains(self):
        signal = np.array([1.0, -1.0, 1.0, -1.0])  # power exactly 1
        noise = np.array([1.0, 1.0, -1.0, -1.0])
        out0 = mix_at_snr(signal, 0.0, noise=noise)
        np.testing.assert_allclose(out0 - signal, noise, rtol=1e-12)
        out30 = mix_at_snr(signal, 30.0, noise=noise)
        np.testing.assert_allclose(out30 - signal, 10 ** (-1.5) * noise, rtol=1e-12)
        out_neg = mix_at_snr(signal, -10.0, noise=noise)
        np.testing.assert_allclose(out_neg - signal, 10 ** (0.5) * noise, rtol=1e-12)

    def test_achieved_snr_exact_within_1e9_db(self):
        rng = RngStream(0)
        for _ in range(1000):
            d = int(rng.integers(4, 64))
            signal = rng.standard_normal(d) * float(rng.uniform(0.1, 10))
            noise = rng.standard_normal(d) * float(rng.uniform(0.1, 10))
            target = float(rng.uniform(-20, 40))
            mixed = mix_at_snr(signal, target, noise=noise)
            added = mixed - signal
            achieved = 10 * np.log10(np.mean(signal**2) / np.mean(added**2))
            assert abs(achieved - target) < 1e-9

    def test_zero_power_errors(self):
        with pytest.raises(DomainError):
            mix_at_snr(np.zeros(4), 10.0, noise=np.ones(4))
        with pytest.raises(DomainError):
            mix_at_snr(np.ones(4), 10.0, noise=np.zeros(4))

    def test_batch_matches_single(self):
        rng = RngStream(4)
        x = rng.standard_normal((10, 6))
        mixed = mix_batch_at_snr(x, 5.0, RngStream(9))
        noise = RngStream(9).standard_normal((10, 6))
        for i in range(10):
            np.testing.assert_allclose(mixed[i], mix_at_snr(x[i], 5.0, noise=noise[i]), rtol=1e-12)


class TestClassWeights:
    def test_balanced_all_ones(self):
        labels = np.repeat(np.arange(4), 25)
        np.testing.assert_allclose(class_weights(labels, 4), np.ones(4))

    def test_hand_value_for_paper_proportions(self):
        labels = np.repeat(np.arange(4), [60, 26, 8, 6])
        expected = np.array([100 / 240, 100 / 104, 100 / 32, 100 / 24])
        np.testing.assert_allclose(class_weights(labels, 4), expected, rtol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(min_value=1, max_value=50), min_size=2, max_size=6))
    def test_weighted_count_identity(self, counts):
        labels = np.repeat(np.arange(len(counts)), counts)
        w = class_weights(labels, len(counts))
        assert np.dot(w, counts) == pytest.approx(len(labels), rel=1e-12)

    def test_empty_class_rejected(self):
        with pytest.raises(ConfigError):
            class_weights(np.array([0, 0, 2, 2]), 3)


class TestCsvRoundTrip:
    def test_dataset_round_trip_bit_exact(self, tmp_path):
        ds = generate_clusters(small_config(), 300)
        splits = split_dataset(ds, {"train": 200, "test": 100})
        write_dataset_csv(splits["test"], tmp_path / "test.csv")
        write_votes_csv(splits["test"], tmp_path / "votes.csv")
        back = read_dataset_csv(tmp_path / "test.csv", tmp_path / "votes.csv")
        np.testing.assert_array_equal(back.ids, splits["test"].ids)
        np.testing.assert_array_equal(back.labels, splits["test"].labels)
        np.testing.assert_array_equal(back.features, splits["test"].features)
        np.testing.assert_array_equal(back.votes, splits["test"].votes)
        np.testing.assert_array_equal(back.agreement, splits["test"].agreement)
        assert back.split == "test"

    def test_split_hygiene(self):
        ds = generate_clusters(small_config(), 300)
        splits = split_dataset(ds, {"train": 150, "dev": 50, "test": 100})
        ids = [set(s.ids) for s in splits.values()]
        assert not (ids[0] & ids[1]) and not (ids[0] & ids[2]) and not (ids[1] & ids[2])
        with pytest.raises(ConfigError):
            split_dataset(ds, {"train": 10, "test": 10})
