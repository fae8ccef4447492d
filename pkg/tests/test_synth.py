from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from hygiene.classifiers.registry import make_trainer
from hygiene.domain import BandSpec, HygieneClass
from hygiene.domain_schemas import GeneratorConfig
from hygiene.errors import InvalidConfig
from hygiene.services.feature_service import extract_matrix
from hygiene.services.selection_service import cv_loss, stratified_kfold
from hygiene.services.signal_service import bandpass_filter, load_experiment_log, load_logged_recordings
from hygiene.services.synth_service import (
    DEFAULT_SIGNATURES,
    class_signature,
    generate_dataset,
    generate_event,
    write_dataset,
)


def test_events_are_pure_functions_of_seed_and_index() -> None:
    cfg = GeneratorConfig(seed=3)
    a = generate_event(HygieneClass.TOILET_FLUSHING, cfg, 4)
    b = generate_event(HygieneClass.TOILET_FLUSHING, cfg, 4)
    assert np.array_equal(a.samples, b.samples)
    other = generate_event(HygieneClass.TOILET_FLUSHING, GeneratorConfig(seed=4), 4)
    assert a.n_samples != other.n_samples or not np.array_equal(a.samples, other.samples)
    assert a.event_id == "TF-004"
    assert a.label is HygieneClass.TOILET_FLUSHING


def test_durations_stay_in_signature_range() -> None:
    cfg = GeneratorConfig(seed=1)
    for cls in HygieneClass:
        sig = DEFAULT_SIGNATURES[cls]
        for index in range(15):
            rec = generate_event(cls, cfg, index)
            assert sig.duration_min_s - 0.01 <= rec.duration_seconds <= sig.duration_max_s + 0.01


def test_zero_separability_makes_classes_identical() -> None:
    cfg = {"seed": 9, "separability": 0.0}
    for index in range(5):
        ks = generate_event(HygieneClass.KITCHEN_SINK, cfg, index)
        bf = generate_event(HygieneClass.BATHROOM_FAUCET, cfg, index)
        tf = generate_event(HygieneClass.TOILET_FLUSHING, cfg, index)
        assert np.array_equal(ks.samples, bf.samples)
        assert np.array_equal(ks.samples, tf.samples)


def test_zero_separability_gives_equal_class_feature_means() -> None:
    recordings, _ = generate_dataset(GeneratorConfig(n_per_class=100, seed=5, separability=0.0))
    m = extract_matrix([bandpass_filter(rec, BandSpec()) for rec in recordings])
    assert m.n_rows == 300
    pooled = m.values.std(axis=0)
    means = np.array([m.values[m.labels == code].mean(axis=0) for code in (0, 1, 2)])
    spread = means.max(axis=0) - means.min(axis=0)
    assert np.all(spread <= 0.1 * pooled + 1e-12)


def test_separability_blends_toward_class_mean() -> None:
    half = class_signature(HygieneClass.BATHROOM_FAUCET, {"separability": 0.5})
    values = [DEFAULT_SIGNATURES[c].transient_scale for c in HygieneClass]
    neutral = sum(values) / 3
    assert half.transient_scale == pytest.approx(0.5 * neutral + 0.5 * 600.0)
    full = class_signature(HygieneClass.BATHROOM_FAUCET, {"separability": 1.0})
    assert full == DEFAULT_SIGNATURES[HygieneClass.BATHROOM_FAUCET]


def test_overrides_change_one_class() -> None:
    cfg = {"overrides": {"ks": {"amplitude": 42.0}}}
    assert class_signature(HygieneClass.KITCHEN_SINK, cfg).amplitude == 42.0
    assert class_signature(HygieneClass.BATHROOM_FAUCET, cfg) == DEFAULT_SIGNATURES[HygieneClass.BATHROOM_FAUCET]


@pytest.mark.parametrize(
    "cfg",
    [
        {"n_per_class": 0},
        {"separability": 1.5},
        {"overrides": {"xx": {"amplitude": 1.0}}},
        {"overrides": {"ks": {"colour": 1.0}}},
        {"overrides": {"tf": {"oscillation_hz": 60.0}}},
        {"sample_rate_hz": 20.0},
    ],
)
def test_invalid_generator_configs(cfg) -> None:
    with pytest.raises(InvalidConfig):
        generate_event(HygieneClass.KITCHEN_SINK, cfg, 0)


def test_negative_event_index_rejected() -> None:
    with pytest.raises(InvalidConfig):
        generate_event(HygieneClass.KITCHEN_SINK, GeneratorConfig(), -1)


def test_dataset_is_ordered_and_logged() -> None:
    recordings, entries = generate_dataset(GeneratorConfig(n_per_class=4, seed=2))
    assert [r.event_id for r in recordings] == [e.event_id for e in entries]
    assert [int(r.label) for r in recordings] == [0] * 4 + [1] * 4 + [2] * 4
    for rec, entry in zip(recordings, entries):
        assert HygieneClass.from_location(entry.location) is rec.label
        assert entry.duration_s == rec.duration_seconds


def test_written_dataset_reloads_bit_exact(tmp_path: Path) -> None:
    cfg = GeneratorConfig(n_per_class=3, seed=5)
    recordings, entries = generate_dataset(cfg)
    write_dataset(tmp_path, recordings, entries, cfg)

    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["n_events"] == 9
    assert set(manifest["signatures"]) == {"KS", "BF", "TF"}

    log = load_experiment_log(tmp_path / "experiment_log.csv")
    assert log == entries
    loaded = load_logged_recordings(tmp_path, log)
    for original, again in zip(recordings, loaded):
        assert again.event_id == original.event_id
        assert again.label is original.label
        assert np.array_equal(again.samples, original.samples)


def test_more_noise_lowers_tree_accuracy() -> None:
    band = BandSpec()
    trainer = make_trainer("dt")
    means = []
    for noise_scale in (1.0, 4.0, 16.0):
        accuracies = []
        for seed in range(10):
            recordings, _ = generate_dataset(GeneratorConfig(n_per_class=20, seed=seed, noise_scale=noise_scale))
            m = extract_matrix([bandpass_filter(r, band) for r in recordings])
            accuracies.append(1.0 - cv_loss(trainer, m.values, m.labels, stratified_kfold(m.labels, 5, seed), seed))
        means.append(float(np.mean(accuracies)))
    assert means[0] > means[-1]
    assert all(later <= earlier + 0.02 for earlier, later in zip(means, means[1:]))


def test_faucet_events_are_louder_than_sink_events() -> None:
    cfg = GeneratorConfig(seed=11)
    ks = np.mean([np.std(generate_event(HygieneClass.KITCHEN_SINK, cfg, i).samples) for i in range(100)])
    bf = np.mean([np.std(generate_event(HygieneClass.BATHROOM_FAUCET, cfg, i).samples) for i in range(100)])
    assert bf >= 2.0 * ks
