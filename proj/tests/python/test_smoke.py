"""Smoke tests for the tdl extension module."""

import numpy as np
import pytest

import tdl


def make_synth(seed=0, n=10, dim=8):
    cfg = tdl.SynthConfig()
    cfg.num_identities = n
    cfg.samples_per_identity = 2
    cfg.dim = dim
    cfg.informative_dim = dim // 2
    cfg.intra_class_noise_scale = 0.2
    cfg.inter_class_separation = 1.0
    cfg.distractor_noise_scale = 0.3
    cfg.rng_seed = seed
    return cfg


def test_distances():
    m = tdl.MetricMatrix.identity(2)
    assert tdl.mahalanobis_distance(m, np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(25.0)
    outer = tdl.pairwise_diff_outer(np.array([2.0, 1.0]), np.array([0.0, -1.0]))
    assert outer.shape == (2, 2)
    assert outer[0, 0] == pytest.approx(4.0)
    assert tdl.trace_form_distance(np.eye(2), outer) == pytest.approx(8.0)


def test_psd_project():
    p = tdl.psd_project(np.diag([2.0, -1.0]))
    assert p.matrix[0, 0] == pytest.approx(2.0)
    assert p.matrix[1, 1] == pytest.approx(0.0, abs=1e-12)


def test_train_decreases_loss_and_stays_psd():
    samples = tdl.generate_synthetic(make_synth())
    cfg = tdl.TrainConfig()
    cfg.max_iters = 60
    report = tdl.train(samples, cfg)
    losses = np.asarray(report.loss_trace)
    assert losses[-1] < losses[0]
    assert np.all(np.diff(losses) < 0)
    eigenvalues = np.linalg.eigvalsh(report.final_metric.matrix)
    assert eigenvalues.min() >= -1e-8 * max(1.0, eigenvalues.max())


def test_objective_and_triggered_set_roundtrip():
    samples = tdl.generate_synthetic(make_synth(seed=3))
    metric = tdl.MetricMatrix.identity(8)
    cfg = tdl.TrainConfig()
    value = tdl.objective(metric, samples, cfg)
    assert value >= 0.0
    trig = tdl.triggered_set(metric, samples, cfg.rho)
    for t in trig.triplets:
        assert samples[t.anchor].person_id == samples[t.positive].person_id
        assert samples[t.anchor].person_id != samples[t.negative].person_id


def test_video_descriptor_dimensions():
    rng = np.random.default_rng(1)
    frames = rng.integers(0, 256, size=(3, 128, 48, 3), dtype=np.uint8)
    desc = tdl.video_descriptor(frames)
    assert desc.combined.shape == (2905,)
    assert desc.spacetime.shape == (1200,)
    assert desc.appearance.shape == (1705,)
    assert tdl.patch_count() == 155
    constant = np.full((4, 128, 48, 3), 77, dtype=np.uint8)
    assert np.all(tdl.video_descriptor(constant).spacetime == 0.0)


def test_cmc_and_benchmark():
    curve_probe = [
        tdl.LabeledSample(np.array([0.0]), "p0", "cam_a"),
        tdl.LabeledSample(np.array([10.0]), "p1", "cam_a"),
    ]
    gallery = [
        tdl.LabeledSample(np.array([1.0]), "p0", "cam_b"),
        tdl.LabeledSample(np.array([25.0]), "p1", "cam_b"),
    ]
    curve = tdl.cmc(tdl.MetricMatrix.identity(1), curve_probe, gallery)
    assert curve.rates == [0.5, 1.0]
    assert tdl.auc_cmc(curve) == pytest.approx(0.75)

    store = tdl.synthetic_store(make_synth(seed=5, n=12))
    protocol = tdl.ProtocolConfig()
    protocol.num_trials = 3
    protocol.seed = 2
    cfg = tdl.TrainConfig()
    cfg.max_iters = 40
    report = tdl.run_benchmark(store, tdl.Method.TDL, protocol, cfg)
    assert report.method == "tdl"
    assert 0.0 <= report.mean_auc <= 1.0
    assert len(report.per_trial) == 3


def test_split_shapes():
    ids = [f"id_{i:04d}" for i in range(178)]
    splits = tdl.make_splits(ids, 10, 1)
    assert len(splits) == 10
    assert all(len(s.test_ids) == 89 for s in splits)


def test_store_roundtrip(tmp_path):
    store = tdl.synthetic_store(make_synth(seed=9, n=6, dim=4))
    path = tmp_path / "store.tdlf"
    tdl.save_store(store, path)
    loaded = tdl.load_store(path)
    assert loaded.dim == 4
    assert len(loaded.records) == 12
    np.testing.assert_array_equal(loaded.records[0].feature, store.records[0].feature)


def test_errors_translate():
    with pytest.raises(ValueError):
        tdl.pairwise_diff_outer(np.zeros(2), np.zeros(3))
    with pytest.raises(RuntimeError):
        tdl.make_splits(["one"], 1, 0)
