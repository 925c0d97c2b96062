# Copyright 2026 The Glitchscope Authors
# SPDX-License-Identifier: Apache-2.0

import json

import numpy as np
import pytest

import glitchscope as gs


def test_blobs_shape_and_ids():
    data = gs.make_blobs(40, 3, 2, 6.0, seed=1)
    assert len(data) == 40
    assert data.features.shape == (40, 3)
    assert sorted(data.sample_ids) == list(range(40))
    assert data.digest() == gs.make_blobs(40, 3, 2, 6.0, seed=1).digest()


def test_dataset_from_numpy():
    data = gs.Dataset(np.array([[0.0, 1.0], [1.0, 0.0]]), [0, 1], 2, ids=[7, 9])
    assert data.sample_ids == [7, 9]
    with pytest.raises(ValueError):
        gs.Dataset(np.zeros((2, 2)), [0, 5], 2)


def test_flipped_labels_rank_high_under_self_influence():
    split = gs.stratified_split(gs.make_blobs(300, 4, 3, 6.0, seed=2), 0.8, seed=3)
    dirty = gs.inject(split.train, "uniform_noise", 0.1, seed=4)
    trail = gs.train(dirty.data, architecture="mlp", hidden_units=16, epochs=5)
    tensor = gs.tracin(trail, dirty.data, split.validation)
    assert tensor.epochs == 5
    assert tensor.cumulative.shape == (len(dirty.data), len(split.validation))
    np.testing.assert_allclose(sum(tensor.per_epoch_self), tensor.cumulative_self, rtol=1e-12)
    ranking = gs.signal("SI", tensor)
    assert ranking.signal == "SI" and ranking.scope == "cumulative"
    assert gs.f1_at_known_ratio(ranking, dirty.errors) >= 0.8


def test_gd_class_needs_labels():
    data = gs.make_blobs(60, 2, 2, 6.0, seed=5)
    split = gs.stratified_split(data, 0.8, seed=0)
    tensor = gs.tracin(gs.train(split.train, epochs=2), split.train, split.validation)
    with pytest.raises(ValueError):
        gs.signal("GDclass", tensor)
    ranking = gs.signal("GDclass", tensor, epoch=1, train_labels=split.train.labels,
                        val_labels=split.validation.labels)
    assert ranking.scope == "epoch_1"


def test_experiment_and_pipeline(tmp_path):
    config = json.dumps({
        "data": {"n": 120, "d": 2, "k": 2},
        "glitches": [{"type": "uniform_noise", "epsilon": 0.1}],
        "model": {"epochs": 3},
        "signals": {"per_epoch": False},
    })
    rows = gs.run_experiment(config, seed=1)
    assert {row["signal"] for row in rows} == {"SI", "MI", "AAI", "GDclass"}
    assert rows == gs.run_experiment(config, seed=1)
    first = gs.run_pipeline(config, out=str(tmp_path))
    again = gs.run_pipeline(config, out=str(tmp_path))
    assert all(skipped for _, skipped in again["stages"])
    assert first["rows"] == again["rows"]
    assert (tmp_path / "results.csv").exists()


def test_bad_config_is_a_value_error():
    with pytest.raises(ValueError):
        gs.run_experiment('{"glitches": [{"type": "uniform_noise", "epsilon": 1.5}]}')


def test_sweep_cells():
    config = json.dumps({"data": {"n": 100}, "glitches": [{"type": "uniform_noise"}], "model": {"epochs": 2},
                         "signals": {"kinds": ["SI"], "per_epoch": False}})
    cells = gs.sweep(config, [0.05, 0.2], [0, 1])
    assert [(c["ratio"], c["runs"]) for c in cells] == [(0.05, 2), (0.2, 2)]
