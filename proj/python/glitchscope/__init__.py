# Copyright 2026 The Glitchscope Authors
# SPDX-License-Identifier: Apache-2.0
"""Detect data glitches with training-time influence signals."""

from glitchscope._glitchscope import (
    CheckpointTrail,
    Contaminated,
    Dataset,
    ErrorTable,
    InfluenceTensor,
    SignalRanking,
    SplitPair,
    accuracy,
    canonical_config,
    f1_at_known_ratio,
    inject,
    load_csv,
    make_blobs,
    run_experiment,
    run_pipeline,
    signal,
    spearman,
    stratified_split,
    stratified_subsample,
    sweep,
    tracin,
    train,
)

__all__ = [
    "CheckpointTrail",
    "Contaminated",
    "Dataset",
    "ErrorTable",
    "InfluenceTensor",
    "SignalRanking",
    "SplitPair",
    "accuracy",
    "canonical_config",
    "f1_at_known_ratio",
    "inject",
    "load_csv",
    "make_blobs",
    "run_experiment",
    "run_pipeline",
    "signal",
    "spearman",
    "stratified_split",
    "stratified_subsample",
    "sweep",
    "tracin",
    "train",
]
