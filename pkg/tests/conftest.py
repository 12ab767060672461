"""
Shared fixtures for the egovad test suite
"""
import numpy as np
import pytest

from egovad.core.features import FeatureSequence, encode_feature_file
from egovad.schemas.config import ModelConfig, SynthConfig, TrainConfig
from egovad.schemas.manifest import ClassTag, ManifestEntry, Split, VideoLabel
from egovad.services.dataset_builder import generate_synthetic_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tiny_model_config():
    """D=16 detector with narrow scorer, small enough for finite differences"""
    return ModelConfig(input_dim=16, scorer_hidden=[8, 4], seed=3)


@pytest.fixture
def tiny_train_config():
    return TrainConfig(k=2, epochs=2, snippet_len=8, seed=0)


@pytest.fixture
def tiny_dataset(tmp_path):
    """4 normal + 4 anomalous videos of 64 frames, D=16 (3 anomalous train, 1 test)"""
    cfg = SynthConfig(n_normal=4, n_anomaly=4, T=64, D=16, anomaly_len=16, seed=3)
    return generate_synthetic_dataset(cfg, tmp_path / "tiny")


def make_entry(video_id, split="train", label="normal", class_tag=None,
               frame_count=20, intervals=None, feature_path=None):
    return ManifestEntry(
        video_id=video_id,
        split=Split(split),
        label=VideoLabel(label),
        class_tag=ClassTag(class_tag) if class_tag else None,
        feature_path=feature_path or f"features/{video_id}.ftbf",
        frame_count=frame_count,
        anomaly_intervals=intervals or [],
    )


def write_features(path, data):
    return encode_feature_file(FeatureSequence(np.asarray(data, dtype=np.float32)), path)


@pytest.fixture
def valid_manifest():
    """2 normal + 2 anomalous train videos and 2 annotated test anomalies"""
    return [
        make_entry("n1"),
        make_entry("n2"),
        make_entry("a1", label="anomaly", class_tag="ST", intervals=[(4, 9)]),
        make_entry("a2", label="anomaly"),
        make_entry("t1", split="test", label="anomaly", class_tag="TC", intervals=[(2, 6)]),
        make_entry("t2", split="test", label="anomaly", class_tag="OO", intervals=[(0, 3), (10, 20)]),
    ]
