"""
Tests for manifest I/O and weak-supervision validation
"""
import itertools

import numpy as np
import pytest

from egovad.core.errors import ManifestFormatError
from egovad.core.manifest import (
    NO_ANOMALY_TRAIN,
    NO_NORMAL_TRAIN,
    load_manifest,
    resolve_feature_path,
    validate_manifest,
    write_manifest,
)
from tests.conftest import make_entry, write_features


def _codes(report):
    return sorted(v.code for v in report.violations)


def test_well_formed_manifest_passes(valid_manifest):
    report = validate_manifest(valid_manifest)
    assert report.ok
    assert report.messages() == []


def test_anomaly_only_train_split_violates_precondition():
    entries = [
        make_entry("a1", label="anomaly"),
        make_entry("a2", label="anomaly"),
    ]
    report = validate_manifest(entries)

    assert not report.ok
    assert any(v.message == NO_NORMAL_TRAIN for v in report.violations)


def test_normal_only_train_split_violates_precondition():
    report = validate_manifest([make_entry("n1")])
    assert [v.message for v in report.violations] == [NO_ANOMALY_TRAIN]


def test_test_anomaly_without_intervals(valid_manifest):
    entries = valid_manifest + [make_entry("t3", split="test", label="anomaly", class_tag="VP")]
    report = validate_manifest(entries)

    assert [(v.code, v.video_id) for v in report.violations] == [("interval", "t3")]


def test_test_anomaly_without_class_tag(valid_manifest):
    entries = valid_manifest + [make_entry("t3", split="test", label="anomaly", intervals=[(0, 2)])]
    assert _codes(validate_manifest(entries)) == ["class_tag"]


@pytest.mark.parametrize("entry", [
    make_entry("bad", label="anomaly", intervals=[(5, 5)]),
    make_entry("bad", label="anomaly", intervals=[(8, 4)]),
    make_entry("bad", label="anomaly", intervals=[(-1, 3)]),
    make_entry("bad", label="anomaly", intervals=[(10, 21)]),
    make_entry("bad", label="anomaly", intervals=[(5, 10), (8, 12)]),
    make_entry("bad", intervals=[(1, 2)]),
])
def test_interval_violations(valid_manifest, entry):
    report = validate_manifest(valid_manifest + [entry])
    assert "interval" in _codes(report)
    assert {v.video_id for v in report.violations} == {"bad"}


def test_frame_count_must_be_positive(valid_manifest):
    report = validate_manifest(valid_manifest + [make_entry("empty", frame_count=0)])
    assert _codes(report) == ["frame_count"]


def test_duplicate_ids(valid_manifest):
    report = validate_manifest(valid_manifest + [make_entry("n1")])
    assert [(v.code, v.video_id) for v in report.violations] == [("duplicate_id", "n1")]


def test_report_is_order_insensitive(valid_manifest):
    entries = valid_manifest + [
        make_entry("t3", split="test", label="anomaly", class_tag="VP"),
        make_entry("n1"),
        make_entry("x", frame_count=0),
    ]
    expected = validate_manifest(entries)
    for permutation in itertools.islice(itertools.permutations(entries), 0, 5000, 97):
        assert validate_manifest(list(permutation)) == expected


def test_deep_check_decodes_feature_files(tmp_path, valid_manifest):
    for entry in valid_manifest[1:]:
        write_features(tmp_path / entry.feature_path, np.zeros((entry.frame_count, 4)))
    (tmp_path / "features").mkdir(exist_ok=True)
    (tmp_path / "features" / "n1.ftbf").write_bytes(b"garbage")

    assert validate_manifest(valid_manifest).ok
    report = validate_manifest(valid_manifest, deep_check=True, base_dir=tmp_path)

    assert [(v.code, v.video_id) for v in report.violations] == [("feature_file", "n1")]


def test_deep_check_reports_missing_file(tmp_path, valid_manifest):
    report = validate_manifest(valid_manifest, deep_check=True, base_dir=tmp_path)
    assert len(report.violations) == len(valid_manifest)
    assert set(_codes(report)) == {"feature_file"}


def test_manifest_file_round_trip(tmp_path, valid_manifest):
    path = write_manifest(valid_manifest, tmp_path / "m" / "manifest.jsonl")
    assert load_manifest(path) == valid_manifest


def test_malformed_line_names_line_number(tmp_path, valid_manifest):
    path = write_manifest(valid_manifest[:1], tmp_path / "manifest.jsonl")
    with open(path, "a", encoding="utf-8") as f:
        f.write('{"video_id": "x", "split": "validation"}\n')

    with pytest.raises(ManifestFormatError) as excinfo:
        load_manifest(path)
    assert excinfo.value.line_number == 2


def test_relative_feature_paths_resolve_against_manifest_dir(tmp_path):
    entry = make_entry("v", feature_path="features/v.ftbf")
    assert resolve_feature_path(entry, tmp_path) == tmp_path / "features" / "v.ftbf"

    absolute = make_entry("w", feature_path=str(tmp_path / "w.ftbf"))
    assert resolve_feature_path(absolute, "/elsewhere") == tmp_path / "w.ftbf"
