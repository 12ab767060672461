"""
Tests for the magnitude detector, its registry and checkpoint container
"""
import json
import struct

import numpy as np
import pytest
import torch
from pydantic import ValidationError

from egovad.core.checkpoint import load_checkpoint, save_checkpoint
from egovad.core.errors import CheckpointError, ConfigError, ShapeError
from egovad.core.temporal_model import (
    DETECTORS,
    PLANNED_DETECTORS,
    build_detector,
    init_model,
    score_snippets,
)
from egovad.schemas.config import ModelConfig


def _params_equal(a, b):
    sa, sb = a.state_dict(), b.state_dict()
    return sa.keys() == sb.keys() and all(torch.equal(sa[k], sb[k]) for k in sa)


class TestInit:
    def test_same_seed_is_bit_identical(self, tiny_model_config):
        assert _params_equal(init_model(tiny_model_config), init_model(tiny_model_config))

    def test_different_seeds_differ(self):
        one = init_model(ModelConfig(input_dim=16, seed=1))
        two = init_model(ModelConfig(input_dim=16, seed=2))
        assert not _params_equal(one, two)

    def test_scorer_shapes(self):
        model = init_model(ModelConfig(input_dim=16))
        first = model.scorer[0]
        assert (first.in_features, first.out_features) == (16, 512)
        assert model.scorer[-1].out_features == 1
        assert all(conv.out_channels == 4 for conv in model.convs)

    def test_uniform_fan_in_bounds(self, tiny_model_config):
        model = init_model(tiny_model_config)
        for conv in model.convs:
            bound = 1.0 / np.sqrt(conv.in_channels * conv.kernel_size[0])
            assert conv.weight.abs().max().item() <= bound
        for layer in (model.scorer[0], model.attention.query):
            assert layer.weight.abs().max().item() <= 1.0 / np.sqrt(layer.in_features)

    def test_input_dim_not_divisible_by_branches(self):
        with pytest.raises(ValidationError):
            ModelConfig(input_dim=18)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValidationError):
            ModelConfig(input_dim=16, kernel_size=4)

    def test_explicit_branch_dim_must_fill_input(self):
        assert ModelConfig(input_dim=24, dilations=[1, 2], branch_dim=8).resolved_branch_dim == 8
        with pytest.raises(ValidationError):
            ModelConfig(input_dim=24, branch_dim=5)


class TestForward:
    def test_zero_parameters_are_neutral(self, rng, tiny_model_config):
        model = init_model(tiny_model_config)
        with torch.no_grad():
            for p in model.parameters():
                p.zero_()
        x = torch.as_tensor(rng.standard_normal((6, 16)), dtype=torch.float32)

        out = model(x)

        assert torch.equal(out.enhanced, x)
        assert torch.all(out.scores == 0.5)

    def test_output_contract(self, rng, tiny_model_config):
        model = init_model(tiny_model_config)
        for T in (1, 2, 5, 40):
            x = torch.as_tensor(10 * rng.standard_normal((T, 16)), dtype=torch.float32)
            out = model(x)
            assert out.enhanced.shape == (T, 16)
            assert out.scores.shape == out.magnitudes.shape == (T,)
            assert torch.all((out.scores >= 0) & (out.scores <= 1))
            assert torch.all(out.magnitudes >= 0)

    def test_single_snippet_attention_returns_value_projection(self, rng, tiny_model_config):
        model = init_model(tiny_model_config)
        x = torch.as_tensor(rng.standard_normal((1, 16)), dtype=torch.float32)
        with torch.no_grad():
            torch.testing.assert_close(model.attention(x), model.attention.value(x))

    def test_dimension_mismatch(self, tiny_model_config):
        model = init_model(tiny_model_config)
        with pytest.raises(ShapeError):
            model(torch.zeros((4, 12)))

    def test_score_snippets_returns_numpy(self, rng, tiny_model_config):
        result = score_snippets(init_model(tiny_model_config), rng.standard_normal((7, 16)))
        assert result["scores"].shape == (7,)
        assert result["magnitudes"].dtype == np.float64


class TestRegistry:
    def test_rtfm_registered(self):
        assert "rtfm" in DETECTORS

    @pytest.mark.parametrize("name", PLANNED_DETECTORS)
    def test_planned_detectors_not_implemented(self, name, tiny_model_config):
        with pytest.raises(ConfigError, match="not implemented"):
            build_detector(name, tiny_model_config)

    def test_unknown_detector(self, tiny_model_config):
        with pytest.raises(ConfigError, match="unknown"):
            init_model(tiny_model_config, detector="lstm")


class TestCheckpoint:
    def test_round_trip(self, tmp_path, tiny_model_config):
        model = init_model(tiny_model_config)
        metadata = {"ftb_mode": "M3", "snippet_len": 16, "lowpass": None}
        path = save_checkpoint(model, tmp_path / "run" / "model.ckpt", metadata=metadata)

        loaded, loaded_metadata = load_checkpoint(path)

        assert path.read_bytes()[:4] == b"FTBC"
        assert loaded_metadata == metadata
        assert loaded.config == tiny_model_config
        assert _params_equal(model, loaded)
        assert not loaded.training

    def test_saving_twice_is_byte_identical(self, tmp_path, tiny_model_config):
        model = init_model(tiny_model_config)
        a = save_checkpoint(model, tmp_path / "a.ckpt").read_bytes()
        b = save_checkpoint(model, tmp_path / "b.ckpt").read_bytes()
        assert a == b

    def test_bad_magic(self, tmp_path, tiny_model_config):
        path = save_checkpoint(init_model(tiny_model_config), tmp_path / "m.ckpt")
        path.write_bytes(b"XXXX" + path.read_bytes()[4:])
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path, tiny_model_config):
        path = save_checkpoint(init_model(tiny_model_config), tmp_path / "m.ckpt")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_payload_not_whole_floats(self, tmp_path, tiny_model_config):
        path = save_checkpoint(init_model(tiny_model_config), tmp_path / "m.ckpt")
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(CheckpointError, match="whole number"):
            load_checkpoint(path)

    def test_trailing_values_rejected(self, tmp_path, tiny_model_config):
        path = save_checkpoint(init_model(tiny_model_config), tmp_path / "m.ckpt")
        path.write_bytes(path.read_bytes() + bytes(8))
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(path)

    @pytest.mark.parametrize("key", ["detector", "tensors", "metadata"])
    def test_header_missing_key(self, tmp_path, tiny_model_config, key):
        path = save_checkpoint(init_model(tiny_model_config), tmp_path / "m.ckpt")
        raw = path.read_bytes()
        header_len = struct.unpack_from("<I", raw, 8)[0]
        header = json.loads(raw[12:12 + header_len])
        del header[key]
        new_header = json.dumps(header).encode("utf-8")
        path.write_bytes(raw[:8] + struct.pack("<I", len(new_header)) + new_header + raw[12 + header_len:])

        with pytest.raises(CheckpointError, match="unreadable"):
            load_checkpoint(path)

    def test_unknown_detector_in_header(self, tmp_path, tiny_model_config):
        path = save_checkpoint(init_model(tiny_model_config), tmp_path / "m.ckpt", detector="mgfn")
        with pytest.raises(CheckpointError, match="mgfn"):
            load_checkpoint(path)
