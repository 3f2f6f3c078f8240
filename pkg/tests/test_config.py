import json

import pytest

from docarg import config as config_mod
from docarg.exceptions import ConfigError


class TestDefaults:
    def test_span_defaults_mirror_reference_settings(self):
        cfg = config_mod.span_defaults()
        assert cfg.optimizer.epochs == 50
        assert cfg.optimizer.warmup_ratio == 0.2
        assert cfg.optimizer.transformer_lr == 3e-5
        assert cfg.optimizer.head_lr == 1e-4
        assert cfg.backend.dropout == 0.1
        assert cfg.optimizer.batch_size == 4
        assert cfg.structure.max_span_length == 8
        assert cfg.structure.max_input_length == 1024
        assert cfg.loss.alpha == 10.0
        assert cfg.loss.gamma == 2.0

    def test_prompt_defaults_mirror_reference_settings(self):
        cfg = config_mod.prompt_defaults()
        assert cfg.optimizer.steps == 10_000
        assert cfg.optimizer.warmup_ratio == 0.1
        assert cfg.optimizer.transformer_lr == 2e-5
        assert cfg.optimizer.max_grad_norm == 5.0
        assert cfg.optimizer.batch_size == 4
        assert cfg.structure.max_span_length == 10
        assert cfg.structure.window == 250
        assert cfg.backend.max_tokens == 500
        assert cfg.backend.layers == 17
        assert cfg.backend.decoder_layers == 7

    def test_toy_backend_is_desk_scale(self):
        cfg = config_mod.toy("span")
        assert (cfg.backend.layers, cfg.backend.d, cfg.backend.heads) == (2, 64, 4)
        assert (cfg.d_interaction, cfg.d_reduced) == (16, 8)


class TestValidation:
    def test_bad_variant(self):
        cfg = config_mod.toy("span")
        cfg.variant = "other"
        with pytest.raises(ConfigError, match="variant"):
            cfg.validate()

    def test_prompt_needs_decoder(self):
        cfg = config_mod.toy("prompt")
        cfg.backend.decoder_layers = 0
        with pytest.raises(ConfigError, match="decoder"):
            cfg.validate()

    def test_stride_window_relation(self):
        cfg = config_mod.toy("span")
        cfg.structure.stride = cfg.structure.window + 1
        with pytest.raises(ConfigError, match="stride"):
            cfg.validate()


class TestFiles:
    def test_json_round_trip(self, tmp_path):
        cfg = config_mod.toy("span", seed=42)
        path = tmp_path / "run.json"
        path.write_text(json.dumps(cfg.to_dict()))
        loaded = config_mod.load_config(path)
        assert loaded == cfg

    def test_toml_file(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            "\n".join([
                'variant = "span"',
                "seed = 9",
                "d_reduced = 4",
                "d_interaction = 8",
                "[backend]",
                "layers = 1",
                "d = 32",
                "heads = 2",
                "[optimizer]",
                "epochs = 3",
                "[structure]",
                "max_span_length = 2",
            ])
        )
        cfg = config_mod.load_config(path)
        assert cfg.seed == 9
        assert cfg.backend.layers == 1
        assert cfg.structure.max_span_length == 2

    def test_unknown_extension_rejected(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("variant: span")
        with pytest.raises(ConfigError, match="json or .toml"):
            config_mod.load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"variant": "span", "bogus": 1}))
        with pytest.raises(ConfigError):
            config_mod.load_config(path)