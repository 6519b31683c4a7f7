import math

import pytest

from audioeval import (
    ConfigError,
    EvalConfig,
    MetricSpec,
    default_config,
    parse_config,
    serialize_config,
    validate,
)
from audioeval import registry
from audioeval.config import needs_reference

# Mirrors the published example configuration document, comments included.
EXAMPLE_CONFIG = """\
# Example YAML config

# mcd f0 related metrics
#  -- mcd: mel cepstral distortion
#  -- f0_corr: f0 correlation
#  -- f0_rmse: f0 root mean square error
- name: mcd_f0
  f0min: 40
  f0max: 800
  mcep_shift: 5
  mcep_fftl: 1024
  mcep_dim: 39
  mcep_alpha: 0.466
  seq_mismatch_tolerance: 0.1
  power_threshold: -20
  dtw: false

# signal related metrics
- name: signal_metric

# pesq related metrics
- name: pesq

# stoi related metrics
- name: stoi

# discrete speech metrics
- name: discrete_speech

# pseudo subjective metrics
- name: pseudo_mos
  predictor_types: ["utmos", "dnsmos", "plcmos", "singmos"]
  predictor_args:
    utmos:
      fs: 16000
    dnsmos:
      fs: 16000
    plcmos:
      fs: 16000

# speaker related metrics
- name: speaker
  model_tag: default

# torchaudio-squim
- name: squim_ref
- name: squim_no_ref

# An overall model on MOS-bench
- name: sheet_ssqa

# Word error rate
- name: whisper_wer
  model_tag: default
  beam_size: 5
  text_cleaner: whisper_basic

# Speech Enhancement-based Metrics
- name: se_snr
  model_tag: default
"""


class TestParseConfig:
    def test_example_document(self):
        cfg = parse_config(EXAMPLE_CONFIG)
        assert len(cfg.metrics) == 12
        first = cfg.metrics[0]
        assert first.name == "mcd_f0"
        assert first.params["f0min"] == 40
        assert first.params["f0max"] == 800
        assert first.params["mcep_alpha"] == 0.466
        assert first.params["power_threshold"] == -20
        assert first.params["dtw"] is False
        assert cfg.names()[:4] == ["mcd_f0", "signal_metric", "pesq", "stoi"]

    def test_minimal_document(self):
        cfg = parse_config("- name: stoi")
        assert len(cfg.metrics) == 1
        assert cfg.metrics[0].name == "stoi"
        assert cfg.metrics[0].params == {}

    def test_entry_without_name(self):
        with pytest.raises(ConfigError, match="name"):
            parse_config("- foo: bar")

    def test_malformed_document(self):
        with pytest.raises(ConfigError):
            parse_config("- name: [unclosed")

    def test_top_level_not_sequence(self):
        with pytest.raises(ConfigError, match="sequence"):
            parse_config("name: stoi")

    def test_duplicate_names_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("- name: stoi\n- name: stoi")

    def test_empty_document(self):
        with pytest.raises(ConfigError):
            parse_config("")

    def test_nested_params_preserved(self):
        cfg = parse_config(EXAMPLE_CONFIG)
        pseudo = {m.name: m for m in cfg.metrics}["pseudo_mos"]
        assert pseudo.params["predictor_types"] == ["utmos", "dnsmos", "plcmos", "singmos"]
        assert pseudo.params["predictor_args"]["utmos"]["fs"] == 16000


class TestSerializeRoundTrip:
    def test_round_trip_identity(self):
        cfg = EvalConfig(
            (
                MetricSpec("mcd_f0", {"f0min": 40.0, "dtw": True}),
                MetricSpec("stoi"),
                MetricSpec("density", {"k": 3}),
            )
        )
        assert parse_config(serialize_config(cfg)) == cfg

    def test_default_config_round_trips(self):
        cfg = default_config()
        assert parse_config(serialize_config(cfg)) == cfg


class TestValidate:
    def test_mcd_defaults(self):
        resolved = validate(parse_config("- name: mcd_f0"))
        params = resolved[0].params
        assert params == {
            "f0min": 40.0,
            "f0max": 800.0,
            "mcep_shift": 5.0,
            "mcep_fftl": 1024,
            "mcep_dim": 39,
            "mcep_alpha": 0.466,
            "seq_mismatch_tolerance": 0.1,
            "power_threshold": -20.0,
            "dtw": False,
        }

    def test_unknown_metric(self):
        with pytest.raises(ConfigError, match="unknown metric"):
            validate(parse_config("- name: nonexistent_metric"))

    def test_unknown_param_key(self):
        with pytest.raises(ConfigError, match="unknown parameter"):
            validate(parse_config("- name: mcd_f0\n  bogus_key: 3"))

    def test_inverted_f0_bounds(self):
        with pytest.raises(ConfigError, match="f0min"):
            validate(parse_config("- name: mcd_f0\n  f0min: 900\n  f0max: 800"))

    def test_fftl_must_be_power_of_two(self):
        with pytest.raises(ConfigError, match="power of two"):
            validate(parse_config("- name: mcd_f0\n  mcep_fftl: 1000"))

    def test_int_widens_to_float(self):
        resolved = validate(parse_config("- name: mcd_f0\n  f0min: 50"))
        assert resolved[0].params["f0min"] == 50.0
        assert isinstance(resolved[0].params["f0min"], float)

    def test_float_does_not_narrow_to_int(self):
        with pytest.raises(ConfigError, match="integer"):
            validate(parse_config("- name: mcd_f0\n  mcep_dim: 39.5"))

    def test_bool_not_accepted_as_number(self):
        with pytest.raises(ConfigError, match="number"):
            validate(parse_config("- name: mcd_f0\n  f0min: true"))

    def test_reference_flags(self):
        resolved = validate(parse_config("- name: stoi\n- name: srmr"))
        assert needs_reference(resolved) == ["stoi"]

    def test_deterministic_and_pure(self):
        cfg = parse_config("- name: mcd_f0\n  f0min: 50")
        first = validate(cfg)
        second = validate(cfg)
        assert [r.params for r in first] == [r.params for r in second]
        assert cfg.metrics[0].params == {"f0min": 50}  # source spec untouched

    def test_field_collision_is_error(self):
        text = (
            "- name: stoi\n"
            "- name: plugin\n"
            "  command: echo\n"
            "  fields: [stoi]\n"
        )
        with pytest.raises(ConfigError, match="stoi"):
            validate(parse_config(text))

    def test_embedding_and_waveform_mix_rejected(self):
        with pytest.raises(ConfigError, match="mixed"):
            validate(parse_config("- name: fad\n- name: stoi"))

    def test_plugin_requires_command_and_fields(self):
        with pytest.raises(ConfigError, match="required parameter"):
            validate(parse_config("- name: plugin\n  fields: [x]"))
        with pytest.raises(ConfigError, match="required parameter"):
            validate(parse_config("- name: plugin\n  command: echo"))

    def test_plugin_duplicate_fields(self):
        text = "- name: plugin\n  command: echo\n  fields: [a, a]\n"
        with pytest.raises(ConfigError, match="duplicate"):
            validate(parse_config(text))


class TestDefaultConfig:
    def test_contains_every_native_waveform_metric(self):
        assert default_config().names() == [
            "mcd_f0",
            "signal_metric",
            "stoi",
            "fwsegsnr",
            "wss",
            "cd",
            "llr",
            "log_wmse",
            "srmr",
        ]

    def test_validates(self):
        validate(default_config())


INF = math.inf

# (field, lo, hi, direction) straight from the published metric table.
EXPECTED_TABLE = {
    "srmr": [("srmr", 0.0, INF, "higher-better")],
    "mcd_f0": [
        ("mcd", 0.0, INF, "lower-better"),
        ("f0_rmse", 0.0, INF, "lower-better"),
        ("f0_corr", -1.0, 1.0, "higher-better"),
    ],
    "signal_metric": [
        ("sdr", -INF, INF, "higher-better"),
        ("sir", -INF, INF, "higher-better"),
        ("sar", -INF, INF, "higher-better"),
        ("si_snr", -INF, INF, "higher-better"),
        ("ci_sdr", -INF, INF, "higher-better"),
    ],
    "stoi": [("stoi", 0.0, 1.0, "higher-better")],
    "log_wmse": [("log_wmse", -INF, INF, "higher-better")],
    "fwsegsnr": [("fwsegsnr", -INF, INF, "higher-better")],
    "wss": [("wss", 0.0, INF, "lower-better")],
    "cd": [("cd", 0.0, INF, "lower-better")],
    "llr": [("llr", 0.0, INF, "higher-better")],
    "fad": [("fad", 0.0, INF, "lower-better")],
    "kld": [("kld", 0.0, INF, "lower-better")],
    "density": [("density", 0.0, INF, "higher-better")],
    "coverage": [("coverage", 0.0, 1.0, "higher-better")],
    "kid": [("kid", 0.0, INF, "lower-better")],
}


class TestRegistryTable:
    def test_ranges_and_directions_match_published_table(self):
        assert set(registry.native_names()) == set(EXPECTED_TABLE)
        for name, fields in EXPECTED_TABLE.items():
            desc = registry.get(name)
            got = [(f.name, f.lo, f.hi, f.direction) for f in desc.output_fields]
            assert got == fields, name

    def test_categories_are_the_four_types(self):
        cats = {registry.get(n).category for n in registry.native_names()}
        assert cats <= set(registry.CATEGORIES)
        assert {"independent", "dependent", "distributional"} <= cats

    def test_required_rates(self):
        assert registry.get("stoi").required_rate == 10000
        assert registry.get("srmr").required_rate == 16000
        assert registry.get("mcd_f0").required_rate is None
