import numpy as np
import pytest

from audioeval import MetricInputError, Waveform
from audioeval.metrics.srmr import modulation_energy_grid, srmr

FS = 16000


def _am_tone(seconds=2.0, am_hz=4.0, carrier_hz=800.0):
    t = np.arange(int(seconds * FS)) / FS
    env = 1.0 + 0.9 * np.sin(2 * np.pi * am_hz * t)
    return Waveform(0.3 * env * np.sin(2 * np.pi * carrier_hz * t), FS)


def _reverberate(w: Waveform, t60=0.8, seed=0):
    rng = np.random.default_rng(seed)
    n = int(t60 * w.rate)
    rir = np.zeros(n)
    rir[0] = 1.0
    decay = np.exp(-3.0 * np.log(10.0) * np.arange(n) / (t60 * w.rate))
    rir[1:] = 0.5 * rng.standard_normal(n - 1) * decay[1:]
    wet = np.convolve(w.samples, rir)[: len(w)]
    return Waveform(wet, w.rate)


class TestSrmr:
    def test_deterministic(self):
        w = _am_tone()
        assert srmr(w) == srmr(w)

    def test_reverberation_lowers_score(self):
        clean = _am_tone()
        assert srmr(clean) > srmr(_reverberate(clean))

    def test_nonnegative(self):
        for seed in range(5):
            x = np.random.default_rng(seed).standard_normal(FS)
            assert srmr(Waveform(0.3 * x, FS)) >= 0.0

    def test_gain_invariance(self):
        w = _am_tone(seconds=1.0)
        base = srmr(w)
        for alpha in (0.05, 3.7):
            scaled = Waveform(alpha * w.samples, FS)
            assert abs(srmr(scaled) - base) <= 1e-9 * base

    def test_modulation_grid_shape_and_positivity(self):
        grid, env_energy = modulation_energy_grid(_am_tone(seconds=1.0))
        assert grid.shape == (23, 8)
        assert np.all(grid >= 0.0)
        assert np.all(np.isfinite(grid))

    def test_filterbank_passivity_per_channel(self):
        grid, env_energy = modulation_energy_grid(_am_tone(seconds=1.5))
        assert np.all(grid.sum(axis=1) <= env_energy * (1.0 + 1e-9))

    def test_too_short_signal_rejected(self):
        with pytest.raises(MetricInputError, match="shorter"):
            srmr(Waveform(np.zeros(1000), FS))

    def test_requires_metric_rate(self):
        with pytest.raises(MetricInputError, match="16000"):
            srmr(Waveform(np.zeros(8000), 8000))

    def test_all_zero_signal_scores_zero(self):
        assert srmr(Waveform(np.zeros(FS), FS)) == 0.0
