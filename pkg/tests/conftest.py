import numpy as np
import pytest

from audioeval import Waveform, write_wav


def tone(freq: float, seconds: float = 1.0, rate: int = 16000, amp: float = 0.5) -> Waveform:
    t = np.arange(int(round(seconds * rate))) / rate
    return Waveform(amp * np.sin(2 * np.pi * freq * t), rate)


def harmonic_voice(seed: int, seconds: float = 1.0, rate: int = 16000) -> Waveform:
    """Pitched pseudo-voice: random f0 with vibrato, a few harmonics, no silence."""
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    t = np.arange(n) / rate
    f0 = rng.uniform(120.0, 280.0)
    f0_track = f0 * (1.0 + 0.03 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t))
    phase = 2.0 * np.pi * np.cumsum(f0_track) / rate
    sig = np.zeros(n)
    for h, gain in enumerate((0.5, 0.25, 0.12, 0.06), start=1):
        sig += gain * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    sig += 0.01 * rng.standard_normal(n)
    return Waveform(0.5 * sig / np.abs(sig).max(), rate)


def speech_shaped(seed: int, seconds: float = 1.0, rate: int = 16000) -> Waveform:
    """Syllabic-rate amplitude-modulated lowpass noise, a speech stand-in."""
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    noise = rng.standard_normal(n)
    spectrum = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    spectrum *= 1.0 / np.sqrt(1.0 + (freqs / 500.0) ** 2)
    shaped = np.fft.irfft(spectrum, n)
    t = np.arange(n) / rate
    am = 0.25 + 0.75 * 0.5 * (1.0 + np.sin(2 * np.pi * 4.0 * t))
    sig = shaped * am
    return Waveform(0.5 * sig / np.abs(sig).max(), rate)


def add_noise(w: Waveform, snr_db: float, seed: int = 0) -> Waveform:
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(w))
    sig_power = float(np.mean(w.samples**2))
    noise_power = float(np.mean(noise**2))
    scale = np.sqrt(sig_power / (noise_power * 10.0 ** (snr_db / 10.0)))
    return Waveform(w.samples + scale * noise, w.rate)


@pytest.fixture
def wav_corpus(tmp_path):
    """3-utterance scp corpus: (pred_scp, gt_scp, ids). Candidates are the
    references plus light noise."""
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    ids = []
    pred_lines = []
    gt_lines = []
    for i in range(3):
        utt = f"utt{i}"
        clean = harmonic_voice(seed=100 + i)
        noisy = add_noise(clean, snr_db=20.0, seed=i)
        write_wav(gt_dir / f"{utt}.wav", clean.samples, clean.rate)
        write_wav(pred_dir / f"{utt}.wav", noisy.samples, noisy.rate)
        ids.append(utt)
        pred_lines.append(f"{utt} {pred_dir / f'{utt}.wav'}")
        gt_lines.append(f"{utt} {gt_dir / f'{utt}.wav'}")
    pred_scp = tmp_path / "pred.scp"
    gt_scp = tmp_path / "gt.scp"
    pred_scp.write_text("\n".join(pred_lines) + "\n")
    gt_scp.write_text("\n".join(gt_lines) + "\n")
    return pred_scp, gt_scp, ids
