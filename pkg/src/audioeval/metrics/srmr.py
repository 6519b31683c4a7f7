"""Reference-free reverberation-sensitivity measure.

The signal passes a 23-channel 4th-order gammatone filterbank (ERB-spaced
centers from 125 Hz to 7.5 kHz), each channel envelope is taken as the
magnitude of its analytic signal, and modulation energy is accumulated over
256 ms Hann frames through eight Q=2 bandpass responses.  The score is the
energy in the four low modulation bands over the four high ones, so it is
invariant to gain and drops as reverberation smears the envelopes.
"""

from __future__ import annotations

import numpy as np
import scipy.signal

from ..audio_io import Waveform
from ..dsp import frame_signal
from ..errors import MetricInputError

SRMR_RATE = 16000
N_CHANNELS = 23
CENTER_LO = 125.0
CENTER_HI = 7500.0
GAMMATONE_ORDER = 4
ENV_FRAME_SEC = 0.256
ENV_SHIFT_SEC = 0.064
MODULATION_CENTERS = (4.0, 6.5, 10.7, 17.6, 28.9, 47.5, 78.1, 128.0)
MODULATION_Q = 2.0


def _erb_centers() -> np.ndarray:
    def rate_scale(f: np.ndarray) -> np.ndarray:
        return 21.4 * np.log10(1.0 + 0.00437 * f)

    def inverse(e: np.ndarray) -> np.ndarray:
        return (10.0 ** (e / 21.4) - 1.0) / 0.00437

    lo, hi = rate_scale(np.array([CENTER_LO, CENTER_HI]))
    return inverse(np.linspace(lo, hi, N_CHANNELS))


def _gammatone_bank(n_bins: int, rate: int) -> np.ndarray:
    """Zero-phase magnitude responses on the rfft grid, one row per channel."""
    freqs = np.fft.rfftfreq(2 * (n_bins - 1), 1.0 / rate)
    centers = _erb_centers()
    erb = 24.7 * (4.37 * centers / 1000.0 + 1.0)
    width = 1.019 * erb
    resp = (1.0 + ((freqs[None, :] - centers[:, None]) / width[:, None]) ** 2) ** (
        -GAMMATONE_ORDER / 2.0
    )
    return resp


def _modulation_weights(freqs: np.ndarray) -> np.ndarray:
    """Squared magnitudes of the Q=2 resonators, jointly scaled so the bank
    is passive (the responses never sum above unity power)."""
    weights = np.empty((len(MODULATION_CENTERS), len(freqs)))
    for b, fc in enumerate(MODULATION_CENTERS):
        bw = fc / MODULATION_Q
        num = (bw * freqs) ** 2
        weights[b] = num / ((fc**2 - freqs**2) ** 2 + num)
    total = weights.sum(axis=0).max()
    if total > 1.0:
        weights /= total
    return weights


def modulation_energy_grid(w: Waveform) -> tuple[np.ndarray, np.ndarray]:
    """Modulation energies per (acoustic channel, modulation band).

    Returns the 23 x 8 energy grid and, per channel, the total windowed
    envelope energy it was drawn from (for passivity accounting).
    """
    if w.rate != SRMR_RATE:
        raise MetricInputError(f"srmr requires {SRMR_RATE} Hz input, resample first")
    flen = int(round(ENV_FRAME_SEC * w.rate))
    fshift = int(round(ENV_SHIFT_SEC * w.rate))
    if len(w) < flen:
        raise MetricInputError("signal shorter than one envelope frame")
    spectrum = np.fft.rfft(w.samples)
    bank = _gammatone_bank(len(spectrum), w.rate)
    window = np.hanning(flen)
    freqs = np.fft.rfftfreq(flen, 1.0 / w.rate)
    mod_weights = _modulation_weights(freqs)

    grid = np.empty((N_CHANNELS, len(MODULATION_CENTERS)))
    env_energy = np.empty(N_CHANNELS)
    for ch in range(N_CHANNELS):
        channel = np.fft.irfft(spectrum * bank[ch], len(w))
        envelope = np.abs(scipy.signal.hilbert(channel))
        frames = frame_signal(envelope, flen, fshift) * window
        power = np.abs(np.fft.rfft(frames, flen)) ** 2 / flen
        env_energy[ch] = power.sum()
        grid[ch] = power.sum(axis=0) @ mod_weights.T
    return grid, env_energy


def srmr(w: Waveform) -> float:
    """Low-to-high modulation energy ratio; non-negative, higher is cleaner."""
    grid, _ = modulation_energy_grid(w)
    low = float(grid[:, :4].sum())
    high = float(grid[:, 4:].sum())
    if high <= 0.0:
        return 0.0
    return low / high
