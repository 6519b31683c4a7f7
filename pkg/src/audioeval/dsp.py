"""Small shared DSP helpers used by several metric modules."""

from __future__ import annotations

import numpy as np


def next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def frame_signal(x: np.ndarray, flen: int, fshift: int) -> np.ndarray:
    """Frames fully contained in ``x``; shape (T, flen), T may be 0."""
    n = len(x)
    if n < flen:
        return np.empty((0, flen), dtype=x.dtype)
    count = 1 + (n - flen) // fshift
    idx = np.arange(flen)[None, :] + fshift * np.arange(count)[:, None]
    return x[idx]


def frame_centered(x: np.ndarray, flen: int, fshift: int) -> np.ndarray:
    """Reflect-padded frames centered every ``fshift`` samples; T = ceil(n/shift)."""
    if len(x) == 0:
        return np.empty((0, flen), dtype=x.dtype)
    half = flen // 2
    padded = np.pad(x, half, mode="reflect") if len(x) > 1 else np.full(flen, x[0])
    count = 1 + (len(x) - 1) // fshift
    idx = np.arange(flen)[None, :] + fshift * np.arange(count)[:, None]
    idx = np.minimum(idx, len(padded) - 1)
    return padded[idx]


def hz_to_mel(f: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_triangle_bank(n_bands: int, n_fft: int, rate: int) -> np.ndarray:
    """Triangular mel filters over the rfft grid; shape (n_bands, n_fft//2+1)."""
    freqs = np.fft.rfftfreq(n_fft, 1.0 / rate)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2.0), n_bands + 2))
    bank = np.zeros((n_bands, len(freqs)))
    for b in range(n_bands):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        rising = (freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - freqs) / max(hi - mid, 1e-12)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, 1.0)
    return bank
