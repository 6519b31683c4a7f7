"""Time-domain reference-based metrics.

Covers the subspace-projection separation measures (SDR/SIR/SAR), the
scale-invariant SNR, the convolutive-invariant SDR, frequency-weighted
segmental SNR, and the perceptually weighted log error ratio.  All functions
take mono waveforms at a shared rate and are pure.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.signal

from ..audio_io import Waveform
from ..dsp import frame_signal, mel_triangle_bank, next_pow2
from ..errors import MetricComputeError, MetricInputError

# Residual energy below this fraction of the target energy is treated as a
# perfect reconstruction and reported as +inf.
PERFECT_RTOL = 1e-12

# Signal metrics are sample-aligned: beyond this relative length mismatch the
# inputs are considered different utterances.
MAX_LENGTH_MISMATCH = 0.25

FWSEGSNR_BANDS = 23
FWSEGSNR_CLAMP = (-10.0, 35.0)
FWSEGSNR_GAMMA = 0.2
FWSEGSNR_SILENCE_DB = -40.0

LOG_WMSE_TAPS = 127
LOG_WMSE_EPS = 1e-8


def _common_length(cand: Waveform, ref: Waveform) -> tuple[np.ndarray, np.ndarray]:
    if cand.rate != ref.rate:
        raise MetricInputError(
            f"rate mismatch: candidate {cand.rate} Hz vs reference {ref.rate} Hz"
        )
    nc, nr = len(cand), len(ref)
    if min(nc, nr) == 0:
        raise MetricInputError("empty waveform")
    if abs(nc - nr) / max(nc, nr) > MAX_LENGTH_MISMATCH:
        raise MetricInputError(
            f"length mismatch beyond {MAX_LENGTH_MISMATCH:.0%}: {nc} vs {nr} samples"
        )
    n = min(nc, nr)
    return cand.samples[:n], ref.samples[:n]


def _ratio_db(num: float, den: float) -> float:
    """10*log10(num/den), +inf when the denominator is negligible."""
    if num <= 0.0:
        return math.inf if den <= 0.0 else -math.inf
    if den <= PERFECT_RTOL * num:
        return math.inf
    return 10.0 * math.log10(num / den)


def si_snr(cand: Waveform, ref: Waveform) -> float:
    """Scale-invariant signal-to-noise ratio in dB (+inf if cand spans ref)."""
    x, s = _common_length(cand, ref)
    x = x - x.mean()
    s = s - s.mean()
    s_energy = float(np.dot(s, s))
    if s_energy <= 0.0:
        raise MetricInputError("all-zero reference")
    target = (float(np.dot(x, s)) / s_energy) * s
    noise = x - target
    return _ratio_db(float(np.dot(target, target)), float(np.dot(noise, noise)))


def _shift_correlations(a: np.ndarray, b: np.ndarray, lags: int) -> np.ndarray:
    """c[l] = sum_m a[m] * b[m+l] for l in [-(lags-1), lags-1], FFT accelerated."""
    n = max(len(a), len(b))
    nfft = next_pow2(n + lags)
    fa = np.fft.rfft(a, nfft)
    fb = np.fft.rfft(b, nfft)
    full = np.fft.irfft(np.conj(fa) * fb, nfft)
    pos = full[:lags]
    neg = full[-(lags - 1):][::-1] if lags > 1 else np.empty(0)
    return pos, neg  # c[0..lags-1], c[-1..-(lags-1)]


def _fir_fit(refs: list[np.ndarray], cand: np.ndarray, taps: int) -> list[np.ndarray]:
    """Least-squares FIR coefficients projecting cand onto the refs' shift spans.

    Shifted copies are zero padded to length n + taps - 1, which makes every
    Gram block exactly Toeplitz in the raw correlations.  The normal equations
    get a relative ridge so near-singular systems stay solvable.
    """
    k = len(refs)
    size = k * taps
    gram = np.empty((size, size))
    rhs = np.empty(size)
    for i in range(k):
        pos_i, _ = _shift_correlations(refs[i], cand, taps)
        rhs[i * taps : (i + 1) * taps] = pos_i
        for j in range(k):
            pos, neg = _shift_correlations(refs[i], refs[j], taps)
            col = pos  # c_ij(p), p = 0..taps-1
            row = np.concatenate(([pos[0]], neg))  # c_ij(-q), q = 0..taps-1
            gram[i * taps : (i + 1) * taps, j * taps : (j + 1) * taps] = scipy.linalg.toeplitz(
                col, row
            )
    ridge = 1e-10 * np.trace(gram) / size
    gram[np.diag_indices(size)] += ridge
    try:
        coeffs = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise MetricComputeError(f"singular projection system: {exc}") from exc
    return [coeffs[i * taps : (i + 1) * taps] for i in range(k)]


def _project(refs: list[np.ndarray], coeffs: list[np.ndarray], out_len: int) -> np.ndarray:
    proj = np.zeros(out_len)
    for r, c in zip(refs, coeffs):
        conv = np.convolve(r, c)
        proj[: len(conv)] += conv
    return proj


def bss_eval(
    cand: Waveform, refs: list[Waveform], filter_len: int = 512
) -> dict[str, float | None]:
    """Separation quality of ``cand`` against ``refs[0]`` with the other
    references treated as interference.

    The candidate is decomposed into a target part (projection onto delayed
    copies of the first reference), an interference part (projection onto all
    references' delay spans, minus the target), and an artifact remainder.
    With a single reference the interference subspace is empty and SIR is
    ``None``.
    """
    if not refs:
        raise MetricInputError("bss_eval needs at least one reference")
    pairs = [_common_length(cand, r) for r in refs]
    n = min(len(p[0]) for p in pairs)
    x = pairs[0][0][:n]
    ref_arrays = [p[1][:n] for p in pairs]
    if any(float(np.dot(r, r)) <= 0.0 for r in ref_arrays):
        raise MetricInputError("all-zero reference")
    out_len = n + filter_len - 1
    x_pad = np.zeros(out_len)
    x_pad[:n] = x

    coeffs0 = _fir_fit(ref_arrays[:1], x, filter_len)
    s_target = _project(ref_arrays[:1], coeffs0, out_len)
    if len(ref_arrays) > 1:
        coeffs_all = _fir_fit(ref_arrays, x, filter_len)
        proj_all = _project(ref_arrays, coeffs_all, out_len)
    else:
        proj_all = s_target
    e_interf = proj_all - s_target
    e_artif = x_pad - proj_all

    target_e = float(np.dot(s_target, s_target))
    interf_e = float(np.dot(e_interf, e_interf))
    artif_e = float(np.dot(e_artif, e_artif))
    sdr = _ratio_db(target_e, interf_e + artif_e)
    sir = _ratio_db(target_e, interf_e) if len(ref_arrays) > 1 else None
    sar = _ratio_db(target_e + interf_e, artif_e)
    return {"sdr": sdr, "sir": sir, "sar": sar}


def ci_sdr(cand: Waveform, ref: Waveform, filter_len: int = 512) -> float:
    """SDR after fitting the best FIR (``filter_len`` taps) from ref to cand."""
    x, r = _common_length(cand, ref)
    if float(np.dot(r, r)) <= 0.0:
        raise MetricInputError("all-zero reference")
    out_len = len(x) + filter_len - 1
    x_pad = np.zeros(out_len)
    x_pad[: len(x)] = x
    coeffs = _fir_fit([r], x, filter_len)
    est = _project([r], coeffs, out_len)
    resid = x_pad - est
    return _ratio_db(float(np.dot(est, est)), float(np.dot(resid, resid)))


# --- frequency-weighted segmental SNR ---------------------------------------


def fwsegsnr_from_bands(ref_bands: np.ndarray, cand_bands: np.ndarray) -> float:
    """Score from per-frame band magnitudes, shape (T, n_bands).

    Per band: snr = 10*log10(X^2 / (X - Xhat)^2) clamped to [-10, 35] dB,
    weighted by X^0.2; frames are averaged after the band-weighted mean.
    """
    ref_bands = np.asarray(ref_bands, dtype=np.float64)
    cand_bands = np.asarray(cand_bands, dtype=np.float64)
    if ref_bands.shape != cand_bands.shape or ref_bands.ndim != 2 or ref_bands.shape[0] == 0:
        raise MetricInputError("band arrays must be equal non-empty (T, bands) shapes")
    num = ref_bands**2
    den = (ref_bands - cand_bands) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = 10.0 * np.log10(num / den)
    snr[den == 0.0] = FWSEGSNR_CLAMP[1]  # zero error: clamps at the ceiling
    snr = np.clip(snr, *FWSEGSNR_CLAMP)
    weights = ref_bands**FWSEGSNR_GAMMA
    wsum = weights.sum(axis=1)
    frame_ok = wsum > 0.0
    if not np.any(frame_ok):
        raise MetricInputError("no non-silent frames")
    frame_snr = (weights[frame_ok] * snr[frame_ok]).sum(axis=1) / wsum[frame_ok]
    return float(frame_snr.mean())


def fwsegsnr(cand: Waveform, ref: Waveform) -> float:
    """Frequency-weighted segmental SNR over 23 mel bands, 25 ms / 10 ms frames."""
    x, s = _common_length(cand, ref)
    rate = ref.rate
    flen = int(round(0.025 * rate))
    fshift = int(round(0.010 * rate))
    window = np.hanning(flen)
    ref_frames = frame_signal(s, flen, fshift) * window
    cand_frames = frame_signal(x, flen, fshift) * window
    if ref_frames.shape[0] == 0:
        raise MetricInputError("signal shorter than one analysis frame")
    nfft = next_pow2(flen)
    bank = mel_triangle_bank(FWSEGSNR_BANDS, nfft, rate)
    ref_power = np.abs(np.fft.rfft(ref_frames, nfft)) ** 2 @ bank.T
    cand_power = np.abs(np.fft.rfft(cand_frames, nfft)) ** 2 @ bank.T
    frame_energy = ref_power.sum(axis=1)
    peak = frame_energy.max()
    keep = frame_energy > peak * 10.0 ** (FWSEGSNR_SILENCE_DB / 10.0)
    if not np.any(keep):
        raise MetricInputError("no non-silent frames")
    return fwsegsnr_from_bands(np.sqrt(ref_power[keep]), np.sqrt(cand_power[keep]))


# --- log-weighted error ratio ------------------------------------------------


def _a_weight_gain(freqs: np.ndarray) -> np.ndarray:
    """Linear A-weighting magnitude, unity at 1 kHz."""
    def ra(f: np.ndarray) -> np.ndarray:
        f2 = np.square(f)
        return (12194.0**2 * f2 * f2) / (
            (f2 + 20.6**2)
            * np.sqrt((f2 + 107.7**2) * (f2 + 737.9**2))
            * (f2 + 12194.0**2)
        )

    return ra(freqs) / ra(np.array([1000.0]))[0]


@lru_cache(maxsize=16)
def _a_weight_fir(rate: int) -> np.ndarray:
    grid = np.linspace(0.0, rate / 2.0, 256)
    gains = _a_weight_gain(grid)
    gains[0] = 0.0
    return scipy.signal.firwin2(LOG_WMSE_TAPS, grid / (rate / 2.0), gains)


def log_wmse(cand: Waveform, ref: Waveform) -> float:
    """Perceptually weighted error-to-reference log ratio (higher is better).

    Both the error signal and the reference pass through a fixed 127-tap
    A-weighting FIR designed for the input rate; the epsilon floor is relative
    to the weighted reference energy, which keeps the score gain-invariant.
    """
    x, s = _common_length(cand, ref)
    fir = _a_weight_fir(ref.rate)
    w_err = np.convolve(x - s, fir)
    w_ref = np.convolve(s, fir)
    ref_energy = float(np.dot(w_ref, w_ref))
    if ref_energy <= 0.0:
        raise MetricInputError("all-zero reference after weighting")
    err_energy = float(np.dot(w_err, w_err))
    eps = LOG_WMSE_EPS * ref_energy
    return -10.0 * math.log10((err_energy + eps) / (ref_energy + eps))


def signal_metric(
    cand: Waveform, ref: Waveform, filter_len: int = 512
) -> dict[str, float | None]:
    """Bundle of the five time-domain measures emitted by one config entry."""
    out = bss_eval(cand, [ref], filter_len=filter_len)
    out["si_snr"] = si_snr(cand, ref)
    out["ci_sdr"] = ci_sdr(cand, ref, filter_len=filter_len)
    return out
