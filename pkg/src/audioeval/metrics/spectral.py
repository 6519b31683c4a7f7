"""Frame-spectral reference-based metrics and the pitch tracker.

The mel cepstrum is computed by warping the log-magnitude spectrum onto an
all-pass frequency axis and inverse-transforming, rather than through an
iterative solver; the shared systematic difference cancels in the distortion
measure.  Pitch uses a cumulative-mean-normalized difference tracker with
parabolic refinement of the period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from ..audio_io import Waveform, resample
from ..dsp import frame_centered, frame_signal, next_pow2
from ..errors import MetricComputeError, MetricInputError
from .signal import _common_length

MCD_CONST = 10.0 * math.sqrt(2.0) / math.log(10.0)
CD_CONST = 10.0 / math.log(10.0)
CD_CLAMP = 10.0
WARP_DENSE_FACTOR = 4
TRIM_FRACTION = 0.95
YIN_THRESHOLD = 0.15

STOI_RATE = 10000
STOI_FRAME = 256
STOI_HOP = 128
STOI_NFFT = 512
STOI_NBANDS = 15
STOI_MIN_FREQ = 150.0
STOI_SEG = 30
STOI_BETA = -15.0
STOI_DYN_RANGE = 40.0

WSS_KMAX = 20.0
WSS_KLOCMAX = 1.0

# Critical band centers and bandwidths (Hz) for the spectral-slope measure.
WSS_CENT_FREQ = (
    50.0, 120.0, 190.0, 260.0, 330.0, 400.0, 470.0, 540.0, 617.372,
    703.378, 798.717, 904.128, 1020.38, 1148.30, 1288.72, 1442.54,
    1610.70, 1794.16, 1993.93, 2211.08, 2446.71, 2701.97, 2978.04,
    3276.17, 3597.63,
)
WSS_BANDWIDTH = (
    70.0, 70.0, 70.0, 70.0, 70.0, 70.0, 70.0, 77.3724, 86.0056,
    95.3398, 105.411, 116.256, 127.914, 140.423, 153.823, 168.154,
    183.457, 199.776, 217.153, 235.631, 255.255, 276.072, 298.126,
    321.465, 346.136,
)


@dataclass(frozen=True)
class McdF0Params:
    f0min: float = 40.0
    f0max: float = 800.0
    mcep_shift: float = 5.0
    mcep_fftl: int = 1024
    mcep_dim: int = 39
    mcep_alpha: float = 0.466
    seq_mismatch_tolerance: float = 0.1
    power_threshold: float = -20.0
    dtw: bool = False

    @classmethod
    def from_dict(cls, params: dict[str, Any]) -> "McdF0Params":
        return cls(**params)


@dataclass(eq=False)
class MelCepstrumTrack:
    frames: np.ndarray  # (T, mcep_dim + 1)
    frame_shift: float  # ms
    powers: np.ndarray  # (T,) frame power before windowing


@dataclass(eq=False)
class PitchTrack:
    f0: np.ndarray  # Hz, 0 where unvoiced
    voiced: np.ndarray  # bool


# --- mel cepstrum ------------------------------------------------------------


def _warp_axis(omega: np.ndarray, alpha: float) -> np.ndarray:
    return omega + 2.0 * np.arctan(
        alpha * np.sin(omega) / (1.0 - alpha * np.cos(omega))
    )


def warp_cepstrum(log_spectrum: np.ndarray, alpha: float, n_coefs: int) -> np.ndarray:
    """Cepstral coefficients of a log-magnitude half spectrum after frequency
    warping by the all-pass transform with coefficient ``alpha``.

    ``log_spectrum`` holds fftl//2 + 1 uniform samples over [0, pi].  The
    warped spectrum is resampled by cubic interpolation through a dense grid,
    then inverse-transformed; the first ``n_coefs`` coefficients are returned.
    """
    half = len(log_spectrum) - 1
    fftl = 2 * half
    omega = np.pi * np.arange(half + 1) / half
    if alpha == 0.0:
        warped = np.asarray(log_spectrum, dtype=np.float64)
    else:
        dense = np.pi * np.arange(WARP_DENSE_FACTOR * half + 1) / (WARP_DENSE_FACTOR * half)
        dense_spec = CubicSpline(omega, log_spectrum)(dense)
        warped_axis = _warp_axis(dense, alpha)
        warped = CubicSpline(warped_axis, dense_spec)(omega)
    cep = np.fft.irfft(warped, fftl)
    return cep[:n_coefs]


def mcep_from_frame(frame: np.ndarray, p: McdF0Params) -> np.ndarray:
    """Mel cepstrum (c0..c_dim) of one raw frame of length mcep_fftl."""
    windowed = frame * np.hanning(len(frame))
    mag = np.abs(np.fft.rfft(windowed, p.mcep_fftl))
    peak = mag.max()
    floor = peak * 1e-10 if peak > 0.0 else 1e-10
    log_spec = np.log(np.maximum(mag, floor))
    return warp_cepstrum(log_spec, p.mcep_alpha, p.mcep_dim + 1)


def extract_mcep(w: Waveform, p: McdF0Params) -> MelCepstrumTrack:
    """Mel-cepstral track on reflect-padded centered frames."""
    if len(w) == 0:
        raise MetricInputError("empty waveform")
    fftl = p.mcep_fftl
    if fftl & (fftl - 1):
        raise MetricInputError(f"mcep_fftl must be a power of two, got {fftl}")
    shift = max(1, int(round(p.mcep_shift * w.rate / 1000.0)))
    frames = frame_centered(w.samples, fftl, shift)
    powers = (frames**2).mean(axis=1)
    coefs = np.stack([mcep_from_frame(f, p) for f in frames])
    return MelCepstrumTrack(frames=coefs, frame_shift=p.mcep_shift, powers=powers)


def _drop_silence(track: MelCepstrumTrack, threshold_db: float) -> np.ndarray:
    peak = track.powers.max()
    if peak <= 0.0:
        raise MetricInputError("all frames below power threshold (silent input)")
    keep = track.powers > peak * 10.0 ** (threshold_db / 10.0)
    if not np.any(keep):
        raise MetricInputError("all frames below power threshold")
    return track.frames[keep]


def _dtw_path(cost: np.ndarray) -> list[tuple[int, int]]:
    """Monotone alignment path minimizing summed cost (diag/up/left steps)."""
    t_a, t_b = cost.shape
    acc = np.full((t_a, t_b), np.inf)
    acc[0, 0] = cost[0, 0]
    for i in range(t_a):
        for j in range(t_b):
            if i == 0 and j == 0:
                continue
            best = np.inf
            if i > 0:
                best = min(best, acc[i - 1, j])
            if j > 0:
                best = min(best, acc[i, j - 1])
            if i > 0 and j > 0:
                best = min(best, acc[i - 1, j - 1])
            acc[i, j] = cost[i, j] + best
    path = [(t_a - 1, t_b - 1)]
    i, j = t_a - 1, t_b - 1
    while i > 0 or j > 0:
        candidates = []
        if i > 0 and j > 0:
            candidates.append((acc[i - 1, j - 1], i - 1, j - 1))
        if i > 0:
            candidates.append((acc[i - 1, j], i - 1, j))
        if j > 0:
            candidates.append((acc[i, j - 1], i, j - 1))
        _, i, j = min(candidates)
        path.append((i, j))
    path.reverse()
    return path


def mcd_from_cepstra(cand_mc: np.ndarray, ref_mc: np.ndarray, dtw: bool = False) -> float:
    """Mel-cepstral distortion between aligned coefficient tracks.

    Tracks are (T, n_coefs) with c0 in column 0, which is excluded.  Without
    DTW the shorter track length is used; with DTW the tracks are aligned on
    c1.. Euclidean distance first.
    """
    a = np.asarray(cand_mc, dtype=np.float64)[:, 1:]
    b = np.asarray(ref_mc, dtype=np.float64)[:, 1:]
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise MetricInputError("empty cepstral track")
    if dtw:
        diff = a[:, None, :] - b[None, :, :]
        cost = np.sqrt((diff**2).sum(axis=2))
        path = _dtw_path(cost)
        dists = np.array([cost[i, j] for i, j in path])
    else:
        t = min(len(a), len(b))
        dists = np.sqrt(((a[:t] - b[:t]) ** 2).sum(axis=1))
    return MCD_CONST * float(dists.mean())


def mcd_f0(
    cand: Waveform, ref: Waveform, p: McdF0Params | None = None
) -> dict[str, float | None]:
    """Mel-cepstral distortion plus pitch accuracy of cand against ref.

    Frames below ``power_threshold`` dB of the utterance peak are dropped
    before alignment.  Without DTW the tracks must agree in length within
    ``seq_mismatch_tolerance`` and are truncated; with DTW they are aligned
    on c1..c_dim Euclidean distance.  F0 statistics are computed over frames
    voiced in both signals and are None when no such frame exists.
    """
    p = p or McdF0Params()
    if ref.rate != cand.rate:
        ref = resample(ref, cand.rate)
    cand_track = extract_mcep(cand, p)
    ref_track = extract_mcep(ref, p)
    cand_mc = _drop_silence(cand_track, p.power_threshold)
    ref_mc = _drop_silence(ref_track, p.power_threshold)

    t_c, t_r = len(cand_mc), len(ref_mc)
    mismatch = abs(t_c - t_r) / max(t_c, t_r)
    if mismatch > p.seq_mismatch_tolerance and not p.dtw:
        raise MetricInputError(
            f"sequence length mismatch {mismatch:.1%} exceeds tolerance "
            f"{p.seq_mismatch_tolerance:.1%} (enable dtw to align)"
        )
    mcd = mcd_from_cepstra(cand_mc, ref_mc, dtw=p.dtw)

    cand_f0 = extract_f0(cand, p)
    ref_f0 = extract_f0(ref, p)
    n = min(len(cand_f0.f0), len(ref_f0.f0))
    both = cand_f0.voiced[:n] & ref_f0.voiced[:n]
    if not np.any(both):
        return {"mcd": mcd, "f0_rmse": None, "f0_corr": None}
    fc = cand_f0.f0[:n][both]
    fr = ref_f0.f0[:n][both]
    f0_rmse = float(np.sqrt(np.mean((fr - fc) ** 2)))
    f0_corr = _pearson(fr, fc)
    return {"mcd": mcd, "f0_rmse": f0_rmse, "f0_corr": f0_corr}


def _pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    da = a - a.mean()
    db = b - b.mean()
    na = float(np.dot(da, da))
    nb = float(np.dot(db, db))
    if na == 0.0 and nb == 0.0:
        # Two constant tracks: perfectly correlated only if they coincide.
        return 1.0 if np.allclose(a, b, rtol=1e-9, atol=1e-9) else None
    if na == 0.0 or nb == 0.0:
        return None
    return float(np.clip(np.dot(da, db) / math.sqrt(na * nb), -1.0, 1.0))


# --- pitch -------------------------------------------------------------------


def extract_f0(w: Waveform, p: McdF0Params | None = None) -> PitchTrack:
    """Difference-function pitch track, one frame every ``mcep_shift`` ms.

    The cumulative-mean-normalized difference is thresholded at 0.15; the
    first dip below threshold is descended to its local minimum and refined
    by parabolic interpolation.  Frames without a qualifying dip, or whose
    refined frequency leaves [f0min, f0max], are unvoiced.
    """
    p = p or McdF0Params()
    if len(w) == 0:
        raise MetricInputError("empty waveform")
    rate = w.rate
    shift = max(1, int(round(p.mcep_shift * rate / 1000.0)))
    win = int(round(4.0 * rate / p.f0min))
    tau_max = int(rate / p.f0min)
    tau_min = max(1, int(rate / p.f0max))
    seg_len = win + tau_max
    x = w.samples
    if len(x) < seg_len:
        return PitchTrack(f0=np.zeros(0), voiced=np.zeros(0, dtype=bool))
    starts = np.arange(0, len(x) - seg_len + 1, shift)
    segs = x[starts[:, None] + np.arange(seg_len)[None, :]]

    # d(tau) = E0 + E_tau - 2*corr(tau) via FFT cross-correlation per frame
    nfft = next_pow2(seg_len + tau_max)
    heads = segs[:, :win]
    spec_head = np.fft.rfft(heads, nfft)
    spec_full = np.fft.rfft(segs, nfft)
    corr = np.fft.irfft(np.conj(spec_head) * spec_full, nfft)[:, : tau_max + 1]
    sq = np.concatenate([np.zeros((len(segs), 1)), np.cumsum(segs**2, axis=1)], axis=1)
    e0 = sq[:, win] - sq[:, 0]
    taus = np.arange(tau_max + 1)
    e_tau = sq[:, taus + win] - sq[:, taus]
    d = e0[:, None] + e_tau - 2.0 * corr
    d[:, 0] = 0.0

    cumsum = np.cumsum(d[:, 1:], axis=1)
    cmndf = np.ones_like(d)
    nonzero = cumsum > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d[:, 1:] * taus[1:][None, :] / cumsum
    cmndf[:, 1:] = np.where(nonzero, ratio, 1.0)

    f0 = np.zeros(len(segs))
    voiced = np.zeros(len(segs), dtype=bool)
    for t in range(len(segs)):
        cm = cmndf[t]
        tau = None
        for lag in range(tau_min, tau_max + 1):
            if cm[lag] < YIN_THRESHOLD:
                tau = lag
                while tau + 1 <= tau_max and cm[tau + 1] < cm[tau]:
                    tau += 1
                break
        if tau is None:
            continue
        if 0 < tau < tau_max:
            left, mid, right = d[t, tau - 1], d[t, tau], d[t, tau + 1]
            denom = left - 2.0 * mid + right
            delta = 0.5 * (left - right) / denom if denom > 0.0 else 0.0
            delta = float(np.clip(delta, -0.5, 0.5))
        else:
            delta = 0.0
        freq = rate / (tau + delta)
        if p.f0min <= freq <= p.f0max:
            f0[t] = freq
            voiced[t] = True
    return PitchTrack(f0=f0, voiced=voiced)


# --- short-time intelligibility ----------------------------------------------


def _stoi_band_matrix(rate: int) -> np.ndarray:
    freqs = np.fft.rfftfreq(STOI_NFFT, 1.0 / rate)
    bank = np.zeros((STOI_NBANDS, len(freqs)))
    for j in range(STOI_NBANDS):
        cf = STOI_MIN_FREQ * 2.0 ** (j / 3.0)
        lo, hi = cf * 2.0 ** (-1.0 / 6.0), cf * 2.0 ** (1.0 / 6.0)
        bank[j] = (freqs >= lo) & (freqs < hi)
    return bank


def _remove_silent_frames(
    x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    window = np.hanning(STOI_FRAME + 2)[1:-1]
    xf = frame_signal(x, STOI_FRAME, STOI_HOP) * window
    yf = frame_signal(y, STOI_FRAME, STOI_HOP) * window
    energy = 20.0 * np.log10(np.linalg.norm(xf, axis=1) + 1e-300)
    keep = energy > energy.max() - STOI_DYN_RANGE
    xf, yf = xf[keep], yf[keep]
    out_len = STOI_FRAME + STOI_HOP * (len(xf) - 1) if len(xf) else 0
    xs = np.zeros(out_len)
    ys = np.zeros(out_len)
    for i in range(len(xf)):
        xs[i * STOI_HOP : i * STOI_HOP + STOI_FRAME] += xf[i]
        ys[i * STOI_HOP : i * STOI_HOP + STOI_FRAME] += yf[i]
    return xs, ys


def stoi(cand: Waveform, ref: Waveform) -> float:
    """Short-time intelligibility score in [0, 1]; inputs must be at 10 kHz.

    Reference-silent frames are removed, one-third-octave band envelopes are
    extracted from 256-sample frames, and clipped normalized correlations are
    averaged over 30-frame segments and bands.
    """
    if cand.rate != STOI_RATE or ref.rate != STOI_RATE:
        raise MetricInputError(f"stoi requires {STOI_RATE} Hz input, resample first")
    x, s = _common_length(cand, ref)
    s_clean, x_clean = _remove_silent_frames(s, x)
    window = np.hanning(STOI_FRAME + 2)[1:-1]
    ref_frames = frame_signal(s_clean, STOI_FRAME, STOI_HOP) * window
    cand_frames = frame_signal(x_clean, STOI_FRAME, STOI_HOP) * window
    if ref_frames.shape[0] < STOI_SEG:
        raise MetricInputError(
            f"fewer than {STOI_SEG} frames retained after silence removal"
        )
    bank = _stoi_band_matrix(STOI_RATE)
    ref_env = np.sqrt(np.abs(np.fft.rfft(ref_frames, STOI_NFFT)) ** 2 @ bank.T).T
    cand_env = np.sqrt(np.abs(np.fft.rfft(cand_frames, STOI_NFFT)) ** 2 @ bank.T).T

    clip = 1.0 + 10.0 ** (-STOI_BETA / 20.0)
    total = 0.0
    count = 0
    n_frames = ref_env.shape[1]
    for m in range(STOI_SEG, n_frames + 1):
        x_seg = ref_env[:, m - STOI_SEG : m]
        y_seg = cand_env[:, m - STOI_SEG : m]
        y_norm = np.linalg.norm(y_seg, axis=1, keepdims=True)
        x_norm = np.linalg.norm(x_seg, axis=1, keepdims=True)
        alpha = np.where(y_norm > 0.0, x_norm / np.maximum(y_norm, 1e-300), 1.0)
        y_prime = np.minimum(alpha * y_seg, clip * x_seg)
        xm = x_seg - x_seg.mean(axis=1, keepdims=True)
        ym = y_prime - y_prime.mean(axis=1, keepdims=True)
        nx = np.linalg.norm(xm, axis=1)
        ny = np.linalg.norm(ym, axis=1)
        ok = (nx > 0.0) & (ny > 0.0)
        corr = (xm[ok] * ym[ok]).sum(axis=1) / (nx[ok] * ny[ok])
        total += corr.sum()
        count += int(ok.sum())
    if count == 0:
        raise MetricInputError("no segments with spectral variation")
    return float(np.clip(total / count, 0.0, 1.0))


# --- weighted spectral slope ---------------------------------------------------


def _nearest_peaks(energy: np.ndarray, slope: np.ndarray) -> np.ndarray:
    n_slopes = len(slope)
    peaks = np.empty(n_slopes)
    for i in range(n_slopes):
        if slope[i] > 0.0:  # ascending: walk right to the crest
            n = i
            while n < n_slopes and slope[n] > 0.0:
                n += 1
            peaks[i] = energy[n]
        else:  # descending: walk left to the previous crest
            n = i
            while n >= 0 and slope[n] <= 0.0:
                n -= 1
            peaks[i] = energy[n + 1]
    return peaks


def wss_frame_distortion(
    ref_band_db: np.ndarray,
    cand_band_db: np.ndarray,
    kmax: float = WSS_KMAX,
    klocmax: float = WSS_KLOCMAX,
) -> float:
    """Weighted squared slope difference of one frame, weights from the reference."""
    ref_band_db = np.asarray(ref_band_db, dtype=np.float64)
    cand_band_db = np.asarray(cand_band_db, dtype=np.float64)
    if ref_band_db.shape != cand_band_db.shape or len(ref_band_db) < 2:
        raise MetricInputError("need equal band arrays with at least 2 bands")
    ref_slope = np.diff(ref_band_db)
    cand_slope = np.diff(cand_band_db)
    peaks = _nearest_peaks(ref_band_db, ref_slope)
    db_max = ref_band_db.max()
    w_global = kmax / (kmax + db_max - ref_band_db[:-1])
    w_local = klocmax / (klocmax + peaks - ref_band_db[:-1])
    weights = w_global * w_local
    return float((weights * (ref_slope - cand_slope) ** 2).sum() / weights.sum())


def _critical_band_energies(frames: np.ndarray, rate: int, nfft: int) -> np.ndarray:
    """Per-frame log energies in the Gaussian critical bands, shape (T, 25)."""
    n_bins = nfft // 2 + 1
    max_freq = rate / 2.0
    bins = np.arange(n_bins, dtype=np.float64)
    bank = np.zeros((len(WSS_CENT_FREQ), n_bins))
    min_factor = math.exp(-30.0 / (2.0 * 2.303))
    bw_min = WSS_BANDWIDTH[0]
    for i, (cf, bw) in enumerate(zip(WSS_CENT_FREQ, WSS_BANDWIDTH)):
        f0_bin = (cf / max_freq) * (n_bins - 1)
        bw_bin = (bw / max_freq) * (n_bins - 1)
        norm = math.log(bw_min) - math.log(bw)
        shape = np.exp(-11.0 * (((bins - math.floor(f0_bin)) / bw_bin) ** 2) + norm)
        bank[i] = np.where(shape > min_factor, shape, 0.0)
    power = np.abs(np.fft.rfft(frames, nfft)) ** 2
    return 10.0 * np.log10(np.maximum(power @ bank.T, 1e-10))


def wss(cand: Waveform, ref: Waveform) -> float:
    """Weighted spectral slope distortion, mean of the lowest 95% frames."""
    x, s = _common_length(cand, ref)
    rate = ref.rate
    flen = int(round(0.025 * rate))
    fshift = int(round(0.010 * rate))
    window = np.hanning(flen)
    ref_frames = frame_signal(s, flen, fshift) * window
    cand_frames = frame_signal(x, flen, fshift) * window
    if ref_frames.shape[0] == 0:
        raise MetricInputError("signal shorter than one analysis frame")
    energy = (ref_frames**2).sum(axis=1)
    keep = energy > energy.max() * 1e-4
    if not np.any(keep):
        raise MetricInputError("no non-silent frames")
    nfft = next_pow2(2 * flen)
    ref_db = _critical_band_energies(ref_frames[keep], rate, nfft)
    cand_db = _critical_band_energies(cand_frames[keep], rate, nfft)
    scores = np.array(
        [wss_frame_distortion(r, c) for r, c in zip(ref_db, cand_db)]
    )
    return float(_trimmed_mean(scores))


def _trimmed_mean(scores: np.ndarray, fraction: float = TRIM_FRACTION) -> float:
    keep = max(1, int(math.floor(len(scores) * fraction)))
    return float(np.sort(scores)[:keep].mean())


# --- linear-prediction measures -------------------------------------------------


def _lpc_order(rate: int) -> int:
    return 10 if rate <= 8000 else 16


def _autocorrelation(frame: np.ndarray, order: int) -> np.ndarray:
    n = len(frame)
    r = np.empty(order + 1)
    for lag in range(order + 1):
        r[lag] = float(np.dot(frame[: n - lag], frame[lag:]))
    return r


def _levinson(r: np.ndarray) -> np.ndarray | None:
    """LPC coefficients [1, a1..ap] from autocorrelation, None if unstable."""
    order = len(r) - 1
    if r[0] <= 0.0:
        return None
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i] + float(np.dot(a[1:i], r[i - 1 : 0 : -1]))
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][: i]
        err *= 1.0 - k * k
        if err <= 0.0:
            return None
    return a


def lpc_to_cepstrum(a: np.ndarray, n_coefs: int) -> np.ndarray:
    """Cepstrum c1..c_n of the all-pole model 1/A(z) by the standard recursion."""
    order = len(a) - 1
    c = np.zeros(n_coefs + 1)
    for n in range(1, n_coefs + 1):
        acc = a[n] if n <= order else 0.0
        for k in range(max(1, n - order), n):
            acc += (k / n) * c[k] * a[n - k]
        c[n] = -acc
    return c[1:]


def cd_frame(c_ref: np.ndarray, c_cand: np.ndarray) -> float:
    """Cepstrum distance of one frame, clamped to 10."""
    dist = CD_CONST * math.sqrt(2.0 * float(((np.asarray(c_ref) - np.asarray(c_cand)) ** 2).sum()))
    return min(dist, CD_CLAMP)


def llr_frame(a_ref: np.ndarray, a_cand: np.ndarray, r_ref: np.ndarray) -> float:
    """Log ratio of prediction residual energies, floored at zero."""
    rmat = scipy.linalg.toeplitz(r_ref)
    num = float(a_cand @ rmat @ a_cand)
    den = float(a_ref @ rmat @ a_ref)
    if den <= 0.0 or num <= 0.0:
        raise MetricComputeError("non-positive residual energy")
    return max(0.0, math.log(num / den))


def _lpc_frames(
    cand: Waveform, ref: Waveform
) -> tuple[np.ndarray, np.ndarray, int]:
    x, s = _common_length(cand, ref)
    rate = ref.rate
    flen = int(round(0.025 * rate))
    fshift = int(round(0.010 * rate))
    window = np.hanning(flen)
    ref_frames = frame_signal(s, flen, fshift) * window
    cand_frames = frame_signal(x, flen, fshift) * window
    if ref_frames.shape[0] == 0:
        raise MetricInputError("signal shorter than one analysis frame")
    return cand_frames, ref_frames, _lpc_order(rate)


def cepstrum_distance(cand: Waveform, ref: Waveform) -> float:
    """LPC-cepstrum distance, frame values clamped to 10, lowest 95% averaged."""
    cand_frames, ref_frames, order = _lpc_frames(cand, ref)
    n_cep = order + 10
    scores = []
    unstable = 0
    attempted = 0
    for cf, rf in zip(cand_frames, ref_frames):
        r_ref = _autocorrelation(rf, order)
        r_cand = _autocorrelation(cf, order)
        if r_ref[0] <= 0.0 and r_cand[0] <= 0.0:
            continue  # mutual silence carries no spectral evidence
        attempted += 1
        a_ref = _levinson(r_ref)
        a_cand = _levinson(r_cand)
        if a_ref is None or a_cand is None:
            unstable += 1
            continue
        scores.append(
            cd_frame(lpc_to_cepstrum(a_ref, n_cep), lpc_to_cepstrum(a_cand, n_cep))
        )
    _check_stability(unstable, attempted)
    return _trimmed_mean(np.array(scores))


def llr(cand: Waveform, ref: Waveform) -> float:
    """Mean log-likelihood-ratio distortion over the lowest 95% frames."""
    cand_frames, ref_frames, order = _lpc_frames(cand, ref)
    scores = []
    unstable = 0
    attempted = 0
    for cf, rf in zip(cand_frames, ref_frames):
        r_ref = _autocorrelation(rf, order)
        r_cand = _autocorrelation(cf, order)
        if r_ref[0] <= 0.0 and r_cand[0] <= 0.0:
            continue
        attempted += 1
        a_ref = _levinson(r_ref)
        a_cand = _levinson(r_cand)
        if a_ref is None or a_cand is None:
            unstable += 1
            continue
        try:
            scores.append(llr_frame(a_ref, a_cand, r_ref))
        except MetricComputeError:
            unstable += 1
    _check_stability(unstable, attempted)
    return _trimmed_mean(np.array(scores))


def _check_stability(unstable: int, attempted: int) -> None:
    if attempted == 0:
        raise MetricInputError("no non-silent frames")
    if unstable > attempted * 0.5:
        raise MetricComputeError(
            f"unstable linear prediction on {unstable}/{attempted} frames"
        )
