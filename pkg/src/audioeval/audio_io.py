"""Audio input: manifests, WAV decoding, resampling, and candidate/reference pairing.

Three manifest interfaces are supported: a Kaldi-style ``wav.scp`` list, a
directory scan, and a single sound file.  Decoding is deliberately minimal:
RIFF WAV (PCM 16/24/32 bit and IEEE float) is built in, FLAC is available
behind the optional ``soundfile`` dependency, and compressed formats are
rejected with a pointer at the plugin protocol.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import AudioReadError, ManifestError

AUDIO_EXTENSIONS = (".wav", ".flac", ".mp3")

# Kaiser-windowed sinc interpolator: zero crossings per side and window shape.
_RESAMPLE_ZEROS = 64
_RESAMPLE_BETA = 14.77
_RESAMPLE_BLOCK = 4096


@dataclass(frozen=True)
class UtteranceRef:
    """One manifest entry: utterance id plus the file it points at."""

    id: str
    uri: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple[UtteranceRef, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[UtteranceRef]:
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def index(self) -> dict[str, UtteranceRef]:
        return {e.id: e for e in self.entries}

    def slice(self, start: int, stop: int) -> "Manifest":
        return Manifest(self.entries[start:stop])


@dataclass(eq=False)
class Waveform:
    """Mono float samples with their sampling rate."""

    samples: np.ndarray
    rate: int

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise AudioReadError("waveform must be mono (1-D)")
        if self.rate <= 0:
            raise AudioReadError(f"invalid sampling rate {self.rate}")
        if not np.all(np.isfinite(self.samples)):
            raise AudioReadError("waveform contains non-finite samples")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.rate


@dataclass(eq=False)
class AudioPair:
    """Candidate waveform with an optional matched reference."""

    id: str
    candidate: Waveform
    reference: Waveform | None = None
    candidate_uri: str | None = None
    reference_uri: str | None = None


def read_scp(path: str | Path) -> Manifest:
    """Parse a ``wav.scp`` manifest: one "<id> <path>" pair per line, file order."""
    entries: list[UtteranceRef] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(None, 1)
            if len(parts) < 2:
                raise ManifestError(f"{path}:{lineno}: expected '<id> <path>', got {line!r}")
            utt_id, uri = parts[0], parts[1].strip()
            if utt_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate utterance id {utt_id!r}")
            seen.add(utt_id)
            entries.append(UtteranceRef(utt_id, uri))
    return Manifest(tuple(entries))


def scan_directory(path: str | Path) -> Manifest:
    """Build a manifest from the audio files directly inside a directory.

    Ids are file stems; entries are sorted lexicographically by id.  Two files
    that share a stem (``a.wav`` and ``a.flac``) are a hard error because the
    id would be ambiguous.
    """
    root = Path(path)
    if not root.is_dir():
        raise ManifestError(f"not a directory: {root}")
    by_id: dict[str, Path] = {}
    for item in root.iterdir():
        if not item.is_file() or item.suffix.lower() not in AUDIO_EXTENSIONS:
            continue
        if item.stem in by_id:
            raise ManifestError(
                f"id collision in {root}: {by_id[item.stem].name} and {item.name}"
            )
        by_id[item.stem] = item
    entries = tuple(
        UtteranceRef(utt_id, str(by_id[utt_id])) for utt_id in sorted(by_id)
    )
    return Manifest(entries)


def single_file_manifest(path: str | Path) -> Manifest:
    """Manifest for one sound file; the id is the file stem."""
    p = Path(path)
    if not p.is_file():
        raise ManifestError(f"not a file: {p}")
    return Manifest((UtteranceRef(p.stem, str(p)),))


# --- WAV codec -------------------------------------------------------------

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


def _decode_pcm(data: bytes, bits: int) -> np.ndarray:
    if bits == 16:
        return np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    if bits == 32:
        return np.frombuffer(data, dtype="<i4").astype(np.float64) / 2147483648.0
    if bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8)
        raw = raw[: (len(raw) // 3) * 3].reshape(-1, 3)
        vals = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        return vals.astype(np.float64) / float(1 << 23)
    raise AudioReadError(f"unsupported PCM bit depth: {bits}")


def _read_wav(path: Path) -> Waveform:
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioReadError(f"{path}: corrupt RIFF header")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            if size < 16:
                raise AudioReadError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None or payload is None:
        raise AudioReadError(f"{path}: missing fmt or data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if audio_format == _WAVE_FORMAT_EXTENSIBLE:
        # Sub-format GUID starts with the plain format tag.
        raise AudioReadError(f"{path}: WAVE_FORMAT_EXTENSIBLE is not supported")
    if channels < 1:
        raise AudioReadError(f"{path}: invalid channel count {channels}")
    if audio_format == _WAVE_FORMAT_PCM:
        samples = _decode_pcm(payload, bits)
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT:
        if bits == 32:
            samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        elif bits == 64:
            samples = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        else:
            raise AudioReadError(f"{path}: unsupported float bit depth {bits}")
    else:
        raise AudioReadError(f"{path}: unknown codec (format tag {audio_format:#x})")
    if channels > 1:
        samples = samples[: (len(samples) // channels) * channels]
        samples = samples.reshape(-1, channels).mean(axis=1)
    return Waveform(samples, rate)


def _read_flac(path: Path) -> Waveform:
    try:
        import soundfile  # noqa: PLC0415  (optional dependency)
    except ImportError as exc:
        raise AudioReadError(
            f"{path}: FLAC decoding requires the optional 'soundfile' package "
            "(install the [flac] extra)"
        ) from exc
    samples, rate = soundfile.read(str(path), dtype="float64", always_2d=True)
    return Waveform(samples.mean(axis=1), int(rate))


def load_waveform(uri: str | Path) -> Waveform:
    """Decode one audio file to a mono float waveform.

    Multichannel input is downmixed by channel mean.  MP3 and Kaldi archive
    payloads are rejected explicitly: pre-convert them to WAV, or score them
    through an external plugin metric.
    """
    path = Path(uri)
    if not path.is_file():
        raise AudioReadError(f"no such audio file: {path}")
    head = path.open("rb").read(4)
    if head == b"RIFF":
        return _read_wav(path)
    if head == b"fLaC":
        return _read_flac(path)
    if head[:3] == b"ID3" or head[:2] in (b"\xff\xfb", b"\xff\xf3", b"\xff\xf2"):
        raise AudioReadError(
            f"{path}: MP3 is not decoded natively; convert to WAV/FLAC or use "
            "a plugin metric to score it"
        )
    if path.suffix.lower() in (".ark", ".scp") or b"\x00B" in head:
        raise AudioReadError(
            f"{path}: Kaldi archive payloads are not decoded natively; extract "
            "to WAV or use a plugin metric"
        )
    raise AudioReadError(f"{path}: unknown codec (unrecognized header {head!r})")


def write_wav(
    path: str | Path,
    samples: Sequence[float] | np.ndarray,
    rate: int,
    encoding: str = "pcm16",
) -> None:
    """Write a mono WAV file (helper for corpora, plugins, and tests)."""
    x = np.asarray(samples, dtype=np.float64)
    if encoding == "pcm16":
        fmt, bits = _WAVE_FORMAT_PCM, 16
        payload = (np.clip(x, -1.0, 1.0 - 1.0 / 32768) * 32768.0).astype("<i2").tobytes()
    elif encoding == "pcm32":
        fmt, bits = _WAVE_FORMAT_PCM, 32
        payload = (
            (np.clip(x, -1.0, 1.0 - 1.0 / 2147483648) * 2147483648.0)
            .astype("<i4")
            .tobytes()
        )
    elif encoding == "float32":
        fmt, bits = _WAVE_FORMAT_IEEE_FLOAT, 32
        payload = x.astype("<f4").tobytes()
    elif encoding == "float64":
        fmt, bits = _WAVE_FORMAT_IEEE_FLOAT, 64
        payload = x.astype("<f8").tobytes()
    else:
        raise ValueError(f"unsupported encoding {encoding!r}")
    block = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        fmt,
        1,
        rate,
        rate * block,
        block,
        bits,
        b"data",
        len(payload),
    )
    Path(path).write_bytes(header + payload)


# --- resampling ------------------------------------------------------------


def _kaiser_sinc_taps(offsets: np.ndarray, scale: float) -> np.ndarray:
    """Windowed-sinc interpolation weights at fractional sample offsets."""
    u = offsets * scale / _RESAMPLE_ZEROS
    inside = np.abs(u) < 1.0
    window = np.zeros_like(offsets)
    window[inside] = np.i0(_RESAMPLE_BETA * np.sqrt(1.0 - u[inside] ** 2))
    window /= np.i0(_RESAMPLE_BETA)
    return scale * np.sinc(scale * offsets) * window


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited resampling to ``target_rate``.

    Uses a Kaiser-windowed sinc kernel (beta 14.77, 64 zero crossings per
    side), the cutoff scaled for downsampling.  Equal rates return the input
    object untouched.  Output length is ``round(n * target / source)``.
    """
    if target_rate <= 0:
        raise ValueError(f"invalid target rate {target_rate}")
    if target_rate == w.rate:
        return w
    x = w.samples
    n_in = len(x)
    n_out = int(round(n_in * target_rate / w.rate))
    if n_in == 0 or n_out == 0:
        return Waveform(np.zeros(n_out), target_rate)
    ratio = target_rate / w.rate
    scale = min(1.0, ratio)
    half = _RESAMPLE_ZEROS / scale
    width = int(math.floor(2 * half)) + 2
    out = np.empty(n_out, dtype=np.float64)
    offs = np.arange(width, dtype=np.float64)
    for start in range(0, n_out, _RESAMPLE_BLOCK):
        stop = min(start + _RESAMPLE_BLOCK, n_out)
        pos = np.arange(start, stop, dtype=np.float64) / ratio
        left = np.ceil(pos - half).astype(np.int64)
        idx = left[:, None] + offs[None, :]
        taps = _kaiser_sinc_taps(idx - pos[:, None], scale)
        valid = (idx >= 0) & (idx < n_in)
        gathered = np.where(valid, x[np.clip(idx, 0, n_in - 1).astype(np.int64)], 0.0)
        out[start:stop] = np.einsum("ij,ij->i", taps, gathered)
    return Waveform(out, target_rate)


def pair(
    pred: Manifest,
    gt: Manifest | None = None,
    require_reference: bool = False,
    skip_errors: bool = False,
    error_sink: Callable[[str, Exception], None] | None = None,
) -> Iterator[AudioPair]:
    """Stream candidate/reference pairs in candidate-manifest order.

    When ``require_reference`` is set, every candidate id must resolve in the
    reference manifest before anything is loaded.  With ``skip_errors``,
    utterances whose audio fails to decode are reported to ``error_sink`` and
    skipped instead of aborting the stream.
    """
    gt_index = gt.index() if gt is not None else {}
    if require_reference:
        if gt is None:
            raise ManifestError("reference manifest required but not provided")
        missing = [e.id for e in pred if e.id not in gt_index]
        if missing:
            raise ManifestError(f"reference missing for ids: {', '.join(missing[:5])}")
    for entry in pred:
        ref_entry = gt_index.get(entry.id)
        try:
            candidate = load_waveform(entry.uri)
            reference = load_waveform(ref_entry.uri) if ref_entry is not None else None
        except AudioReadError as exc:
            if skip_errors:
                if error_sink is not None:
                    error_sink(entry.id, exc)
                continue
            raise
        yield AudioPair(
            id=entry.id,
            candidate=candidate,
            reference=reference,
            candidate_uri=entry.uri,
            reference_uri=ref_entry.uri if ref_entry is not None else None,
        )
