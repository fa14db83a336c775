"""Mono 16 kHz WAV handling, segmentation, pairing, and tempo augmentation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import DataError

log = logging.getLogger(__name__)

TARGET_RATE = 16000
PCM_SCALE = 32768.0


@dataclass
class AudioClip:
    """1-D float32 samples in [-1, 1] plus their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 1:
            raise DataError(f"clip must be mono 1-D, got shape {self.samples.shape}")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class CorpusPair:
    name: str
    noisy: AudioClip
    clean: AudioClip


def read_wav(path) -> AudioClip:
    """Read a mono PCM16 or float32 WAV; anything else is rejected."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise DataError(f"{path}: no such file")
    except Exception as exc:  # scipy raises plain ValueError on bad RIFF
        raise DataError(f"{path}: malformed or unsupported WAV ({exc})") from exc
    if data.ndim != 1:
        raise DataError(f"{path}: expected mono, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / PCM_SCALE
    elif data.dtype == np.float32:
        samples = data
    else:
        raise DataError(f"{path}: unsupported sample encoding {data.dtype}; need PCM16 or float32")
    return AudioClip(samples=samples, sample_rate=int(rate))


def write_wav(path, clip: AudioClip, encoding: str = "pcm16") -> None:
    path = Path(path)
    if encoding == "pcm16":
        scaled = np.round(clip.samples.astype(np.float64) * PCM_SCALE)
        data = np.clip(scaled, -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = clip.samples.astype(np.float32)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    wavfile.write(path, clip.sample_rate, data)


def ensure_rate(clip: AudioClip, name: str, rate: int = TARGET_RATE) -> AudioClip:
    if clip.sample_rate != rate:
        raise DataError(f"{name}: sample rate {clip.sample_rate} Hz, expected {rate} Hz")
    return clip


def num_segments(t: int, seg: int, hop: int) -> int:
    """ceil(max(T - seg, 0) / hop) + 1; every sample lands in a window."""
    return math.ceil(max(t - seg, 0) / hop) + 1


def segment(samples: np.ndarray, seg: int, hop: int) -> list[np.ndarray]:
    """Fixed windows every `hop` samples; the last one is zero-padded."""
    if seg < 1 or not 1 <= hop <= seg:
        raise ValueError(f"need seg >= 1 and 1 <= hop <= seg, got seg={seg} hop={hop}")
    t = len(samples)
    if t < 1:
        raise ValueError("cannot segment an empty signal")
    out = []
    for i in range(num_segments(t, seg, hop)):
        start = i * hop
        piece = samples[start : start + seg]
        if len(piece) < seg:
            piece = np.pad(piece, (0, seg - len(piece)))
        out.append(piece)
    return out


def tempo_perturb(clip: AudioClip, rate: float | None = None,
                  seed: int | None = None) -> AudioClip:
    """Playback-speed change by linear resampling; length becomes round(T/rate).

    When `rate` is None one is drawn uniformly from [0.9, 1.1] using `seed`.
    rate == 1.0 returns the samples bit-exactly.
    """
    if rate is None:
        rate = float(np.random.default_rng(seed).uniform(0.9, 1.1))
    if not 0.9 <= rate <= 1.1:
        raise ValueError(f"tempo rate must lie in [0.9, 1.1], got {rate}")
    t = len(clip.samples)
    n_out = int(round(t / rate))
    positions = np.arange(n_out, dtype=np.float64) * rate
    resampled = np.interp(positions, np.arange(t, dtype=np.float64), clip.samples)
    return AudioClip(resampled.astype(np.float32), clip.sample_rate)


def pair_corpus(noisy_dir, clean_dir) -> list[CorpusPair]:
    """Match WAVs by filename; orphans warn, mismatched lengths are errors."""
    noisy_dir, clean_dir = Path(noisy_dir), Path(clean_dir)
    for d in (noisy_dir, clean_dir):
        if not d.is_dir():
            raise DataError(f"{d}: not a directory")
    noisy_files = {p.name: p for p in sorted(noisy_dir.glob("*.wav"))}
    clean_files = {p.name: p for p in sorted(clean_dir.glob("*.wav"))}
    for name in sorted(set(noisy_files) - set(clean_files)):
        log.warning("noisy file %s has no clean counterpart; skipping", name)
    for name in sorted(set(clean_files) - set(noisy_files)):
        log.warning("clean file %s has no noisy counterpart; skipping", name)
    shared = sorted(set(noisy_files) & set(clean_files))
    if not shared:
        raise DataError(f"no paired WAV files between {noisy_dir} and {clean_dir}")

    pairs = []
    for name in shared:
        noisy = read_wav(noisy_files[name])
        clean = read_wav(clean_files[name])
        if noisy.sample_rate != clean.sample_rate:
            raise DataError(f"{name}: sample rates differ ({noisy.sample_rate} vs {clean.sample_rate})")
        if len(noisy.samples) != len(clean.samples):
            raise DataError(
                f"{name}: length mismatch (noisy {len(noisy.samples)} vs clean {len(clean.samples)})"
            )
        pairs.append(CorpusPair(name=name, noisy=noisy, clean=clean))
    return pairs
