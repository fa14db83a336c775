"""Shared fixtures and the acceptance-checklist summary."""

import numpy as np
import pytest

from manner.audio import AudioClip, write_wav

_ACCEPTANCE: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None and report.when == "call":
        _ACCEPTANCE[marker.args[0]] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance checklist")
    for label in sorted(_ACCEPTANCE):
        outcome = _ACCEPTANCE[label]
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{word}] {label}")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_tone_pair(rng, seconds=1.0, freq=440.0, noise_scale=0.05, sample_rate=16000):
    """A clean tone and its noisy mixture, the standard tiny fixture."""
    t = int(seconds * sample_rate)
    clean = (0.3 * np.sin(2 * np.pi * freq * np.arange(t) / sample_rate)).astype(np.float32)
    noisy = clean + noise_scale * rng.standard_normal(t).astype(np.float32)
    return AudioClip(noisy, sample_rate), AudioClip(clean, sample_rate)


@pytest.fixture
def corpus_dirs(tmp_path, rng):
    """Three paired utterances on disk, as (noisy_dir, clean_dir)."""
    noisy_dir = tmp_path / "noisy"
    clean_dir = tmp_path / "clean"
    noisy_dir.mkdir()
    clean_dir.mkdir()
    for i, freq in enumerate((330.0, 440.0, 550.0)):
        noisy, clean = make_tone_pair(rng, seconds=1.0 + 0.25 * i, freq=freq)
        write_wav(noisy_dir / f"utt{i}.wav", noisy)
        write_wav(clean_dir / f"utt{i}.wav", clean)
    return noisy_dir, clean_dir
