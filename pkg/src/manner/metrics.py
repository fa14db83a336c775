"""Scale-invariant SNR for waveform quality reporting."""

from __future__ import annotations

import numpy as np

SI_SNR_CAP_DB = 60.0


def si_snr(estimate: np.ndarray, reference: np.ndarray, cap_db: float = SI_SNR_CAP_DB) -> float:
    """SI-SNR in dB, capped so identical signals stay finite.

    Both signals are mean-removed; the reference is scaled to the estimate's
    projection, making the measure invariant to estimate gain.
    """
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise ValueError(f"si_snr needs matching 1-D signals, got {est.shape} vs {ref.shape}")
    est = est - est.mean()
    ref = ref - ref.mean()
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise ValueError("si_snr reference is silent")
    target = (np.dot(est, ref) / ref_energy) * ref
    noise = est - target
    num = float(np.dot(target, target))
    den = float(np.dot(noise, noise))
    if den == 0.0:
        return cap_db
    value = 10.0 * np.log10(num / den) if num > 0.0 else -cap_db
    return float(min(value, cap_db))
