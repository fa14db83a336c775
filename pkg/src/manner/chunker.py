"""Split a time axis into half-overlapping chunks and merge back exactly.

Chunks of size C advance by C/2; the tail is zero-padded. merge() averages
samples by how many chunks cover them, so merge(chunk(x)) == x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, apply_op


@dataclass
class ChunkedView:
    """Chunked tensor [..., P, C] plus what is needed to invert it."""

    data: Tensor
    original_length: int
    chunk_size: int
    hop: int

    @property
    def num_chunks(self) -> int:
        return self.data.shape[-2]


def num_chunks(t: int, chunk_size: int) -> int:
    """P = ceil(max(T - C, 0) / (C/2)) + 1."""
    hop = chunk_size // 2
    return math.ceil(max(t - chunk_size, 0) / hop) + 1


def _check_chunk_size(chunk_size: int) -> int:
    if chunk_size < 2 or chunk_size % 2:
        raise ValueError(f"chunk size must be even and >= 2, got {chunk_size}")
    return chunk_size // 2


def _overlap_add(parts: np.ndarray, hop: int, padded: int) -> np.ndarray:
    """Sum [..., P, C] chunks back onto a [..., padded] axis.

    With 50% overlap, even-indexed chunks tile the axis contiguously and so
    do odd-indexed ones, which keeps this pure slicing.
    """
    c = parts.shape[-1]
    out = np.zeros(parts.shape[:-2] + (padded,), dtype=parts.dtype)
    even = parts[..., 0::2, :]
    n_even = even.shape[-2]
    out[..., : n_even * c] += even.reshape(even.shape[:-2] + (n_even * c,))
    odd = parts[..., 1::2, :]
    n_odd = odd.shape[-2]
    if n_odd:
        out[..., hop : hop + n_odd * c] += odd.reshape(odd.shape[:-2] + (n_odd * c,))
    return out


def _coverage(t: int, p: int, chunk_size: int, hop: int) -> np.ndarray:
    ones = np.ones((p, chunk_size), dtype=np.float64)
    padded = (p - 1) * hop + chunk_size
    return _overlap_add(ones, hop, padded)[:t]


def chunk(x: Tensor, chunk_size: int) -> ChunkedView:
    """[..., T] -> view of [..., P, C] chunks with 50% overlap."""
    hop = _check_chunk_size(chunk_size)
    t = x.shape[-1]
    if t < 1:
        raise ValueError("cannot chunk an empty time axis")
    p = num_chunks(t, chunk_size)
    padded = (p - 1) * hop + chunk_size

    xd = x.data
    if padded > t:
        width = [(0, 0)] * (xd.ndim - 1) + [(0, padded - t)]
        xd = np.pad(xd, width)
    starts = hop * np.arange(p)
    idx = starts[:, None] + np.arange(chunk_size)[None, :]
    out = xd[..., idx]

    def bwd(g, needs):
        gx = _overlap_add(g, hop, padded)
        return (gx[..., :t],)

    data = apply_op(out, (x,), bwd)
    return ChunkedView(data=data, original_length=t, chunk_size=chunk_size, hop=hop)


def merge(view: ChunkedView) -> Tensor:
    """Invert chunk(): overlapped samples average by coverage count."""
    x = view.data
    if x.ndim < 2:
        raise ValueError(f"chunked data must be [..., P, C], got {x.shape}")
    p, c = x.shape[-2], x.shape[-1]
    if c != view.chunk_size or view.hop != c // 2:
        raise ValueError("chunked view metadata does not match its data")
    t = view.original_length
    padded = (p - 1) * view.hop + c
    lower = 1 if p == 1 else padded - view.hop + 1
    if not lower <= t <= padded:
        raise ValueError(f"original length {t} inconsistent with {p} chunks of {c}")

    cover = _coverage(t, p, c, view.hop).astype(x.dtype)
    summed = _overlap_add(x.data, view.hop, padded)[..., :t]
    out = summed / cover

    def bwd(g, needs):
        gpad = g / cover
        if padded > t:
            width = [(0, 0)] * (g.ndim - 1) + [(0, padded - t)]
            gpad = np.pad(gpad, width)
        starts = view.hop * np.arange(p)
        idx = starts[:, None] + np.arange(c)[None, :]
        return (gpad[..., idx],)

    return apply_op(out, (x,), bwd)
