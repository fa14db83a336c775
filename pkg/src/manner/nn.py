"""Convolution, linear, and batch-norm primitives over the tensor core.

Layouts follow the [batch, channels, time] convention; conv weights are
[out, in/groups, kernel] and transposed-conv weights [in, out, kernel].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .tensor import Tensor, apply_op


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype) -> Tensor:
    """Fan-in scaled uniform weight, the usual U(-1/sqrt(fan_in), +)."""
    bound = 1.0 / np.sqrt(fan_in)
    data = rng.uniform(-bound, bound, size=shape)
    return Tensor(data.astype(dtype), requires_grad=True)


@dataclass
class ConvParams:
    """Weight/bias pair for conv1d or conv_transpose1d."""

    weight: Tensor
    bias: Tensor

    @classmethod
    def create(cls, rng, cout: int, cin: int, kernel: int, dtype, groups: int = 1) -> "ConvParams":
        w = uniform_init(rng, (cout, cin // groups, kernel), (cin // groups) * kernel, dtype)
        b = Tensor(np.zeros(cout, dtype=dtype), requires_grad=True)
        return cls(weight=w, bias=b)

    @classmethod
    def create_transpose(cls, rng, cin: int, cout: int, kernel: int, dtype) -> "ConvParams":
        w = uniform_init(rng, (cin, cout, kernel), cin * kernel, dtype)
        b = Tensor(np.zeros(cout, dtype=dtype), requires_grad=True)
        return cls(weight=w, bias=b)

    def named_tensors(self, prefix: str) -> Iterator[tuple[str, Tensor]]:
        yield f"{prefix}.weight", self.weight
        yield f"{prefix}.bias", self.bias


@dataclass
class BatchNormParams:
    gamma: Tensor
    beta: Tensor
    running_mean: Tensor  # buffer, not trainable
    running_var: Tensor  # buffer, not trainable

    @classmethod
    def create(cls, channels: int, dtype) -> "BatchNormParams":
        return cls(
            gamma=Tensor(np.ones(channels, dtype=dtype), requires_grad=True),
            beta=Tensor(np.zeros(channels, dtype=dtype), requires_grad=True),
            running_mean=Tensor(np.zeros(channels, dtype=dtype)),
            running_var=Tensor(np.ones(channels, dtype=dtype)),
        )

    def named_tensors(self, prefix: str) -> Iterator[tuple[str, Tensor]]:
        yield f"{prefix}.gamma", self.gamma
        yield f"{prefix}.beta", self.beta
        yield f"{prefix}.running_mean", self.running_mean
        yield f"{prefix}.running_var", self.running_var


def conv_out_length(t: int, kernel: int, stride: int, padding: int) -> int:
    return (t + 2 * padding - kernel) // stride + 1


def conv_transpose_out_length(t: int, kernel: int, stride: int, padding: int) -> int:
    return (t - 1) * stride - 2 * padding + kernel


def _pad_time(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    width = [(0, 0)] * (x.ndim - 1) + [(padding, padding)]
    return np.pad(x, width)


def _time_windows(x: np.ndarray, kernel: int, stride: int, count: int) -> np.ndarray:
    """Read-only [..., kernel, count] view of sliding windows over the last axis."""
    st = x.strides[-1]
    shape = x.shape[:-1] + (kernel, count)
    strides = x.strides[:-1] + (st, st * stride)
    return np.lib.stride_tricks.as_strided(x, shape, strides)


def _scatter_windows(y: np.ndarray, stride: int, length: int) -> np.ndarray:
    """Overlap-add y[..., K, T] at positions k + stride*t, onto [..., length].

    Writes land in a residue-major staging buffer so each slice-add is
    contiguous; one transpose pass then restores time order.
    """
    kw, t = y.shape[-2:]
    lead = y.shape[:-2]
    qmax = -(-kw // stride)
    rows = t + qmax
    buf = np.zeros(lead + (stride, rows), dtype=y.dtype)
    for k in range(kw):
        q, r = divmod(k, stride)
        buf[..., r, q : q + t] += y[..., k, :]
    flat = np.swapaxes(buf, -1, -2).reshape(lead + (stride * rows,))
    return flat[..., :length]


def conv1d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
    groups: int = 1,
) -> Tensor:
    """Cross-correlation over the last axis of a [B, Cin, T] tensor."""
    if x.ndim != 3:
        raise ValueError(f"conv1d input must be [B, Cin, T], got {x.shape}")
    if weight.ndim != 3:
        raise ValueError(f"conv1d weight must be [Cout, Cin/groups, K], got {weight.shape}")
    b, cin, t = x.shape
    cout, cin_g, kw = weight.shape
    if stride < 1 or padding < 0 or groups < 1:
        raise ValueError("conv1d needs stride >= 1, padding >= 0, groups >= 1")
    if cin % groups or cout % groups:
        raise ValueError(f"channels ({cin} -> {cout}) not divisible by groups {groups}")
    if cin_g != cin // groups:
        raise ValueError(f"weight expects {cin_g * groups} input channels, input has {cin}")
    if bias is not None and bias.shape != (cout,):
        raise ValueError(f"bias must be [Cout]={cout}, got {bias.shape}")
    tout = conv_out_length(t, kw, stride, padding)
    if tout < 1:
        raise ValueError(f"conv1d output length {tout} < 1 (T={t}, K={kw}, S={stride}, P={padding})")

    oc = cout // groups
    xp = _pad_time(x.data, padding)
    tp = xp.shape[-1]
    wd = weight.data
    depthwise = groups > 1 and cin_g == 1 and oc == 1
    if groups == 1:
        cols = _time_windows(xp, kw, stride, tout).reshape(b, cin * kw, tout)
        out = np.matmul(wd.reshape(cout, cin * kw), cols)
    elif depthwise:
        win = np.swapaxes(_time_windows(xp, kw, stride, tout), -1, -2)  # [B,C,Tout,K]
        out = np.einsum("bctk,ck->bct", win, wd[:, 0], optimize=True)
    else:
        xg = xp.reshape(b, groups, cin_g, tp)
        cols = _time_windows(xg, kw, stride, tout)
        wg = wd.reshape(groups, oc, cin_g, kw)
        out = np.einsum("bgckt,gock->bgot", cols, wg, optimize=True).reshape(b, cout, tout)
    if bias is not None:
        out = out + bias.data[None, :, None]

    inputs = (x, weight) if bias is None else (x, weight, bias)

    def bwd(g, needs):
        gx = None
        if needs[0]:
            if groups == 1:
                y = np.matmul(wd.reshape(cout, cin * kw).T, g).reshape(b, cin, kw, tout)
                gxp = _scatter_windows(y, stride, tp)
            elif depthwise:
                # per-tap slice-add; avoids a [B,C,K,T] temp K times the input
                gxp = np.zeros((b, cin, tp), dtype=g.dtype)
                span = (tout - 1) * stride + 1
                for k in range(kw):
                    gxp[..., k : k + span : stride] += g * wd[None, :, 0, k : k + 1]
            else:
                wg = wd.reshape(groups, oc, cin_g, kw)
                y = np.einsum("bgot,gock->bgckt", g.reshape(b, groups, oc, tout), wg, optimize=True)
                gxp = _scatter_windows(y, stride, tp).reshape(b, cin, tp)
            gx = gxp[..., padding : padding + t] if padding else gxp
        gw = None
        if needs[1]:
            if groups == 1:
                cols4 = _time_windows(xp, kw, stride, tout)
                gw = np.einsum("bot,bckt->ock", g, cols4, optimize=True)
            elif depthwise:
                win4 = np.swapaxes(_time_windows(xp, kw, stride, tout), -1, -2)
                gw = np.einsum("bct,bctk->ck", g, win4, optimize=True)[:, None, :]
            else:
                xg = xp.reshape(b, groups, cin_g, tp)
                cols5 = _time_windows(xg, kw, stride, tout)
                gw = np.einsum(
                    "bgot,bgckt->gock", g.reshape(b, groups, oc, tout), cols5, optimize=True
                ).reshape(cout, cin_g, kw)
        gb = g.sum(axis=(0, 2)) if bias is not None and needs[2] else None
        return (gx, gw, gb) if bias is not None else (gx, gw)

    return apply_op(out, inputs, bwd)


def conv_transpose1d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Adjoint of conv1d; weight layout [Cin, Cout, K]."""
    if x.ndim != 3:
        raise ValueError(f"conv_transpose1d input must be [B, Cin, T], got {x.shape}")
    if weight.ndim != 3:
        raise ValueError(f"conv_transpose1d weight must be [Cin, Cout, K], got {weight.shape}")
    b, cin, t = x.shape
    wcin, cout, kw = weight.shape
    if wcin != cin:
        raise ValueError(f"weight expects {wcin} input channels, input has {cin}")
    if stride < 1 or padding < 0:
        raise ValueError("conv_transpose1d needs stride >= 1, padding >= 0")
    if bias is not None and bias.shape != (cout,):
        raise ValueError(f"bias must be [Cout]={cout}, got {bias.shape}")
    tfull = (t - 1) * stride + kw
    tout = tfull - 2 * padding
    if tout < 1:
        raise ValueError(f"conv_transpose1d output length {tout} < 1")

    wd = weight.data
    y = np.matmul(wd.transpose(1, 2, 0).reshape(cout * kw, cin), x.data).reshape(b, cout, kw, t)
    full = _scatter_windows(y, stride, tfull)
    out = full[..., padding : padding + tout]
    if padding:
        out = np.ascontiguousarray(out)
    if bias is not None:
        out = out + bias.data[None, :, None]

    inputs = (x, weight) if bias is None else (x, weight, bias)
    xd = x.data

    def bwd(g, needs):
        gfull = np.zeros((b, cout, tfull), dtype=g.dtype)
        gfull[..., padding : padding + tout] = g
        gcols = _time_windows(gfull, kw, stride, t)  # [B, Cout, K, T]
        gx = None
        if needs[0]:
            gx = np.matmul(wd.reshape(cin, cout * kw), gcols.reshape(b, cout * kw, t))
        gw = None
        if needs[1]:
            gw = np.einsum("bit,bokt->iok", xd, gcols, optimize=True)
        gb = g.sum(axis=(0, 2)) if bias is not None and needs[2] else None
        return (gx, gw, gb) if bias is not None else (gx, gw)

    return apply_op(out, inputs, bwd)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x[..., Din] @ weight[Din, Dout] (+ bias[Dout])."""
    if weight.ndim != 2:
        raise ValueError(f"linear weight must be [Din, Dout], got {weight.shape}")
    din, dout = weight.shape
    if x.shape[-1] != din:
        raise ValueError(f"linear expects last dim {din}, got {x.shape}")
    if bias is not None and bias.shape != (dout,):
        raise ValueError(f"bias must be [Dout]={dout}, got {bias.shape}")
    out = np.matmul(x.data, weight.data)
    if bias is not None:
        out = out + bias.data
    inputs = (x, weight) if bias is None else (x, weight, bias)
    xd, wd = x.data, weight.data

    def bwd(g, needs):
        gx = np.matmul(g, wd.T) if needs[0] else None
        gw = None
        if needs[1]:
            gw = np.tensordot(xd.reshape(-1, din), g.reshape(-1, dout), axes=([0], [0]))
        gb = None
        if bias is not None and needs[2]:
            gb = g.reshape(-1, dout).sum(axis=0)
        return (gx, gw, gb) if bias is not None else (gx, gw)

    return apply_op(out, inputs, bwd)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalization of a [B, Ch, T] tensor.

    Training mode normalizes with batch statistics and updates the running
    buffers in place (a side effect outside the tape); eval mode reads the
    buffers as constants.
    """
    if x.ndim != 3:
        raise ValueError(f"batch_norm input must be [B, Ch, T], got {x.shape}")
    ch = x.shape[1]
    for name, tns in (("gamma", gamma), ("beta", beta), ("running_mean", running_mean), ("running_var", running_var)):
        if tns.shape != (ch,):
            raise ValueError(f"batch_norm {name} must be [{ch}], got {tns.shape}")

    xd = x.data
    if training:
        mean = xd.mean(axis=(0, 2))
        var = xd.var(axis=(0, 2))
        running_mean.data[...] = (1.0 - momentum) * running_mean.data + momentum * mean
        running_var.data[...] = (1.0 - momentum) * running_var.data + momentum * var
    else:
        mean = running_mean.data
        var = running_var.data

    inv_std = 1.0 / np.sqrt(var + eps)
    m = xd.shape[0] * xd.shape[2]
    if training:
        xhat = (xd - mean[None, :, None]) * inv_std[None, :, None]
        out = gamma.data[None, :, None] * xhat + beta.data[None, :, None]
    else:
        # Eval stats are constants, so the whole op folds to one affine map.
        scale = (gamma.data * inv_std).astype(xd.dtype)
        shift = (beta.data - gamma.data * mean * inv_std).astype(xd.dtype)
        out = xd * scale[None, :, None]
        out += shift[None, :, None]
        xhat = None

    def bwd(g, needs):
        xh = xhat
        if xh is None and needs[1]:
            xh = (xd - mean[None, :, None]) * inv_std[None, :, None]
        gb = g.sum(axis=(0, 2)) if needs[2] else None
        gg = (g * xh).sum(axis=(0, 2)) if needs[1] else None
        gx = None
        if needs[0]:
            gxhat = g * gamma.data[None, :, None]
            if training:
                # Batch statistics depend on x, so the mean/var paths
                # contribute too.
                sum_g = gxhat.sum(axis=(0, 2), keepdims=True)
                sum_gx = (gxhat * xhat).sum(axis=(0, 2), keepdims=True)
                gx = (gxhat - sum_g / m - xhat * sum_gx / m) * inv_std[None, :, None]
            else:
                gx = gxhat * inv_std[None, :, None]
        return (gx, gg, gb, None, None)

    return apply_op(out, (x, gamma, beta, running_mean, running_var), bwd)
