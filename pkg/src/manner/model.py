"""Conv U-net for time-domain enhancement with multi-view attention blocks.

The encoder halves time by `stride` per layer while doubling channels; the
decoder mirrors it with skip sums. A sigmoid/tanh gate masks the first
convolution's output before the final 1-channel projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .attention import MultiViewBlockParams, ma_block
from .nn import BatchNormParams, ConvParams, batch_norm, conv1d, conv_transpose1d
from .tensor import Tensor, add, mul, narrow, pad_end, relu, sigmoid, tanh

# ResCon internals fixed across the model family.
RESCON_GROWTH = 2
RESCON_KERNEL = 31

VARIANTS = ("full", "small")


@dataclass
class ModelConfig:
    """Architecture hyperparameters; `validate()` enforces the invariants."""

    kernel_size: int = 8
    stride: int = 4
    base_channels: int = 60
    depth: int = 4
    chunk_size: int = 64
    variant: str = "full"
    channel_attention: bool = True
    global_attention: bool = True
    local_attention: bool = True

    def validate(self) -> "ModelConfig":
        if self.stride < 1 or self.kernel_size < self.stride:
            raise ValueError(f"need kernel_size >= stride >= 1, got K={self.kernel_size} S={self.stride}")
        if (self.kernel_size - self.stride) % 2:
            raise ValueError("kernel_size - stride must be even for same-ratio down/up sampling")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.base_channels < 6 or self.base_channels % 6:
            raise ValueError(f"base_channels must be a positive multiple of 6, got {self.base_channels}")
        if self.chunk_size < 4 or self.chunk_size % 4:
            raise ValueError(f"chunk_size must be a multiple of 4 and >= 4, got {self.chunk_size}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        return self

    @property
    def down_padding(self) -> int:
        return (self.kernel_size - self.stride) // 2

    def encoder_channels(self, layer: int) -> int:
        """Channel width after the ResCon of encoder layer `layer` (1-based)."""
        return self.base_channels * (2 ** layer)

    def has_attention(self, layer: int) -> bool:
        return self.variant == "full" or layer == self.depth

    def to_dict(self) -> dict:
        return {
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "base_channels": self.base_channels,
            "depth": self.depth,
            "chunk_size": self.chunk_size,
            "variant": self.variant,
            "channel_attention": self.channel_attention,
            "global_attention": self.global_attention,
            "local_attention": self.local_attention,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d).validate()


class ParameterTree:
    """Ordered, named map of the model's tensors.

    Trainable parameters have requires_grad set; batch-norm running stats
    ride along as buffers so checkpoints capture them.
    """

    def __init__(self) -> None:
        self._items: dict[str, Tensor] = {}

    def register(self, name: str, tensor: Tensor) -> None:
        if name in self._items:
            raise ValueError(f"duplicate parameter name {name!r}")
        self._items[name] = tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._items[name]

    def __contains__(self, name: str) -> bool:
        return name in self._items

    def __len__(self) -> int:
        return len(self._items)

    def names(self) -> list[str]:
        return list(self._items)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._items.items())

    def trainable_items(self) -> list[tuple[str, Tensor]]:
        return [(n, t) for n, t in self._items.items() if t.requires_grad]

    def num_params(self) -> int:
        return sum(t.size for _, t in self.trainable_items())

    def zero_grads(self) -> None:
        for _, t in self.trainable_items():
            t.grad = None


@dataclass
class ResConParams:
    """Pointwise expand, depthwise mix, pointwise project, conv residual."""

    pw1: ConvParams
    bn1: BatchNormParams
    dw: ConvParams
    bn2: BatchNormParams
    pw2: ConvParams
    res: ConvParams

    @classmethod
    def create(cls, rng, cin: int, cout: int, dtype) -> "ResConParams":
        mid = cin * RESCON_GROWTH
        return cls(
            pw1=ConvParams.create(rng, mid, cin, 1, dtype),
            bn1=BatchNormParams.create(mid, dtype),
            dw=ConvParams.create(rng, mid, mid, RESCON_KERNEL, dtype, groups=mid),
            bn2=BatchNormParams.create(mid, dtype),
            pw2=ConvParams.create(rng, cout, mid, 1, dtype),
            res=ConvParams.create(rng, cout, cin, 1, dtype),
        )

    def named_tensors(self, prefix: str) -> Iterator[tuple[str, Tensor]]:
        yield from self.pw1.named_tensors(f"{prefix}.pw1")
        yield from self.bn1.named_tensors(f"{prefix}.bn1")
        yield from self.dw.named_tensors(f"{prefix}.dw")
        yield from self.bn2.named_tensors(f"{prefix}.bn2")
        yield from self.pw2.named_tensors(f"{prefix}.pw2")
        yield from self.res.named_tensors(f"{prefix}.res")


@dataclass
class ConvBlockParams:
    """Strided (or transposed) conv followed by batch norm."""

    conv: ConvParams
    bn: BatchNormParams

    @classmethod
    def create(cls, rng, cin: int, cout: int, kernel: int, dtype, transposed: bool = False) -> "ConvBlockParams":
        if transposed:
            conv = ConvParams.create_transpose(rng, cin, cout, kernel, dtype)
        else:
            conv = ConvParams.create(rng, cout, cin, kernel, dtype)
        return cls(conv=conv, bn=BatchNormParams.create(cout, dtype))

    def named_tensors(self, prefix: str) -> Iterator[tuple[str, Tensor]]:
        yield from self.conv.named_tensors(f"{prefix}.conv")
        yield from self.bn.named_tensors(f"{prefix}.bn")


@dataclass
class EncoderLayerParams:
    down: ConvBlockParams
    rescon: ResConParams
    ma: MultiViewBlockParams | None

    def named_tensors(self, prefix: str) -> Iterator[tuple[str, Tensor]]:
        yield from self.down.named_tensors(f"{prefix}.down")
        yield from self.rescon.named_tensors(f"{prefix}.rescon")
        if self.ma is not None:
            yield from self.ma.named_tensors(f"{prefix}.ma")


@dataclass
class DecoderLayerParams:
    rescon: ResConParams
    ma: MultiViewBlockParams | None
    up: ConvBlockParams

    def named_tensors(self, prefix: str) -> Iterator[tuple[str, Tensor]]:
        yield from self.rescon.named_tensors(f"{prefix}.rescon")
        if self.ma is not None:
            yield from self.ma.named_tensors(f"{prefix}.ma")
        yield from self.up.named_tensors(f"{prefix}.up")


@dataclass
class ModelParams:
    """Structured parameters; `tree` is the flat named view of the same tensors."""

    config: ModelConfig
    first_conv: ConvParams
    first_bn: BatchNormParams
    enc: list[EncoderLayerParams]
    bottleneck: ConvParams
    dec: list[DecoderLayerParams]  # execution order: deepest first
    mask_a: ConvParams
    mask_b: ConvParams
    out_conv: ConvParams
    _tree: ParameterTree | None = field(default=None, repr=False)

    def named_tensors(self) -> Iterator[tuple[str, Tensor]]:
        yield from self.first_conv.named_tensors("first.conv")
        yield from self.first_bn.named_tensors("first.bn")
        for i, layer in enumerate(self.enc, 1):
            yield from layer.named_tensors(f"enc{i}")
        yield from self.bottleneck.named_tensors("bottleneck")
        depth = len(self.enc)
        for i, layer in enumerate(self.dec):
            yield from layer.named_tensors(f"dec{depth - i}")
        yield from self.mask_a.named_tensors("mask.a")
        yield from self.mask_b.named_tensors("mask.b")
        yield from self.out_conv.named_tensors("out")

    @property
    def tree(self) -> ParameterTree:
        if self._tree is None:
            tree = ParameterTree()
            for name, tensor in self.named_tensors():
                tree.register(name, tensor)
            self._tree = tree
        return self._tree


def _make_ma(rng, config: ModelConfig, channels: int, dtype) -> MultiViewBlockParams:
    return MultiViewBlockParams.create(
        rng,
        channels,
        config.chunk_size,
        dtype,
        use_channel=config.channel_attention,
        use_global=config.global_attention,
        use_local=config.local_attention,
    )


def build_model(config: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """Create a model with fan-in uniform weights; same seed, same bits."""
    config.validate()
    rng = np.random.default_rng(seed)
    n = config.base_channels
    k = config.kernel_size

    first_conv = ConvParams.create(rng, n, 1, 1, dtype)
    first_bn = BatchNormParams.create(n, dtype)

    enc: list[EncoderLayerParams] = []
    for layer in range(1, config.depth + 1):
        cin = config.encoder_channels(layer - 1)
        cout = config.encoder_channels(layer)
        enc.append(
            EncoderLayerParams(
                down=ConvBlockParams.create(rng, cin, cin, k, dtype),
                rescon=ResConParams.create(rng, cin, cout, dtype),
                ma=_make_ma(rng, config, cout, dtype) if config.has_attention(layer) else None,
            )
        )

    deep = config.encoder_channels(config.depth)
    bottleneck = ConvParams.create(rng, deep, deep, 1, dtype)

    dec: list[DecoderLayerParams] = []
    for layer in range(config.depth, 0, -1):
        cin = config.encoder_channels(layer)
        cout = config.encoder_channels(layer - 1)
        dec.append(
            DecoderLayerParams(
                rescon=ResConParams.create(rng, cin, cout, dtype),
                ma=_make_ma(rng, config, cout, dtype) if config.has_attention(layer) else None,
                up=ConvBlockParams.create(rng, cout, cout, k, dtype, transposed=True),
            )
        )

    return ModelParams(
        config=config,
        first_conv=first_conv,
        first_bn=first_bn,
        enc=enc,
        bottleneck=bottleneck,
        dec=dec,
        mask_a=ConvParams.create(rng, n, n, 1, dtype),
        mask_b=ConvParams.create(rng, n, n, 1, dtype),
        out_conv=ConvParams.create(rng, 1, n, 1, dtype),
    )


def rescon(x: Tensor, params: ResConParams, training: bool) -> Tensor:
    """Residual conv block; net channel change is cout/cin."""
    mid = params.pw1.weight.shape[0]
    h = conv1d(x, params.pw1.weight, params.pw1.bias)
    h = relu(batch_norm(h, params.bn1.gamma, params.bn1.beta,
                        params.bn1.running_mean, params.bn1.running_var, training))
    h = conv1d(h, params.dw.weight, params.dw.bias,
               padding=(RESCON_KERNEL - 1) // 2, groups=mid)
    h = relu(batch_norm(h, params.bn2.gamma, params.bn2.beta,
                        params.bn2.running_mean, params.bn2.running_var, training))
    h = conv1d(h, params.pw2.weight, params.pw2.bias)
    return add(h, conv1d(x, params.res.weight, params.res.bias))


def down_conv(x: Tensor, params: ConvBlockParams, config: ModelConfig, training: bool) -> Tensor:
    h = conv1d(x, params.conv.weight, params.conv.bias,
               stride=config.stride, padding=config.down_padding)
    return relu(batch_norm(h, params.bn.gamma, params.bn.beta,
                           params.bn.running_mean, params.bn.running_var, training))


def up_conv(x: Tensor, params: ConvBlockParams, config: ModelConfig, training: bool) -> Tensor:
    h = conv_transpose1d(x, params.conv.weight, params.conv.bias,
                         stride=config.stride, padding=config.down_padding)
    return relu(batch_norm(h, params.bn.gamma, params.bn.beta,
                           params.bn.running_mean, params.bn.running_var, training))


def mask_gate(d: Tensor, params: ModelParams) -> Tensor:
    """m = relu(sigmoid(conv_a(d)) * tanh(conv_b(d))), in [0, 1)."""
    a = sigmoid(conv1d(d, params.mask_a.weight, params.mask_a.bias))
    b = tanh(conv1d(d, params.mask_b.weight, params.mask_b.bias))
    return relu(mul(a, b))


def manner_forward(noisy: Tensor, params: ModelParams, config: ModelConfig,
                   training: bool = False) -> Tensor:
    """Enhance a [B, 1, T] waveform; output matches the input length.

    Time is zero-padded up to a multiple of stride**depth so every layer
    divides evenly, and trimmed back at the end.
    """
    if noisy.ndim != 3 or noisy.shape[1] != 1:
        raise ValueError(f"input must be [B, 1, T], got {noisy.shape}")
    t_raw = noisy.shape[-1]
    if t_raw < 1:
        raise ValueError("input length must be >= 1")

    block = config.stride ** config.depth
    x = pad_end(noisy, (-t_raw) % block)

    x0 = relu(batch_norm(conv1d(x, params.first_conv.weight, params.first_conv.bias),
                         params.first_bn.gamma, params.first_bn.beta,
                         params.first_bn.running_mean, params.first_bn.running_var,
                         training))  # B x N x Tp

    h = x0
    skips: list[Tensor] = []
    for layer in params.enc:
        h = down_conv(h, layer.down, config, training)
        h = rescon(h, layer.rescon, training)
        if layer.ma is not None:
            h = ma_block(h, layer.ma, config.chunk_size)
        skips.append(h)

    h = conv1d(h, params.bottleneck.weight, params.bottleneck.bias)

    for layer, skip in zip(params.dec, reversed(skips)):
        h = add(h, skip)
        h = rescon(h, layer.rescon, training)
        if layer.ma is not None:
            h = ma_block(h, layer.ma, config.chunk_size)
        h = up_conv(h, layer.up, config, training)

    masked = mul(mask_gate(h, params), x0)
    y = conv1d(masked, params.out_conv.weight, params.out_conv.bias)
    return narrow(y, 0, t_raw)
