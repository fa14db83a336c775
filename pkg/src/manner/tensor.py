"""Dense float tensors with a recording tape for reverse-mode gradients.

Values are numpy arrays (float32 by default, float64 for verification).
Operations run eagerly; while a Tape is active, each op records the node
needed to replay the chain rule in reverse. No implicit broadcasting is
performed except bias addition, scalar operands, and size-1 axes that an
op explicitly accepts.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32
_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# Guards against division by zero in gradient formulas.
GRAD_TINY = 1e-12


class AllocationMeter:
    """High-water mark of live tensor payload bytes.

    Only base allocations are counted (views share their parent's buffer).
    `peak` is the largest simultaneous total seen since the last reset.
    """

    def __init__(self) -> None:
        self.live = 0
        self.peak = 0

    def add(self, nbytes: int) -> None:
        self.live += nbytes
        if self.live > self.peak:
            self.peak = self.live

    def release(self, nbytes: int) -> None:
        self.live -= nbytes

    def reset_peak(self) -> None:
        self.peak = self.live


meter = AllocationMeter()


class Tensor:
    """Immutable-by-convention array node.

    Tensors produced by ops must not be mutated. Leaf tensors (parameters,
    batch-norm running stats) may have their `data` rewritten between steps
    by the optimizer or a checkpoint load.
    """

    __slots__ = ("data", "requires_grad", "grad", "node", "_counted", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self._counted = 0
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.node: Node | None = None
        if arr.base is None:
            self._counted = arr.nbytes
            meter.add(self._counted)

    def __del__(self):
        counted = getattr(self, "_counted", 0)
        if counted:
            meter.release(counted)

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.item())

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}{flag})"

    # -- operator sugar ------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(constant_like(other, self), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tmean(self, axis, keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)


class Node:
    """One recorded primitive application."""

    __slots__ = ("inputs", "output", "backward_fn", "needs")

    def __init__(self, inputs, output, backward_fn, needs):
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn
        self.needs = needs


class Tape:
    """Ordered record of primitive applications.

    Creation order is a topological order for a define-by-run graph, so
    backward() walks the list once in reverse.
    """

    def __init__(self) -> None:
        self._nodes: list[Node] = []
        self._leaves: dict[int, Tensor] = {}

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        assert popped is self
        return False

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def leaves(self) -> list[Tensor]:
        return list(self._leaves.values())


_TAPE_STACK: list[Tape] = []


def active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def apply_op(data: np.ndarray, inputs: Sequence[Tensor], backward_fn) -> Tensor:
    """Wrap an op result, recording a node when a tape is active.

    `backward_fn(grad, needs)` must return per-input gradients (None where
    `needs` is False or the input is non-differentiable).
    """
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires)
    tape = active_tape()
    if tape is not None and requires:
        needs = tuple(t.requires_grad or t.node is not None for t in inputs)
        node = Node(tuple(inputs), out, backward_fn, needs)
        out.node = node
        tape._nodes.append(node)
        for t in inputs:
            if t.requires_grad and t.node is None:
                tape._leaves.setdefault(id(t), t)
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into `.grad` for every leaf on the tape.

    Walks the tape once in reverse; leaves the loss never reached get a
    zero gradient.
    """
    if loss.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape._nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        input_grads = node.backward_fn(g, node.needs)
        for t, gt, needed in zip(node.inputs, input_grads, node.needs):
            if gt is None or not needed:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + gt
            else:
                grads[key] = gt
    for leaf in tape._leaves.values():
        g = grads.get(id(leaf))
        if g is None:
            g = np.zeros_like(leaf.data)
        leaf.grad = g if leaf.grad is None else leaf.grad + g


# ---------------------------------------------------------------------
# helpers


def constant(value, dtype=None) -> Tensor:
    return Tensor(np.asarray(value, dtype=dtype or DEFAULT_DTYPE))


def constant_like(value, ref: Tensor) -> Tensor:
    return Tensor(np.asarray(value, dtype=ref.dtype))


def _as_pair(a: Tensor, b) -> tuple[Tensor, Tensor]:
    """Coerce a scalar operand to the tensor's dtype; reject other types."""
    if isinstance(b, Tensor):
        if a.dtype != b.dtype:
            raise ValueError(f"dtype mismatch: {a.dtype} vs {b.dtype}")
        return a, b
    if isinstance(b, (int, float, np.floating, np.integer)):
        return a, Tensor(np.asarray(b, dtype=a.dtype))
    raise TypeError(f"unsupported operand type {type(b).__name__}")


def _check_broadcast(op: str, sa: tuple[int, ...], sb: tuple[int, ...]) -> None:
    """Allow equal shapes, scalars, or size-1 axes at equal ndim."""
    if sa == sb or sa == () or sb == ():
        return
    if len(sa) != len(sb):
        raise ValueError(f"{op}: rank mismatch {sa} vs {sb}")
    for da, db in zip(sa, sb):
        if da != db and da != 1 and db != 1:
            raise ValueError(f"{op}: shape mismatch {sa} vs {sb}")


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum gradient over axes the forward broadcast expanded."""
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum(), dtype=g.dtype)
    axes = tuple(i for i, (go, si) in enumerate(zip(g.shape, shape)) if si == 1 and go != 1)
    out = g.sum(axis=axes, keepdims=True) if axes else g
    return out.reshape(shape)


# ---------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b) -> Tensor:
    a, b = _as_pair(a, b)
    _check_broadcast("add", a.shape, b.shape)
    out = a.data + b.data

    def bwd(g, needs):
        return (
            _reduce_to(g, a.shape) if needs[0] else None,
            _reduce_to(g, b.shape) if needs[1] else None,
        )

    return apply_op(out, (a, b), bwd)


def sub(a: Tensor, b) -> Tensor:
    a, b = _as_pair(a, b)
    _check_broadcast("sub", a.shape, b.shape)
    out = a.data - b.data

    def bwd(g, needs):
        return (
            _reduce_to(g, a.shape) if needs[0] else None,
            _reduce_to(-g, b.shape) if needs[1] else None,
        )

    return apply_op(out, (a, b), bwd)


def mul(a: Tensor, b) -> Tensor:
    a, b = _as_pair(a, b)
    _check_broadcast("mul", a.shape, b.shape)
    out = a.data * b.data
    ad, bd = a.data, b.data

    def bwd(g, needs):
        return (
            _reduce_to(g * bd, a.shape) if needs[0] else None,
            _reduce_to(g * ad, b.shape) if needs[1] else None,
        )

    return apply_op(out, (a, b), bwd)


def div(a: Tensor, b) -> Tensor:
    a, b = _as_pair(a, b)
    _check_broadcast("div", a.shape, b.shape)
    out = a.data / b.data
    ad, bd = a.data, b.data

    def bwd(g, needs):
        return (
            _reduce_to(g / bd, a.shape) if needs[0] else None,
            _reduce_to(-g * ad / (bd * bd), b.shape) if needs[1] else None,
        )

    return apply_op(out, (a, b), bwd)


def neg(a: Tensor) -> Tensor:
    return apply_op(-a.data, (a,), lambda g, needs: (-g,))


def tabs(a: Tensor) -> Tensor:
    """|a|, subgradient 0 at 0."""
    sign = np.sign(a.data)
    return apply_op(np.abs(a.data), (a,), lambda g, needs: (g * sign,))


def tlog(a: Tensor) -> Tensor:
    """Natural log; the caller clamps away from zero first."""
    ad = a.data
    if np.any(ad <= 0):
        raise ValueError("log requires strictly positive input")
    return apply_op(np.log(ad), (a,), lambda g, needs: (g / ad,))


def tsqrt(a: Tensor) -> Tensor:
    root = np.sqrt(a.data)
    denom = np.maximum(2.0 * root, GRAD_TINY)
    return apply_op(root, (a,), lambda g, needs: (g / denom,))


def texp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return apply_op(out, (a,), lambda g, needs: (g * out,))


def maximum(a: Tensor, b) -> Tensor:
    """Elementwise max; gradient follows the winning operand (ties to a)."""
    a, b = _as_pair(a, b)
    _check_broadcast("maximum", a.shape, b.shape)
    take_a = a.data >= b.data
    out = np.where(take_a, a.data, b.data)

    def bwd(g, needs):
        return (
            _reduce_to(g * take_a, a.shape) if needs[0] else None,
            _reduce_to(g * ~take_a, b.shape) if needs[1] else None,
        )

    return apply_op(out, (a, b), bwd)


# ---------------------------------------------------------------------
# activations


def relu(a: Tensor) -> Tensor:
    out = np.maximum(a.data, 0.0)
    return apply_op(out, (a,), lambda g, needs: (g * (a.data > 0),))


def sigmoid(a: Tensor) -> Tensor:
    # Clip keeps exp() finite; the output is saturated there anyway.
    z = np.clip(a.data, -60.0, 60.0)
    out = 1.0 / (1.0 + np.exp(-z))
    return apply_op(out, (a,), lambda g, needs: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return apply_op(out, (a,), lambda g, needs: (g * (1.0 - out * out),))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    out = a.data - a.data.max(axis=axis, keepdims=True)
    np.exp(out, out=out)
    out /= out.sum(axis=axis, keepdims=True)

    def bwd(g, needs):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return apply_op(out, (a,), bwd)


# ---------------------------------------------------------------------
# reductions


def _norm_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)
    shape = a.shape

    def bwd(g, needs):
        gg = g
        if not keepdims:
            for ax in sorted(axes):
                gg = np.expand_dims(gg, ax)
        return (np.broadcast_to(gg, shape).copy(),)

    return apply_op(out, (a,), bwd)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if a.ndim else 1
    if count == 0:
        raise ValueError("mean over an empty axis")
    out = a.data.mean(axis=axes, keepdims=keepdims)
    shape = a.shape

    def bwd(g, needs):
        gg = g
        if not keepdims:
            for ax in sorted(axes):
                gg = np.expand_dims(gg, ax)
        return (np.broadcast_to(gg, shape) / count,)

    return apply_op(out, (a,), bwd)


def tmax(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    """Max over one axis; gradient routes to the first argmax."""
    ax = axis % a.ndim
    if a.shape[ax] == 0:
        raise ValueError("max over an empty axis")
    out = a.data.max(axis=ax, keepdims=keepdims)
    expanded = out if keepdims else np.expand_dims(out, ax)
    hit = a.data == expanded
    first = np.cumsum(hit, axis=ax) == 1
    mask = hit & first

    def bwd(g, needs):
        gg = g if keepdims else np.expand_dims(g, ax)
        return (mask * gg,)

    return apply_op(out, (a,), bwd)


def pool(kind: str, a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    """Average or max pooling over one axis."""
    if kind == "avg":
        return tmean(a, axis, keepdims)
    if kind == "max":
        return tmax(a, axis, keepdims)
    raise ValueError(f"unknown pool kind {kind!r}")


# ---------------------------------------------------------------------
# shape ops


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = a.data.reshape(shape)
    src = a.shape
    return apply_op(out, (a,), lambda g, needs: (g.reshape(src),))


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    if sorted(axes) != list(range(a.ndim)):
        raise ValueError(f"transpose axes {axes} invalid for ndim {a.ndim}")
    inv = tuple(np.argsort(axes))
    return apply_op(a.data.transpose(axes), (a,), lambda g, needs: (g.transpose(inv),))


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    if not tensors:
        raise ValueError("concat of zero tensors")
    ax = axis % tensors[0].ndim
    out = np.concatenate([t.data for t in tensors], axis=ax)
    sizes = [t.shape[ax] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g, needs):
        parts = np.split(g, splits, axis=ax)
        return tuple(p if need else None for p, need in zip(parts, needs))

    return apply_op(out, tuple(tensors), bwd)


def pad_end(a: Tensor, amount: int) -> Tensor:
    """Zero-pad the last axis on the right."""
    if amount < 0:
        raise ValueError("pad amount must be >= 0")
    if amount == 0:
        return a
    width = [(0, 0)] * (a.ndim - 1) + [(0, amount)]
    out = np.pad(a.data, width)
    t = a.shape[-1]
    return apply_op(out, (a,), lambda g, needs: (g[..., :t],))


def narrow(a: Tensor, start: int, length: int) -> Tensor:
    """Slice the last axis to [start, start+length)."""
    t = a.shape[-1]
    if start < 0 or length < 0 or start + length > t:
        raise ValueError(f"narrow [{start}, {start + length}) out of range for {t}")
    out = a.data[..., start : start + length].copy()

    def bwd(g, needs):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[..., start : start + length] = g
        return (full,)

    return apply_op(out, (a,), bwd)


# ---------------------------------------------------------------------
# matmul


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matmul over the last two axes; leading dims must match."""
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul needs ndim >= 2")
    if a.shape[:-2] != b.shape[:-2]:
        raise ValueError(f"matmul batch dims differ: {a.shape} vs {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul inner dims differ: {a.shape} vs {b.shape}")
    out = np.matmul(a.data, b.data)
    ad, bd = a.data, b.data

    def bwd(g, needs):
        ga = np.matmul(g, bd.swapaxes(-1, -2)) if needs[0] else None
        gb = np.matmul(ad.swapaxes(-1, -2), g) if needs[1] else None
        return (ga, gb)

    return apply_op(out, (a, b), bwd)


# ---------------------------------------------------------------------
# gradient verification


def finite_diff_check(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    eps: float | None = None,
    max_checks_per_input: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare tape gradients of a scalar function against central differences.

    Returns the worst absolute discrepancy normalized by the largest
    finite-difference magnitude seen across all inputs, so parameters whose
    true gradient is structurally zero do not amplify rounding noise. A
    gradient corrupted by a factor of two reports ~1.0.
    """
    for t in inputs:
        if not t.requires_grad:
            raise ValueError("finite_diff_check inputs must require gradients")
        t.grad = None
    with Tape() as tape:
        out = f(*inputs)
    if out.size != 1:
        raise ValueError("finite_diff_check needs a scalar-valued function")
    backward(tape, out)

    worst_abs = 0.0
    scale = GRAD_TINY
    for t in inputs:
        if eps is None:
            step = 1e-5 if t.dtype == np.float64 else 1e-2
        else:
            step = eps
        idx = np.arange(t.size)
        if max_checks_per_input is not None and t.size > max_checks_per_input:
            gen = rng or np.random.default_rng(0)
            idx = gen.choice(t.size, size=max_checks_per_input, replace=False)
        fd = np.zeros(idx.size, dtype=np.float64)
        for j, i in enumerate(idx):
            # Index via unravel so perturbation lands in t.data regardless
            # of memory layout.
            pos = np.unravel_index(i, t.shape) if t.ndim else ()
            orig = t.data[pos]
            t.data[pos] = orig + step
            hi = float(f(*inputs).data)
            t.data[pos] = orig - step
            lo = float(f(*inputs).data)
            t.data[pos] = orig
            fd[j] = (hi - lo) / (2.0 * step)
        ad = t.grad.reshape(-1)[idx].astype(np.float64)
        worst_abs = max(worst_abs, float(np.max(np.abs(ad - fd))))
        scale = max(scale, float(np.max(np.abs(fd))))
    return worst_abs / scale
