"""Desk-scale training loop: Adam, one-cycle LR, segmentation, checkpoints.

Per-epoch RNG streams are derived from (seed, epoch), so resuming from an
epoch-boundary checkpoint replays the uninterrupted run exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import CorpusPair, ensure_rate, num_segments, segment, tempo_perturb
from .checkpoint import save_checkpoint
from .errors import TrainingDiverged
from .loss import LossReport, StftConfig, default_resolutions, weighted_total_loss
from .model import ModelParams, ParameterTree, manner_forward
from .tensor import Tape, Tensor, backward, reshape

log = logging.getLogger(__name__)


@dataclass
class ScheduleConfig:
    """One-cycle shape: cosine ramp to lr_max, cosine anneal back to lr_min."""

    lr_min: float = 1e-5
    lr_max: float = 1e-2
    warmup_frac: float = 0.3
    total_steps: int = 1
    cycle_per_epoch: bool = False
    steps_per_epoch: int = 0

    def validate(self) -> "ScheduleConfig":
        if not 0.0 < self.lr_min < self.lr_max:
            raise ValueError(f"need 0 < lr_min < lr_max, got {self.lr_min}/{self.lr_max}")
        if not 0.0 < self.warmup_frac < 1.0:
            raise ValueError(f"warmup_frac must be in (0, 1), got {self.warmup_frac}")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.cycle_per_epoch and self.steps_per_epoch < 1:
            raise ValueError("cycle_per_epoch needs steps_per_epoch >= 1")
        return self


def onecycle_lr(step: int, cfg: ScheduleConfig) -> float:
    """Learning rate at `step`; endpoints hit lr_min/lr_max exactly."""
    cfg.validate()
    if cfg.cycle_per_epoch:
        if step < 0:
            raise ValueError(f"step {step} out of range")
        horizon = cfg.steps_per_epoch
        s = step % horizon
    else:
        horizon = cfg.total_steps
        if not 0 <= step <= horizon:
            raise ValueError(f"step {step} out of range [0, {horizon}]")
        s = step
    span = cfg.lr_max - cfg.lr_min
    warm = cfg.warmup_frac * horizon
    if s <= warm and warm > 0:
        return cfg.lr_min + span * 0.5 * (1.0 - math.cos(math.pi * s / warm))
    if horizon == warm:
        return cfg.lr_max
    frac = (s - warm) / (horizon - warm)
    return cfg.lr_min + span * 0.5 * (1.0 + math.cos(math.pi * frac))


@dataclass
class AdamState:
    """First/second moment estimates per trainable parameter."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def init_adam(tree: ParameterTree, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    state = AdamState(beta1=beta1, beta2=beta2, eps=eps)
    for name, t in tree.trainable_items():
        state.m[name] = np.zeros_like(t.data)
        state.v[name] = np.zeros_like(t.data)
    return state


def adam_step(tree: ParameterTree, grads: dict[str, np.ndarray],
              state: AdamState, lr: float) -> None:
    """Bias-corrected Adam update, in place on the tree's tensors."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, p in tree.trainable_items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.data.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data[...] = p.data - lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


@dataclass
class TrainSettings:
    epochs: int = 1
    batch_size: int = 4
    seed: int = 0
    segment_seconds: float = 4.0
    hop_seconds: float = 3.0
    tempo_augment: bool = True
    weighted_loss: bool = True
    lr_min: float = 1e-5
    lr_max: float = 1e-2
    warmup_frac: float = 0.3
    cycle_per_epoch: bool = False
    val_every: int = 1
    max_steps: int = 0  # 0 means no cap

    def validate(self) -> "TrainSettings":
        if self.epochs < 1 or self.batch_size < 1 or self.val_every < 1:
            raise ValueError("epochs, batch_size, and val_every must be >= 1")
        if not 0.0 < self.hop_seconds <= self.segment_seconds:
            raise ValueError(f"need 0 < hop <= segment, got {self.hop_seconds}/{self.segment_seconds}")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        ScheduleConfig(self.lr_min, self.lr_max, self.warmup_frac).validate()
        return self


@dataclass
class TrainResult:
    steps: int
    log_lines: list[str]
    train_losses: list[float]
    val_history: list[tuple[int, float]]  # (epoch, mean validation loss)
    best_val: float
    best_path: Path | None
    last_path: Path | None


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, epoch]))


def _segment_pairs(corpus: list[CorpusPair], seg: int, hop: int,
                   rng: np.random.Generator, augment: bool) -> list[tuple[np.ndarray, np.ndarray]]:
    pieces = []
    for pair in corpus:
        if augment:
            rate = float(rng.uniform(0.9, 1.1))
            noisy = tempo_perturb(pair.noisy, rate)
            clean = tempo_perturb(pair.clean, rate)
        else:
            noisy, clean = pair.noisy, pair.clean
        pieces.extend(zip(segment(noisy.samples, seg, hop), segment(clean.samples, seg, hop)))
    return pieces


def _evaluate(params: ModelParams, corpus: list[CorpusPair],
              resolutions: tuple[StftConfig, ...], weighted: bool) -> float:
    losses = []
    for pair in corpus:
        x = Tensor(pair.noisy.samples[None, None, :])
        est = manner_forward(x, params, params.config, training=False)
        est = reshape(est, (1, est.shape[-1]))
        loss, _ = weighted_total_loss(
            Tensor(pair.noisy.samples[None, :]),
            Tensor(pair.clean.samples[None, :]),
            est,
            resolutions,
            weighted,
        )
        losses.append(loss.item())
    return float(np.mean(losses))


def train(
    params: ModelParams,
    corpus: list[CorpusPair],
    settings: TrainSettings,
    out_dir: str | Path | None = None,
    val_corpus: list[CorpusPair] | None = None,
    resolutions: tuple[StftConfig, ...] | None = None,
    adam_state: AdamState | None = None,
    start_epoch: int = 0,
    sample_rate: int = 16000,
) -> TrainResult:
    """Train in place; returns the per-step log and checkpoint locations.

    Same seed, same corpus, same settings give identical logs. Passing the
    saved Adam state plus start_epoch continues a run exactly.
    """
    settings.validate()
    if not corpus:
        raise ValueError("empty training corpus")
    for pair in corpus:
        ensure_rate(pair.noisy, f"{pair.name} (noisy)", sample_rate)
        ensure_rate(pair.clean, f"{pair.name} (clean)", sample_rate)
    val_corpus = val_corpus or corpus
    resolutions = default_resolutions() if resolutions is None else resolutions

    seg = int(round(settings.segment_seconds * sample_rate))
    hop = int(round(settings.hop_seconds * sample_rate))
    base_segments = sum(num_segments(len(p.noisy.samples), seg, hop) for p in corpus)
    steps_per_epoch = math.ceil(base_segments / settings.batch_size)
    sched = ScheduleConfig(
        lr_min=settings.lr_min,
        lr_max=settings.lr_max,
        warmup_frac=settings.warmup_frac,
        total_steps=max(1, settings.epochs * steps_per_epoch),
        cycle_per_epoch=settings.cycle_per_epoch,
        steps_per_epoch=steps_per_epoch,
    ).validate()

    tree = params.tree
    state = adam_state if adam_state is not None else init_adam(tree)

    out_path = Path(out_dir) if out_dir is not None else None
    log_file = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_file = open(out_path / "train_log.txt", "a" if start_epoch else "w")

    lines: list[str] = []
    losses: list[float] = []
    val_history: list[tuple[int, float]] = []
    best_val = math.inf
    best_path = last_path = None
    stop = False

    def emit(line: str) -> None:
        lines.append(line)
        log.info("%s", line)
        if log_file is not None:
            log_file.write(line + "\n")
            log_file.flush()

    try:
        for epoch in range(start_epoch, settings.epochs):
            rng = _epoch_rng(settings.seed, epoch)
            pieces = _segment_pairs(corpus, seg, hop, rng, settings.tempo_augment)
            order = rng.permutation(len(pieces))
            for b0 in range(0, len(order), settings.batch_size):
                batch = [pieces[i] for i in order[b0 : b0 + settings.batch_size]]
                x = np.stack([n for n, _ in batch])
                y = np.stack([c for _, c in batch])
                lr = onecycle_lr(min(state.t, sched.total_steps), sched)

                with Tape() as tape:
                    est = manner_forward(Tensor(x[:, None, :]), params, params.config, training=True)
                    est = reshape(est, x.shape)
                    loss, report = weighted_total_loss(
                        Tensor(x), Tensor(y), est, resolutions, settings.weighted_loss
                    )
                value = loss.item()
                if not math.isfinite(value):
                    raise TrainingDiverged(f"loss became {value} at step {state.t + 1}")
                tree.zero_grads()
                backward(tape, loss)
                grads = {n: t.grad for n, t in tree.trainable_items()}
                adam_step(tree, grads, state, lr)

                losses.append(value)
                emit(report.log_line(step=state.t, epoch=epoch + 1, lr=lr))
                if settings.max_steps and state.t >= settings.max_steps:
                    stop = True
                    break

            run_val = (epoch + 1) % settings.val_every == 0 or epoch + 1 == settings.epochs or stop
            if run_val:
                val = _evaluate(params, val_corpus, resolutions, settings.weighted_loss)
                val_history.append((epoch + 1, val))
                emit(f"val epoch={epoch + 1} loss={val:.6g}")
                if out_path is not None:
                    last_path = out_path / "last.ckpt"
                    save_checkpoint(last_path, params, state, step=state.t, epoch=epoch + 1)
                    if val < best_val:
                        best_path = out_path / "best.ckpt"
                        save_checkpoint(best_path, params, state, step=state.t, epoch=epoch + 1)
                if val < best_val:
                    best_val = val
            elif out_path is not None:
                last_path = out_path / "last.ckpt"
                save_checkpoint(last_path, params, state, step=state.t, epoch=epoch + 1)
            if stop:
                break
    finally:
        if log_file is not None:
            log_file.close()

    return TrainResult(
        steps=state.t,
        log_lines=lines,
        train_losses=losses,
        val_history=val_history,
        best_val=best_val,
        best_path=best_path,
        last_path=last_path,
    )
