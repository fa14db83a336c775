"""Command-line interface: train, enhance, eval, bench.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
failure. Set MANNER_THREADS to cap BLAS parallelism.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .audio import AudioClip, ensure_rate, pair_corpus, read_wav, write_wav
from .checkpoint import load_checkpoint
from .config import default_run_config, parse_run_config
from .errors import ConfigError, DataError, MannerError
from .metrics import si_snr
from .model import build_model, manner_forward
from .tensor import Tensor
from .trainer import train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

log = logging.getLogger(__name__)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="manner", description="Time-domain speech enhancement toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model from a config file")
    t.add_argument("--config", required=True, help="run configuration file")
    t.add_argument("--out", required=True, help="directory for checkpoints and the training log")
    t.add_argument("--seed", type=int, default=None, help="override the configured seed")

    e = sub.add_parser("enhance", help="denoise WAV files with a trained checkpoint")
    e.add_argument("inputs", nargs="+", help="noisy WAV files or directories of them")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--out", required=True, help="output directory")

    v = sub.add_parser("eval", help="report SI-SNR improvement on a paired corpus")
    v.add_argument("noisy_dir")
    v.add_argument("clean_dir")
    v.add_argument("--checkpoint", required=True)
    v.add_argument("--out", default=None, help="optional directory for eval.csv")

    b = sub.add_parser("bench", help="forward-pass latency and memory by input length")
    b.add_argument("--config", default=None, help="model config (defaults when omitted)")
    b.add_argument("--checkpoint", default=None, help="bench an existing checkpoint instead")
    b.add_argument("--variant", choices=["full", "small", "both"], default="both")
    b.add_argument("--lengths", default="1,2,3,4,5,6,7,8,9,10", help="comma-separated seconds")
    b.add_argument("--runs", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True, help="directory for per-variant CSVs")
    return p


def _expand_inputs(raw: list[str]) -> list[Path]:
    files: list[Path] = []
    for item in raw:
        path = Path(item)
        if path.is_dir():
            found = sorted(path.glob("*.wav"))
            if not found:
                raise DataError(f"{path}: directory contains no WAV files")
            files.extend(found)
        elif path.is_file():
            files.append(path)
        else:
            raise DataError(f"{path}: no such file or directory")
    return files


def _enhance_clip(params, clip: AudioClip) -> np.ndarray:
    x = Tensor(clip.samples[None, None, :])
    y = manner_forward(x, params, params.config, training=False)
    return np.clip(y.data[0, 0], -1.0, 1.0)


def cmd_train(args) -> int:
    cfg = parse_run_config(args.config)
    if args.seed is not None:
        cfg.trainer.seed = args.seed
    if not cfg.noisy_dir or not cfg.clean_dir:
        raise ConfigError("training needs [data] noisy_dir and clean_dir")
    corpus = pair_corpus(cfg.noisy_dir, cfg.clean_dir)
    val = None
    if cfg.val_noisy_dir or cfg.val_clean_dir:
        if not (cfg.val_noisy_dir and cfg.val_clean_dir):
            raise ConfigError("validation needs both val_noisy_dir and val_clean_dir")
        val = pair_corpus(cfg.val_noisy_dir, cfg.val_clean_dir)

    params = build_model(cfg.model, seed=cfg.trainer.seed)
    result = train(params, corpus, cfg.trainer, out_dir=args.out,
                   val_corpus=val, resolutions=cfg.resolutions)
    print(f"trained {result.steps} steps; best validation loss {result.best_val:.6g}")
    if result.best_path is not None:
        print(f"best checkpoint: {result.best_path}")
    if result.last_path is not None:
        print(f"last checkpoint: {result.last_path}")
    return EXIT_OK


def cmd_enhance(args) -> int:
    params, _, _, _ = load_checkpoint(args.checkpoint)
    files = _expand_inputs(args.inputs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in files:
        clip = ensure_rate(read_wav(path), str(path))
        enhanced = _enhance_clip(params, clip)
        target = out_dir / path.name
        write_wav(target, AudioClip(enhanced, clip.sample_rate))
        print(f"{path} -> {target}")
    return EXIT_OK


def cmd_eval(args) -> int:
    params, _, _, _ = load_checkpoint(args.checkpoint)
    corpus = pair_corpus(args.noisy_dir, args.clean_dir)
    rows = []
    for pair in corpus:
        ensure_rate(pair.noisy, f"{pair.name} (noisy)")
        ensure_rate(pair.clean, f"{pair.name} (clean)")
        enhanced = _enhance_clip(params, pair.noisy)
        before = si_snr(pair.noisy.samples, pair.clean.samples)
        after = si_snr(enhanced, pair.clean.samples)
        rows.append((pair.name, before, after))

    print(f"{'utterance':<28} {'noisy dB':>10} {'enhanced dB':>12} {'delta dB':>10}")
    for name, before, after in rows:
        print(f"{name:<28} {before:>10.2f} {after:>12.2f} {after - before:>10.2f}")
    mean_before = float(np.mean([b for _, b, _ in rows]))
    mean_after = float(np.mean([a for _, _, a in rows]))
    print(f"{'mean':<28} {mean_before:>10.2f} {mean_after:>12.2f} {mean_after - mean_before:>10.2f}")

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "eval.csv", "w") as f:
            f.write("utterance,si_snr_noisy_db,si_snr_enhanced_db,delta_db\n")
            for name, before, after in rows:
                f.write(f"{name},{before:.4f},{after:.4f},{after - before:.4f}\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        lengths = [int(s) for s in args.lengths.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --lengths value: {exc}") from exc
    if not lengths or any(s < 1 for s in lengths):
        raise ConfigError("--lengths needs positive integer seconds")
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")

    models = []
    if args.checkpoint is not None:
        params, _, _, _ = load_checkpoint(args.checkpoint)
        models.append(params)
    else:
        cfg = parse_run_config(args.config) if args.config else default_run_config()
        variants = [args.variant] if args.variant != "both" else ["full", "small"]
        for variant in variants:
            mc = cfg.model.__class__(**{**cfg.model.to_dict(), "variant": variant})
            models.append(build_model(mc.validate(), seed=args.seed))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for params in models:
        report = bench_mod.run_bench(params, lengths, runs=args.runs, seed=args.seed)
        report.write_csv(out_dir / f"bench_{report.variant}.csv")
        reports.append(report)
    print(bench_mod.format_table(reports))
    for report in reports:
        print(f"wrote {out_dir / f'bench_{report.variant}.csv'}")
    return EXIT_OK


_COMMANDS = {"train": cmd_train, "enhance": cmd_enhance, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the reason
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (MannerError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
