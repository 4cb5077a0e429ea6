from __future__ import annotations

import csv
import sys
from collections.abc import Callable
from typing import TYPE_CHECKING, TypeVar

import numpy as np

from diffuma.autodiff import Tensor
from diffuma.config import RunConfig, load_config, parse_config
from diffuma.container import RunOptions, TrainingData, create_container
from diffuma.data import (
    SyntheticSpec,
    evaluate_horizons,
    export_pgm,
    generate_synthetic,
    read_archive,
    read_header,
    write_archive,
    write_report,
)
from diffuma.errors import ConfigError
from diffuma.mamba import FrameSequence
from diffuma.model import Diffuma
from diffuma.training import (
    CheckpointLock,
    Trainer,
    load_checkpoint,
    sweep_lambda,
)


if TYPE_CHECKING:
    import argparse
    from pathlib import Path

    from diffuma.training import Checkpoint


_T = TypeVar("_T", int, float)


def _echo(line: str) -> None:
    sys.stdout.write(line + "\n")


def _options(args: argparse.Namespace) -> RunOptions:
    return RunOptions(
        disable_diffusion=True if args.disable_diffusion else None,
        zero_context=args.zero_context,
    )


def parse_list(text: str, convert: Callable[[str], _T]) -> list[_T]:
    try:
        return [convert(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        msg = f"Cannot parse {text!r} as a comma-separated list"
        raise ConfigError(msg) from e


def gen_data(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        n_samples=args.samples,
        frames=args.frames,
        height=args.height,
        width=args.width,
        t_in=args.t_in,
        motif=args.motif,
        seed=args.seed,
    )
    sequence = generate_synthetic(spec)
    write_archive(sequence, args.out)
    b, t, c, h, w = sequence.tensor.shape
    _echo(
        f"{args.out}: B={b} T={t} C={c} H={h} W={w}"
        f" t_in={sequence.t_in} t_out={sequence.t_out}",
    )
    return 0


def train(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    container = create_container(config, _options(args))
    with container, container.sync_context() as ctx:
        ctx.resolve(CheckpointLock)
        trainer = ctx.resolve(Trainer)
        if args.resume:
            trainer.resume()
        reports = trainer.run()
    if reports:
        first, last = reports[0], reports[-1]
        _echo(
            f"steps {first.step}..{last.step}:"
            f" l_total {first.l_total:.6f} -> {last.l_total:.6f}"
            f" (l_diff {last.l_diff:.6f}, l_recon {last.l_recon:.6f})",
        )
    _echo(f"checkpoint: {trainer.last_checkpoint}")
    return 0


def _restore(
    args: argparse.Namespace,
) -> tuple[RunConfig, Diffuma, Checkpoint]:
    checkpoint = load_checkpoint(args.checkpoint)
    config_path: Path | None = getattr(args, "config", None)
    config = (
        load_config(config_path)
        if config_path
        else parse_config(checkpoint.config_text)
    )
    container = create_container(config, _options(args))
    with container.sync_context() as ctx:
        model = ctx.resolve(Diffuma)
    model.load_state_dict(checkpoint.params)
    return config, model, checkpoint


def _read_split(
    path: Path,
    config: RunConfig,
) -> tuple[FrameSequence, FrameSequence]:
    header = read_header(path)
    expected = (config.data.t_in, config.data.t_out)
    if (header.t_in, header.t_out) != expected:
        msg = (
            f"{path} splits frames as t_in={header.t_in},"
            f" t_out={header.t_out}; the model was trained with"
            f" t_in={config.data.t_in}, t_out={config.data.t_out}"
        )
        raise ConfigError(msg)
    return read_archive(path).split()


def evaluate(args: argparse.Namespace) -> int:
    config, model, checkpoint = _restore(args)
    x, y = _read_split(args.data, config)
    horizons = parse_list(args.horizon, int) if args.horizon else [y.frames]
    fused, residual = model.predict_all(x, config.train.batch)
    reports = evaluate_horizons(
        fused,
        y.tensor.data,
        horizons,
        residual=residual,
    )
    write_report(
        args.report,
        reports,
        step=checkpoint.step,
        steps_per_epoch=args.steps_per_epoch,
    )
    for report in reports:
        metrics = report.metrics
        _echo(
            f"horizon {report.horizon}: mse={metrics.mse:.6f}"
            f" mae={metrics.mae:.6f} ssim={metrics.ssim:.4f}"
            f" residual={report.residual_mean_abs:.6f}",
        )
    return 0


def predict(args: argparse.Namespace) -> int:
    config, model, _ = _restore(args)
    x, _ = _read_split(args.data, config)
    fused, _ = model.predict_all(x, config.train.batch)
    if args.format == "pgm":
        written = export_pgm(fused, args.out_dir)
        _echo(f"wrote {len(written)} frames to {args.out_dir}")
        return 0
    frames = np.concatenate([x.tensor.data, fused], axis=1)
    path = args.out_dir / "predictions.btchw"
    sequence = FrameSequence(
        Tensor(frames, dtype=np.float32),
        x.frames,
        fused.shape[1],
    )
    write_archive(sequence, path)
    _echo(f"wrote {path}")
    return 0


def sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    container = create_container(config)
    with container.sync_context() as ctx:
        ctx.resolve(CheckpointLock)
        dataset = ctx.resolve(TrainingData).sequence
        eval_dataset = (
            read_archive(config.data.eval_archive)
            if config.data.eval_archive
            else None
        )
        results = sweep_lambda(
            config,
            dataset,
            parse_list(args.lambdas, float),
            eval_dataset=eval_dataset,
        )
    columns = ("lambda", "l_diff", "l_recon", "l_total", "ssim")
    rows = [
        (r.lambda_, r.l_diff, r.l_recon, r.l_total, r.ssim) for r in results
    ]
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", newline="", encoding="utf-8") as file:
            writer = csv.writer(file)
            writer.writerow(columns)
            writer.writerows([[repr(value) for value in row] for row in rows])
    _echo(" ".join(f"{name:>10}" for name in columns))
    for row in rows:
        _echo(" ".join(f"{value:>10.5g}" for value in row))
    return 0
