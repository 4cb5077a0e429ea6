from __future__ import annotations

import dataclasses
import json
import logging
import time
from typing import TYPE_CHECKING

import numpy as np

from diffuma._utils import write_atomic
from diffuma.autodiff import Tensor
from diffuma.data.metrics import ssim
from diffuma.diffusion import build_noise_schedule
from diffuma.errors import CheckpointError, ConfigError, NumericalError
from diffuma.mamba import FrameSequence
from diffuma.model import build_model, rng_streams
from diffuma.training.checkpoint import (
    Checkpoint,
    checkpoint_path,
    latest_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from diffuma.training.metrics_log import MetricsLog
from diffuma.training.optim import AdamState, warmup_lr
from diffuma.training.step import StepSettings, train_step


if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from diffuma.config import RunConfig
    from diffuma.diffusion import NoiseSchedule
    from diffuma.model import Diffuma
    from diffuma.training.losses import LossReport


logger = logging.getLogger(__name__)

DIAGNOSTIC_FILE = "diagnostic.json"


class Trainer:
    """Step loop with periodic checkpoints, a metrics CSV and resume.

    Batches, timesteps and noise are all drawn from one generator whose
    state is stored in every checkpoint.
    """

    def __init__(
        self,
        config: RunConfig,
        model: Diffuma,
        schedule: NoiseSchedule,
        dataset: FrameSequence,
    ) -> None:
        if (dataset.t_in, dataset.t_out) != (model.t_in, model.t_out):
            msg = (
                f"Data splits frames as t_in={dataset.t_in},"
                f" t_out={dataset.t_out}; the model expects"
                f" t_in={model.t_in}, t_out={model.t_out}"
            )
            raise ConfigError(msg)
        self.config = config
        self.model = model
        self.schedule = schedule
        self.dataset = dataset
        self.optimizer = AdamState(lr=config.train.lr)
        _, self.rng = rng_streams(config.train.seed)
        self.settings = StepSettings(
            lambda_=config.model.lambda_,
            grad_clip=config.train.grad_clip,
        )
        self.metrics = MetricsLog(config.train.metrics_path)
        self.last_checkpoint: Path | None = None

    @property
    def step(self) -> int:
        return self.optimizer.step

    @property
    def checkpoint_dir(self) -> Path:
        return self.config.train.checkpoint_dir

    def sample_batch(self) -> tuple[FrameSequence, FrameSequence]:
        index = self.rng.integers(
            0,
            self.dataset.batch,
            size=self.config.train.batch,
        )
        data = self.dataset.tensor.data[index]
        full = FrameSequence(
            Tensor(data, dtype=data.dtype.type),
            self.dataset.t_in,
            self.dataset.t_out,
        )
        return full.split()

    def train_one(self) -> LossReport:
        self.optimizer.lr = warmup_lr(
            self.step + 1,
            self.config.train.lr,
            self.config.train.warmup_steps,
        )
        started = time.perf_counter()
        try:
            report = train_step(
                self.sample_batch(),
                self.model,
                self.optimizer,
                self.schedule,
                self.rng,
                self.settings,
            )
        except NumericalError as e:
            self.write_diagnostic(e)
            raise
        self.metrics.append(report, (time.perf_counter() - started) * 1000)
        return report

    def run(self, until: int | None = None) -> list[LossReport]:
        """Trains until the optimizer has taken `until` steps in total."""
        target = self.config.train.steps if until is None else until
        every = self.config.train.checkpoint_every
        reports = []
        if self.step < target:
            logger.info("Training from step %d to %d", self.step, target)
        while self.step < target:
            report = self.train_one()
            reports.append(report)
            if self.step % every == 0 or self.step == target:
                self.save()
            if self.step % every == 0:
                logger.info(
                    "step %d l_total=%.6f l_diff=%.6f l_recon=%.6f",
                    report.step,
                    report.l_total,
                    report.l_diff,
                    report.l_recon,
                )
        return reports

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            config_text=self.config.source_text,
            params=self.model.state_dict(),
            optimizer=dataclasses.replace(
                self.optimizer,
                first={k: v.copy() for k, v in self.optimizer.first.items()},
                second={k: v.copy() for k, v in self.optimizer.second.items()},
            ),
            trainer_state={"rng": self.rng.bit_generator.state},
        )

    def save(self) -> Path:
        path = checkpoint_path(self.checkpoint_dir, self.step)
        save_checkpoint(path, self.checkpoint())
        self.last_checkpoint = path
        return path

    def restore(self, checkpoint: Checkpoint) -> None:
        self.model.load_state_dict(checkpoint.params)
        params = dict(self.model.named_parameters())
        checkpoint.optimizer.check_layout(params)
        self.optimizer = checkpoint.optimizer
        try:
            self.rng.bit_generator.state = checkpoint.trainer_state["rng"]
        except (KeyError, TypeError, ValueError) as e:
            msg = "Checkpoint has no usable generator state"
            raise CheckpointError(msg) from e

    def resume(self, path: Path | None = None) -> Path:
        path = path or latest_checkpoint(self.checkpoint_dir)
        if path is None:
            msg = f"No checkpoint to resume from in {self.checkpoint_dir}"
            raise CheckpointError(msg)
        self.restore(load_checkpoint(path))
        self.last_checkpoint = path
        logger.info("Resumed from %s at step %d", path, self.step)
        return path

    def write_diagnostic(self, error: NumericalError) -> Path:
        path = self.checkpoint_dir / DIAGNOSTIC_FILE
        payload = {
            "step": self.step + 1,
            "error": str(error),
            "name": error.name,
            "lr": self.optimizer.lr,
            "lambda": self.settings.lambda_,
            "last_checkpoint": (
                str(self.last_checkpoint) if self.last_checkpoint else None
            ),
        }
        write_atomic(path, json.dumps(payload, indent=2).encode("utf-8"))
        logger.error(
            "Non-finite training state, diagnostic written to %s",
            path,
        )
        return path


def create_trainer(
    config: RunConfig,
    dataset: FrameSequence,
    *,
    disable_diffusion: bool | None = None,
    zero_context: bool = False,
) -> Trainer:
    model = build_model(
        config,
        disable_diffusion=disable_diffusion,
        zero_context=zero_context,
    )
    schedule = build_noise_schedule(config.model.t_diff, *config.model.betas)
    return Trainer(config, model, schedule, dataset)


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class SweepResult:
    lambda_: float
    l_diff: float
    l_recon: float
    l_total: float
    ssim: float
    checkpoint: Path | None


def sweep_lambda(
    config: RunConfig,
    dataset: FrameSequence,
    lambdas: Sequence[float],
    *,
    eval_dataset: FrameSequence | None = None,
) -> list[SweepResult]:
    """Trains one run per weight, each in its own checkpoint directory."""
    evaluation = eval_dataset or dataset
    base = config.train.checkpoint_dir
    results = []
    for lambda_ in lambdas:
        run_config = config.replace("model", lambda_=lambda_).replace(
            "train",
            checkpoint_dir=base / f"lambda-{lambda_:g}",
            metrics_csv=None,
        )
        trainer = create_trainer(run_config, dataset)
        reports = trainer.run()
        x, y = evaluation.split()
        fused, _ = trainer.model.predict_all(x, run_config.train.batch)
        last = reports[-1] if reports else None
        results.append(
            SweepResult(
                lambda_=lambda_,
                l_diff=last.l_diff if last else float("nan"),
                l_recon=last.l_recon if last else float("nan"),
                l_total=last.l_total if last else float("nan"),
                ssim=ssim(fused[:, :, 0], y.tensor.data[:, :, 0]),
                checkpoint=trainer.last_checkpoint,
            ),
        )
        logger.info(
            "lambda=%g finished with SSIM %.4f",
            lambda_,
            results[-1].ssim,
        )
    return results
