from __future__ import annotations

import dataclasses

import aioinject

from diffuma.config import DataSection, ModelSection, RunConfig
from diffuma.data.archive import read_archive
from diffuma.diffusion import NoiseSchedule, build_noise_schedule
from diffuma.errors import ConfigError
from diffuma.mamba import FrameSequence
from diffuma.model import Diffuma, build_model
from diffuma.settings import DiffumaSettings, get_settings
from diffuma.training.lock import checkpoint_lock
from diffuma.training.trainer import Trainer


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class RunOptions:
    """Command-line switches that change how the model runs."""

    disable_diffusion: bool | None = None
    zero_context: bool = False


@dataclasses.dataclass(frozen=True, slots=True)
class TrainingData:
    sequence: FrameSequence


def _load_training_data(data: DataSection) -> TrainingData:
    if data.train_archive is None:
        msg = "[data] train_archive is required for training"
        raise ConfigError(msg)
    sequence = read_archive(data.train_archive)
    if (sequence.t_in, sequence.t_out) != (data.t_in, data.t_out):
        msg = (
            f"{data.train_archive} splits frames as t_in={sequence.t_in},"
            f" t_out={sequence.t_out}; the config says t_in={data.t_in},"
            f" t_out={data.t_out}"
        )
        raise ConfigError(msg)
    return TrainingData(sequence)


def _noise_schedule(model: ModelSection) -> NoiseSchedule:
    return build_noise_schedule(model.t_diff, *model.betas)


def _model(config: RunConfig, options: RunOptions) -> Diffuma:
    return build_model(
        config,
        disable_diffusion=options.disable_diffusion,
        zero_context=options.zero_context,
    )


def _trainer(
    config: RunConfig,
    model: Diffuma,
    schedule: NoiseSchedule,
    data: TrainingData,
) -> Trainer:
    return Trainer(config, model, schedule, data.sequence)


def create_container(
    config: RunConfig,
    options: RunOptions | None = None,
    settings: DiffumaSettings | None = None,
) -> aioinject.Container:
    container = aioinject.Container()
    for instance in (
        config,
        config.model,
        config.data,
        config.train,
        options or RunOptions(),
        settings or get_settings(),
    ):
        container.register(aioinject.Object(instance))

    container.register(aioinject.Singleton(_noise_schedule))
    container.register(aioinject.Singleton(_model))
    container.register(aioinject.Singleton(_load_training_data))
    container.register(aioinject.Singleton(_trainer))
    container.register(aioinject.Scoped(checkpoint_lock))
    return container


__all__ = [
    "RunOptions",
    "TrainingData",
    "create_container",
]
