from pathlib import Path

import pytest

from diffuma.config import RunConfig
from diffuma.container import RunOptions, TrainingData, create_container
from diffuma.diffusion import NoiseSchedule
from diffuma.errors import CheckpointError, ConfigError
from diffuma.model import Diffuma
from diffuma.settings import DiffumaSettings
from diffuma.training import CheckpointLock, Trainer
from diffuma.training.lock import LOCK_FILE


def test_singletons_are_shared(run_config: RunConfig) -> None:
    container = create_container(run_config)
    with container, container.sync_context() as ctx:
        trainer = ctx.resolve(Trainer)
        assert trainer.model is ctx.resolve(Diffuma)
        assert trainer.schedule is ctx.resolve(NoiseSchedule)
        assert trainer.dataset is ctx.resolve(TrainingData).sequence
        assert ctx.resolve(RunConfig) is run_config


def test_options_reach_the_model(run_config: RunConfig) -> None:
    options = RunOptions(disable_diffusion=True, zero_context=True)
    with create_container(run_config, options).sync_context() as ctx:
        model = ctx.resolve(Diffuma)
    assert model.disable_diffusion
    assert model.zero_context


def test_settings_are_registered(run_config: RunConfig) -> None:
    settings = DiffumaSettings(log_level="DEBUG")
    with create_container(run_config, settings=settings).sync_context() as ctx:
        assert ctx.resolve(DiffumaSettings) is settings


def test_lock_is_scoped(run_config: RunConfig) -> None:
    lock_path = run_config.train.checkpoint_dir / LOCK_FILE
    container = create_container(run_config)
    with container.sync_context() as ctx:
        ctx.resolve(CheckpointLock)
        assert lock_path.exists()
        with (
            pytest.raises(CheckpointError, match="locked"),
            create_container(run_config).sync_context() as other,
        ):
            other.resolve(CheckpointLock)
    assert not lock_path.exists()


def test_training_data_needs_archive(run_config: RunConfig) -> None:
    config = run_config.replace("data", train_archive=None)
    with (
        pytest.raises(ConfigError, match="train_archive"),
        create_container(config).sync_context() as ctx,
    ):
        ctx.resolve(TrainingData)


def test_training_data_split_must_match(
    run_config: RunConfig,
    archive_path: Path,
) -> None:
    config = run_config.replace("data", t_in=4, t_out=1)
    assert config.data.train_archive == archive_path
    with (
        pytest.raises(ConfigError, match="splits frames"),
        create_container(config).sync_context() as ctx,
    ):
        ctx.resolve(TrainingData)
