import json
from pathlib import Path

import numpy as np
import pytest

from diffuma.autodiff import Tensor
from diffuma.config import RunConfig
from diffuma.data import read_archive
from diffuma.errors import CheckpointError, ConfigError, NumericalError
from diffuma.mamba import FrameSequence
from diffuma.training import (
    create_trainer,
    read_metrics,
    sweep_lambda,
    total_loss,
)
from diffuma.training.trainer import DIAGNOSTIC_FILE


@pytest.fixture
def dataset(archive_path: Path) -> FrameSequence:
    return read_archive(archive_path)


def _in(config: RunConfig, directory: Path) -> RunConfig:
    return config.replace("train", checkpoint_dir=directory)


def test_fresh_runs_are_identical(
    tmp_path: Path,
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    first = create_trainer(_in(run_config, tmp_path / "a"), dataset).run()
    second = create_trainer(_in(run_config, tmp_path / "b"), dataset).run()
    assert len(first) == run_config.train.steps
    assert first == second


def test_logged_total_is_the_weighted_sum(
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    config = run_config.replace("model", lambda_=0.5)
    reports = create_trainer(config, dataset).run()
    rows = read_metrics(config.train.metrics_path)
    assert len(rows) == len(reports) == config.train.steps
    for report, row in zip(reports, rows, strict=True):
        terms = Tensor(report.l_diff), Tensor(report.l_recon)
        assert report.l_total == total_loss(*terms, report.lambda_).item()
        assert row["l_total"] == report.l_total
        assert (row["l_diff"], row["l_recon"]) == (
            report.l_diff,
            report.l_recon,
        )


def test_checkpoints_follow_schedule(
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    trainer = create_trainer(run_config, dataset)
    trainer.run()
    directory = run_config.train.checkpoint_dir
    names = sorted(p.name for p in directory.glob("*.dfma"))
    assert names == ["step-000002.dfma", "step-000004.dfma"]
    assert trainer.last_checkpoint == directory / "step-000004.dfma"


def test_final_step_is_always_saved(
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    config = run_config.replace("train", steps=3)
    create_trainer(config, dataset).run()
    names = sorted(p.name for p in config.train.checkpoint_dir.glob("*.dfma"))
    assert names == ["step-000002.dfma", "step-000003.dfma"]


def test_resume_matches_uninterrupted_run(
    tmp_path: Path,
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    straight = _in(run_config, tmp_path / "straight")
    create_trainer(straight, dataset).run()

    resumed = _in(run_config, tmp_path / "resumed")
    create_trainer(resumed, dataset).run(until=2)
    trainer = create_trainer(resumed, dataset)
    assert trainer.resume().name == "step-000002.dfma"
    assert trainer.step == 2  # noqa: PLR2004
    trainer.run()

    name = "step-000004.dfma"
    assert (resumed.train.checkpoint_dir / name).read_bytes() == (
        straight.train.checkpoint_dir / name
    ).read_bytes()


def test_resume_without_checkpoint(
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    with pytest.raises(CheckpointError, match="No checkpoint"):
        create_trainer(run_config, dataset).resume()


def test_metrics_rows(run_config: RunConfig, dataset: FrameSequence) -> None:
    reports = create_trainer(run_config, dataset).run()
    rows = read_metrics(run_config.train.metrics_path)
    assert [row["step"] for row in rows] == [1, 2, 3, 4]
    for row, report in zip(rows, reports, strict=True):
        assert row["l_diff"] == report.l_diff
        assert row["l_recon"] == report.l_recon
        assert row["l_total"] == report.l_total
        assert row["wallclock_ms"] >= 0


def test_non_finite_run_writes_diagnostic(
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    trainer = create_trainer(run_config, dataset)
    trainer.run(until=2)
    trainer.model.mamba.encoder.parameters()[0].data[...] = np.nan
    with pytest.raises(NumericalError):
        trainer.train_one()
    path = run_config.train.checkpoint_dir / DIAGNOSTIC_FILE
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["step"] == 3  # noqa: PLR2004
    assert payload["last_checkpoint"].endswith("step-000002.dfma")
    assert (run_config.train.checkpoint_dir / "step-000002.dfma").exists()


def test_split_mismatch_rejected(
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    config = run_config.replace("data", t_in=4, t_out=1)
    with pytest.raises(ConfigError, match="t_in=3"):
        create_trainer(config, dataset)


def test_sweep_trains_one_run_per_weight(
    run_config: RunConfig,
    dataset: FrameSequence,
) -> None:
    config = run_config.replace("train", steps=2, checkpoint_every=2)
    results = sweep_lambda(config, dataset, [0.0, 1.0])
    assert [r.lambda_ for r in results] == [0.0, 1.0]
    for result in results:
        assert result.checkpoint is not None
        assert result.checkpoint.exists()
        assert result.l_total == pytest.approx(
            result.l_diff + result.lambda_ * result.l_recon,
        )
        assert -1.0 <= result.ssim <= 1.0
        assert result.checkpoint.parent.name == f"lambda-{result.lambda_:g}"
