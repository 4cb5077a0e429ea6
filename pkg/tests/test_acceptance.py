from pathlib import Path

import numpy as np
import pytest

from diffuma.autodiff import Tensor, no_grad
from diffuma.config import RunConfig, parse_config
from diffuma.data import SyntheticSpec, generate_synthetic, ssim
from diffuma.mamba import FrameSequence
from diffuma.training import (
    Trainer,
    create_trainer,
    read_metrics,
    total_loss,
)
from diffuma.training.losses import LossReport
from diffuma.training.step import compute_losses


pytestmark = pytest.mark.slow

Overfit = tuple[Trainer, list[LossReport]]


def _desk_config(tmp_path: Path, *, steps: int, seed: int = 0) -> RunConfig:
    return parse_config(
        f"""\
[train]
batch = 8
lr = 1e-3
warmup_steps = 50
steps = {steps}
seed = {seed}
checkpoint_every = {steps}
checkpoint_dir = {tmp_path / f"run-{seed}"}
""",
    )


def _blobs(n_samples: int, seed: int) -> FrameSequence:
    spec = SyntheticSpec(
        n_samples=n_samples,
        frames=10,
        height=32,
        width=32,
        t_in=5,
        seed=seed,
    )
    return generate_synthetic(spec)


def _mean_diffusion_loss(trainer: Trainer, rounds: int = 16) -> float:
    rng = np.random.default_rng(123)
    batch = trainer.dataset.split()
    with no_grad():
        losses = [
            compute_losses(
                batch,
                trainer.model,
                trainer.schedule,
                rng,
                trainer.settings.lambda_,
            ).l_diff.item()
            for _ in range(rounds)
        ]
    return float(np.mean(losses))


def _held_out_ssim(trainer: Trainer, data: FrameSequence) -> float:
    x, y = data.split()
    fused, _ = trainer.model.predict_all(x, 8)
    return ssim(fused[:, :, 0], y.tensor.data[:, :, 0])


@pytest.fixture(scope="module")
def overfit(tmp_path_factory: pytest.TempPathFactory) -> Overfit:
    tmp_path = tmp_path_factory.mktemp("overfit")
    trainer = create_trainer(_desk_config(tmp_path, steps=500), _blobs(8, 0))
    return trainer, trainer.run()


def test_overfit_reduces_loss(overfit: Overfit) -> None:
    _, reports = overfit
    assert reports[-1].l_total <= 0.1 * reports[0].l_total


def test_overfit_logs_the_backpropagated_total(overfit: Overfit) -> None:
    trainer, reports = overfit
    rows = read_metrics(trainer.config.train.metrics_path)
    assert len(rows) == len(reports)
    for report, row in zip(reports, rows, strict=True):
        terms = Tensor(report.l_diff), Tensor(report.l_recon)
        assert report.l_total == total_loss(*terms, report.lambda_).item()
        assert row["l_total"] == report.l_total


def test_overfit_reaches_high_ssim(overfit: Overfit) -> None:
    trainer, _ = overfit
    assert _held_out_ssim(trainer, trainer.dataset) >= 0.95  # noqa: PLR2004


def test_zeroing_context_hurts_noise_prediction(
    overfit: Overfit,
) -> None:
    trainer, _ = overfit
    with_context = _mean_diffusion_loss(trainer)
    trainer.model.zero_context = True
    try:
        without_context = _mean_diffusion_loss(trainer)
    finally:
        trainer.model.zero_context = False
    assert without_context > with_context


def test_dual_path_is_not_worse_than_single_path(tmp_path: Path) -> None:
    wins = 0
    for seed in range(5):
        data = _blobs(64, seed).tensor.data
        train = FrameSequence(Tensor(data[:32]), 5, 5)
        held_out = FrameSequence(Tensor(data[32:]), 5, 5)
        scores = []
        for disable in (False, True):
            run_dir = tmp_path / str(disable)
            config = _desk_config(run_dir, steps=200, seed=seed)
            trainer = create_trainer(config, train, disable_diffusion=disable)
            trainer.run()
            scores.append(_held_out_ssim(trainer, held_out))
        wins += scores[0] >= scores[1]
    assert wins >= 4  # noqa: PLR2004
