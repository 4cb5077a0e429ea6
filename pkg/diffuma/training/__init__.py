from diffuma.training.checkpoint import (
    Checkpoint,
    latest_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from diffuma.training.lock import CheckpointLock, checkpoint_lock, hold_lock
from diffuma.training.losses import (
    LossReport,
    diffusion_loss,
    reconstruction_loss,
    total_loss,
)
from diffuma.training.metrics_log import MetricsLog, read_metrics
from diffuma.training.optim import (
    AdamState,
    adam_step,
    clip_grad_norm,
    warmup_lr,
)
from diffuma.training.step import StepSettings, compute_losses, train_step
from diffuma.training.trainer import (
    SweepResult,
    Trainer,
    create_trainer,
    sweep_lambda,
)


__all__ = [
    "AdamState",
    "Checkpoint",
    "CheckpointLock",
    "LossReport",
    "MetricsLog",
    "StepSettings",
    "SweepResult",
    "Trainer",
    "adam_step",
    "checkpoint_lock",
    "clip_grad_norm",
    "compute_losses",
    "create_trainer",
    "diffusion_loss",
    "hold_lock",
    "latest_checkpoint",
    "load_checkpoint",
    "read_metrics",
    "reconstruction_loss",
    "save_checkpoint",
    "sweep_lambda",
    "total_loss",
    "train_step",
    "warmup_lr",
]
