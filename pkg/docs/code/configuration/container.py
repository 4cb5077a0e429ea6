from pathlib import Path

from diffuma import RunOptions, create_container, load_config
from diffuma.training import CheckpointLock, Trainer


config = load_config(Path("docs/code/configuration/run.ini"))
container = create_container(config, RunOptions(disable_diffusion=True))

with container, container.sync_context() as ctx:
    ctx.resolve(CheckpointLock)  # released when the context exits
    trainer = ctx.resolve(Trainer)
    trainer.run()
