from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest

from diffuma.autodiff import precision
from diffuma.config import ModelSection, RunConfig, parse_config
from diffuma.data import SyntheticSpec, generate_synthetic, write_archive


TINY_MODEL = """\
[model]
D = 4
N = 2
L = 1
k_t = 3
n_dit_blocks = 1
patch_size = 4
d_c = 4
dit_dim = 4
n_heads = 2
mlp_ratio = 2.0
enc_channels = 2
t_diff = 10
height = 16
width = 16
"""


@pytest.fixture
def float64() -> Iterator[None]:
    with precision(np.float64):
        yield


@pytest.fixture
def tiny_model() -> ModelSection:
    return ModelSection(
        D=4,
        N=2,
        L=1,
        n_dit_blocks=1,
        patch_size=4,
        d_c=4,
        dit_dim=4,
        n_heads=2,
        mlp_ratio=1.0,
        enc_channels=2,
        t_diff=10,
        height=8,
        width=8,
    )


@pytest.fixture
def archive_path(tmp_path: Path) -> Path:
    path = tmp_path / "train.btchw"
    spec = SyntheticSpec(
        n_samples=4,
        frames=5,
        height=16,
        width=16,
        t_in=3,
        seed=1,
    )
    write_archive(generate_synthetic(spec), path)
    return path


@pytest.fixture
def config_text(tmp_path: Path, archive_path: Path) -> str:
    return (
        TINY_MODEL
        + f"""
[data]
train_archive = {archive_path}
t_in = 3
t_out = 2

[train]
batch = 2
steps = 4
seed = 0
checkpoint_every = 2
checkpoint_dir = {tmp_path / "checkpoints"}
"""
    )


@pytest.fixture
def run_config(config_text: str) -> RunConfig:
    return parse_config(config_text)


@pytest.fixture
def config_path(tmp_path: Path, config_text: str) -> Path:
    path = tmp_path / "run.ini"
    path.write_text(config_text, encoding="utf-8")
    return path
