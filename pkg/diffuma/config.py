"""Run configuration: an INI file with `[model]`, `[data]` and `[train]`.

Unknown sections and keys are rejected and every value is range-checked
when the file is parsed. The original text is kept on `RunConfig` so it can
be echoed into checkpoints.
"""

from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    model_validator,
)
from typing_extensions import Self

from diffuma.errors import ConfigError


_REFERENCE_STEPS = 1000
_REFERENCE_BETAS = (1e-4, 0.02)
_MAX_BETA = 0.999


class _Section(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        populate_by_name=True,
    )


class ModelSection(_Section):
    dim: int = Field(64, alias="D", gt=0)
    state: int = Field(16, alias="N", gt=0)
    layers: int = Field(4, alias="L", ge=0)
    k_t: int = Field(3, gt=0)
    n_dit_blocks: int = Field(4, ge=0)
    patch_size: int = Field(4, gt=0)
    d_c: int = Field(64, gt=0)
    t_diff: int = Field(100, ge=1)
    lambda_: float = Field(1.0, alias="lambda", ge=0)
    enc_channels: int = Field(16, gt=0)
    dit_dim: int = Field(64, gt=0)
    n_heads: int = Field(4, gt=0)
    mlp_ratio: float = Field(4.0, gt=0)
    beta_start: float | None = Field(None, gt=0, lt=1)
    beta_end: float | None = Field(None, gt=0, lt=1)
    residual: bool = True
    channels: int = Field(1, gt=0)
    height: int = Field(32, ge=4)
    width: int = Field(32, ge=4)

    @model_validator(mode="after")
    def _check_shapes(self) -> Self:
        if self.k_t % 2 == 0:
            msg = f"k_t must be odd, got {self.k_t}"
            raise ValueError(msg)
        if self.d_c % 2:
            msg = f"d_c must be even, got {self.d_c}"
            raise ValueError(msg)
        if self.dit_dim % self.n_heads:
            msg = f"n_heads={self.n_heads} must divide dit_dim={self.dit_dim}"
            raise ValueError(msg)
        if self.height % 4 or self.width % 4:
            msg = "height and width must be divisible by 4"
            raise ValueError(msg)
        if self.height % self.patch_size or self.width % self.patch_size:
            msg = f"patch_size={self.patch_size} must divide height and width"
            raise ValueError(msg)
        start, end = self.betas
        if not start < end:
            msg = f"beta_start={start} must be < beta_end={end}"
            raise ValueError(msg)
        return self

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        return self.channels, self.height, self.width

    @property
    def betas(self) -> tuple[float, float]:
        """Explicit bounds, or the 1000-step reference range rescaled."""
        ratio = _REFERENCE_STEPS / self.t_diff
        start, end = _REFERENCE_BETAS
        return (
            self.beta_start or min(start * ratio, _MAX_BETA / 2),
            self.beta_end or min(end * ratio, _MAX_BETA),
        )


class DataSection(_Section):
    train_archive: Path | None = None
    eval_archive: Path | None = None
    t_in: int = Field(5, ge=1)
    t_out: int = Field(5, ge=1)


class TrainSection(_Section):
    lr: float = Field(3e-4, gt=0, le=1)
    batch: int = Field(4, ge=1)
    steps: int = Field(500, ge=0)
    seed: int = Field(0, ge=0)
    checkpoint_dir: Path = Path("checkpoints")
    checkpoint_every: int = Field(100, ge=1)
    grad_clip: float = Field(1.0, gt=0)
    warmup_steps: int = Field(0, ge=0)
    disable_diffusion: bool = False
    metrics_csv: Path | None = None

    @property
    def metrics_path(self) -> Path:
        return self.metrics_csv or self.checkpoint_dir / "metrics.csv"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelSection = ModelSection()
    data: DataSection = DataSection()
    train: TrainSection = TrainSection()
    source_text: str = ""

    @model_validator(mode="after")
    def _check_residual_frames(self) -> Self:
        data = self.data
        if data.t_in < data.t_out and not self.train.disable_diffusion:
            msg = (
                f"t_in={data.t_in} < t_out={data.t_out} leaves too"
                " few reference frames for the detail residual;"
                " set [train] disable_diffusion = true"
            )
            raise ValueError(msg)
        return self

    def replace(self, section: str, **values: Any) -> RunConfig:
        """Returns a copy with `values` overriding keys of one section."""
        current: _Section = getattr(self, section)
        merged = {**current.model_dump(), **values}
        sections = {
            "model": self.model,
            "data": self.data,
            "train": self.train,
        }
        try:
            sections[section] = type(current).model_validate(merged)
        except ValidationError as e:
            raise ConfigError(_describe(section, e)) from e
        return _assemble(sections, self.source_text)


_SECTIONS: dict[str, type[_Section]] = {
    "model": ModelSection,
    "data": DataSection,
    "train": TrainSection,
}


def _describe(section: str, error: ValidationError) -> str:
    problems = "; ".join(
        f"[{section}] {'.'.join(map(str, item['loc'])) or '<section>'}:"
        f" {item['msg']}"
        for item in error.errors()
    )
    return f"Invalid configuration: {problems}"


def _assemble(sections: dict[str, _Section], source_text: str) -> RunConfig:
    try:
        return RunConfig(**sections, source_text=source_text)
    except ValidationError as e:
        raise ConfigError(_describe("data", e)) from e


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(
        interpolation=None,
        inline_comment_prefixes=("#",),
    )
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as e:
        msg = f"Malformed configuration file: {e}"
        raise ConfigError(msg) from e

    if unknown := sorted(set(parser.sections()) - _SECTIONS.keys()):
        msg = f"Unknown configuration sections: {unknown}"
        raise ConfigError(msg)

    sections: dict[str, _Section] = {}
    for name, section_cls in _SECTIONS.items():
        values = dict(parser[name]) if parser.has_section(name) else {}
        try:
            sections[name] = section_cls.model_validate(values)
        except ValidationError as e:
            raise ConfigError(_describe(name, e)) from e
    return _assemble(sections, text)


def load_config(path: Path) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        msg = f"Configuration file {path} is not UTF-8"
        raise ConfigError(msg) from e
    return parse_config(text)
