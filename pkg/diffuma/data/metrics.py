"""Frame metrics: MSE, MAE and single-channel SSIM.

SSIM is scikit-image's Gaussian-weighted index: an 11x11 window with sigma
1.5, population covariances, `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2` and
`L = 1`. Border pixels without a full window are cropped, so the score is
the mean over fully contained windows, then over frames.
"""

from __future__ import annotations

import csv
import dataclasses
from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
from skimage.metrics import structural_similarity

from diffuma.errors import ConfigError, DimensionError


if TYPE_CHECKING:
    from pathlib import Path

    from diffuma._types import FloatArray


WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1 = 0.01
K2 = 0.03


def _pair(
    prediction: npt.ArrayLike,
    target: npt.ArrayLike,
) -> tuple[FloatArray, FloatArray]:
    a = np.asarray(prediction, dtype=np.float64)
    b = np.asarray(target, dtype=np.float64)
    if a.shape != b.shape:
        msg = f"Metric operands differ in shape: {a.shape} vs {b.shape}"
        raise DimensionError(msg)
    return a, b


def mse(prediction: npt.ArrayLike, target: npt.ArrayLike) -> float:
    a, b = _pair(prediction, target)
    return float(np.mean(np.square(a - b)))


def mae(prediction: npt.ArrayLike, target: npt.ArrayLike) -> float:
    a, b = _pair(prediction, target)
    return float(np.mean(np.abs(a - b)))


def ssim(
    prediction: npt.ArrayLike,
    target: npt.ArrayLike,
    *,
    window_size: int = WINDOW_SIZE,
    data_range: float = 1.0,
) -> float:
    """Mean SSIM of `[..., H, W]` frames.

    A `window_size` other than 11 scales the Gaussian width with it.
    """
    a, b = _pair(prediction, target)
    if a.ndim < 2:  # noqa: PLR2004
        msg = f"SSIM needs frames of shape [..., H, W], got {a.shape}"
        raise DimensionError(msg)
    if window_size < 3 or window_size % 2 == 0:  # noqa: PLR2004
        msg = f"SSIM window_size must be odd and >= 3, got {window_size}"
        raise ConfigError(msg)
    height, width = a.shape[-2:]
    if height < window_size or width < window_size:
        msg = (
            f"Frames {height}x{width} are smaller than the {window_size}x"
            f"{window_size} SSIM window; pass a smaller window_size"
        )
        raise ConfigError(msg)
    sigma = WINDOW_SIGMA * window_size / WINDOW_SIZE
    scores = [
        structural_similarity(
            x,
            y,
            win_size=window_size,
            gaussian_weights=True,
            sigma=sigma,
            use_sample_covariance=False,
            data_range=data_range,
            K1=K1,
            K2=K2,
        )
        for x, y in zip(
            a.reshape(-1, height, width),
            b.reshape(-1, height, width),
            strict=True,
        )
    ]
    return float(np.mean(scores))


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class MetricReport:
    """Aggregate metrics plus one value per predicted frame index."""

    mse: float
    mae: float
    ssim: float
    frame_mse: FloatArray
    frame_mae: FloatArray
    frame_ssim: FloatArray

    @property
    def frames(self) -> int:
        return len(self.frame_mse)


def evaluate(
    prediction: npt.ArrayLike,
    target: npt.ArrayLike,
    *,
    window_size: int = WINDOW_SIZE,
) -> MetricReport:
    """Metrics of `[B, T, C, H, W]` predictions; SSIM reads channel 0."""
    a, b = _pair(prediction, target)
    if a.ndim != 5:  # noqa: PLR2004
        msg = f"Expected [B, T, C, H, W] predictions, got {a.shape}"
        raise DimensionError(msg)
    frames = range(a.shape[1])
    frame_ssim = np.array(
        [
            ssim(a[:, t, 0], b[:, t, 0], window_size=window_size)
            for t in frames
        ],
    )
    return MetricReport(
        mse=mse(a, b),
        mae=mae(a, b),
        ssim=float(frame_ssim.mean()) if frame_ssim.size else 1.0,
        frame_mse=np.array([mse(a[:, t], b[:, t]) for t in frames]),
        frame_mae=np.array([mae(a[:, t], b[:, t]) for t in frames]),
        frame_ssim=frame_ssim,
    )


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class HorizonReport:
    horizon: int
    metrics: MetricReport
    residual_mean_abs: float


def evaluate_horizons(  # noqa: PLR0913
    prediction: npt.ArrayLike,
    target: npt.ArrayLike,
    horizons: Sequence[int],
    *,
    residual: npt.ArrayLike | None = None,
    window_size: int = WINDOW_SIZE,
) -> list[HorizonReport]:
    """One report per horizon over the first `horizon` predicted frames."""
    a, b = _pair(prediction, target)
    delta = np.zeros_like(a) if residual is None else np.asarray(residual)
    reports = []
    for horizon in horizons:
        if not 1 <= horizon <= a.shape[1]:
            msg = (
                f"Horizon {horizon} is outside the {a.shape[1]}"
                " predicted frames"
            )
            raise ConfigError(msg)
        reports.append(
            HorizonReport(
                horizon=horizon,
                metrics=evaluate(
                    a[:, :horizon],
                    b[:, :horizon],
                    window_size=window_size,
                ),
                residual_mean_abs=float(np.mean(np.abs(delta[:, :horizon]))),
            ),
        )
    return reports


def write_report(
    path: Path,
    reports: Sequence[HorizonReport],
    *,
    step: int | None = None,
    steps_per_epoch: int | None = None,
) -> None:
    """CSV `frame_index,mse,mae,ssim` with a `#` header per horizon block."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file)
        for report in reports:
            file.write(f"# horizon={report.horizon}\n")
            if step is not None:
                epoch = (
                    f" epoch={step / steps_per_epoch:g}"
                    if steps_per_epoch
                    else ""
                )
                file.write(f"# step={step}{epoch}\n")
            file.write(f"# residual_mean_abs={report.residual_mean_abs!r}\n")
            writer.writerow(["frame_index", "mse", "mae", "ssim"])
            metrics = report.metrics
            for index in range(metrics.frames):
                writer.writerow(
                    [
                        index + 1,
                        repr(float(metrics.frame_mse[index])),
                        repr(float(metrics.frame_mae[index])),
                        repr(float(metrics.frame_ssim[index])),
                    ],
                )
            writer.writerow(
                [
                    "all",
                    repr(metrics.mse),
                    repr(metrics.mae),
                    repr(metrics.ssim),
                ],
            )


def read_report(path: Path) -> list[dict[str, str]]:
    """Rows of a report file; header lines become `{"#": text}` rows."""
    rows: list[dict[str, str]] = []
    with path.open(newline="", encoding="utf-8") as file:
        columns: list[str] = []
        for line in file:
            if line.startswith("#"):
                rows.append({"#": line[1:].strip()})
                continue
            values = next(csv.reader([line]))
            if values[0] == "frame_index":
                columns = values
                continue
            rows.append(dict(zip(columns, values, strict=True)))
    return rows
