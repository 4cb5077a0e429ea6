from __future__ import annotations

import csv
from typing import TYPE_CHECKING


if TYPE_CHECKING:
    from pathlib import Path

    from diffuma.training.losses import LossReport


COLUMNS = ("step", "l_diff", "l_recon", "l_total", "lr", "wallclock_ms")


class MetricsLog:
    """Append-only CSV of per-step losses.

    Floats are written with `repr` so logged values parse back exactly.
    """

    def __init__(self, path: Path) -> None:
        self.path = path

    def append(self, report: LossReport, wallclock_ms: float) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists() or self.path.stat().st_size == 0
        with self.path.open("a", newline="", encoding="utf-8") as file:
            writer = csv.writer(file)
            if new:
                writer.writerow(COLUMNS)
            writer.writerow(
                [
                    report.step,
                    repr(report.l_diff),
                    repr(report.l_recon),
                    repr(report.l_total),
                    repr(report.lr),
                    f"{wallclock_ms:.3f}",
                ],
            )


def read_metrics(path: Path) -> list[dict[str, float]]:
    with path.open(newline="", encoding="utf-8") as file:
        return [
            {key: float(value) for key, value in row.items()}
            for row in csv.DictReader(file)
        ]
