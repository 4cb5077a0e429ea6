import dataclasses


class DiffumaError(Exception):
    pass


class DimensionError(DiffumaError, ValueError):
    pass


class ConfigError(DiffumaError, ValueError):
    pass


class ArchiveError(DiffumaError):
    pass


class ArchiveFormatError(ArchiveError):
    pass


class CorruptArchiveError(ArchiveError):
    pass


class CheckpointError(DiffumaError):
    pass


class GradientCheckError(DiffumaError):
    pass


@dataclasses.dataclass
class NumericalError(DiffumaError):  # noqa: N818
    message: str
    name: str | None = None

    def __str__(self) -> str:
        if self.name is None:
            return self.message
        return f"{self.message} (in {self.name!r})"
