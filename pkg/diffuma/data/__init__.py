from diffuma.data.archive import (
    ArchiveHeader,
    decode_archive,
    encode_archive,
    read_archive,
    read_header,
    split_inputs_targets,
    write_archive,
)
from diffuma.data.export import encode_pgm, export_pgm
from diffuma.data.metrics import (
    HorizonReport,
    MetricReport,
    evaluate,
    evaluate_horizons,
    mae,
    mse,
    read_report,
    ssim,
    write_report,
)
from diffuma.data.repair import random_bad_mask, repair_frames
from diffuma.data.synthetic import Motif, SyntheticSpec, generate_synthetic


__all__ = [
    "ArchiveHeader",
    "HorizonReport",
    "MetricReport",
    "Motif",
    "SyntheticSpec",
    "decode_archive",
    "encode_archive",
    "encode_pgm",
    "evaluate",
    "evaluate_horizons",
    "export_pgm",
    "generate_synthetic",
    "mae",
    "mse",
    "random_bad_mask",
    "read_archive",
    "read_header",
    "read_report",
    "repair_frames",
    "split_inputs_targets",
    "ssim",
    "write_archive",
    "write_report",
]
