from ._gft import (
    FormatError,
    StabilityError,
    ValidationError,
    __version__,
    cli,
    diff_p,
    diff_x,
    diff_y,
    energy,
    evolve,
    read_gft,
    saturation,
    write_gft,
)

__all__ = [
    "FormatError",
    "StabilityError",
    "ValidationError",
    "__version__",
    "cli",
    "diff_p",
    "diff_x",
    "diff_y",
    "energy",
    "evolve",
    "read_gft",
    "saturation",
    "write_gft",
]
