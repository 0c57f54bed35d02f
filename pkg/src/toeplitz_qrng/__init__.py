"""Streaming Toeplitz-hashing randomness extraction for multi-channel QRNGs."""

from .errors import (
    ConfigurationError,
    DataFormatError,
    DegenerateInputError,
    InfeasibleError,
    ToeplitzQrngError,
    UsageError,
)
from .gf2_toeplitz import (
    ExtractorDims,
    Seed,
    StepTables,
    matvec_blocked,
    matvec_full,
    submatrix_product,
    submatrix_window,
    toeplitz_entry,
    toeplitz_matrix,
)
from .pipeline import ExtractorState, new_extractor

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DataFormatError",
    "DegenerateInputError",
    "ExtractorDims",
    "ExtractorState",
    "InfeasibleError",
    "Seed",
    "StepTables",
    "ToeplitzQrngError",
    "UsageError",
    "matvec_blocked",
    "matvec_full",
    "new_extractor",
    "submatrix_product",
    "submatrix_window",
    "toeplitz_entry",
    "toeplitz_matrix",
]
