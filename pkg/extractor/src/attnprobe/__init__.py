"""Multi-resolution self-attention extraction for the walkcut engine."""

from .backends import (BACKENDS, ExtractionError, StableDiffusionBackend,
                       TinyBackend, make_backend)
from .config import ExtractionConfig
from .extract import ExtractionResult, extract, extract_directory
from .hooks import AttentionTap
from .scheduler import DDIMSchedule
from .unet import SelfAttention2d, TinyLatentUNet

__all__ = [
    "AttentionTap",
    "BACKENDS",
    "DDIMSchedule",
    "ExtractionConfig",
    "ExtractionError",
    "ExtractionResult",
    "SelfAttention2d",
    "StableDiffusionBackend",
    "TinyBackend",
    "TinyLatentUNet",
    "extract",
    "extract_directory",
    "make_backend",
]
