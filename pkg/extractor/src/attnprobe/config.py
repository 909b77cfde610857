"""Extraction run configuration."""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ExtractionConfig:
    """Settings for one extraction run.

    ``inversion_steps`` counts deterministic noising steps out of a
    ``total_steps`` schedule before the single harvested denoising step.
    Zero is valid: the image latent is treated as sitting at the first
    timestep and attention is read from a denoising step there.
    """

    inversion_steps: int = 10
    total_steps: int = 50
    image_size: tuple = (512, 512)
    resolutions: tuple = (8, 16, 32, 64)
    prompt: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if not 0 <= self.inversion_steps <= self.total_steps:
            raise ValueError(
                f"inversion_steps must lie in [0, {self.total_steps}], "
                f"got {self.inversion_steps}"
            )
        if len(self.image_size) != 2 or any(s < 8 for s in self.image_size):
            raise ValueError("image_size must be two sides >= 8")
        res = tuple(sorted(int(r) for r in self.resolutions))
        if not res:
            raise ValueError("at least one resolution is required")
        if any(r < 2 for r in res):
            raise ValueError("resolutions must be >= 2")
        object.__setattr__(self, "resolutions", res)
