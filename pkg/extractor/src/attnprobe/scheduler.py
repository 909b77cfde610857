"""Deterministic DDIM stepping over the scaled-linear beta schedule.

The schedule is the standard 1000-step training grid with betas going
from 8.5e-4 to 1.2e-2 on a square-root-linear ramp.  Sampling uses an
evenly strided subsequence of ``total_steps`` timesteps.  All moves are
the eta=0 (fully deterministic) DDIM update, expressed through a single
primitive that carries a state from one noise level to another given a
noise prediction:

    x0_hat = (x - sqrt(1 - a_from) * eps) / sqrt(a_from)
    x_to   = sqrt(a_to) * x0_hat + sqrt(1 - a_to) * eps

With the same ``eps`` the move is an exact involution, which is what
makes inversion meaningful.
"""

import numpy as np
import torch


class DDIMSchedule:
    def __init__(self, total_steps=50, train_steps=1000,
                 beta_start=0.00085, beta_end=0.012):
        if not 1 <= total_steps <= train_steps:
            raise ValueError("total_steps must lie in [1, train_steps]")
        betas = np.linspace(beta_start ** 0.5, beta_end ** 0.5,
                            train_steps, dtype=np.float64) ** 2
        self.train_steps = train_steps
        self.total_steps = total_steps
        self.alphas_bar = np.cumprod(1.0 - betas)
        stride = train_steps // total_steps
        # ascending: timesteps[i] is the level reached after i+1 noising steps
        self.timesteps = np.arange(0, train_steps, stride, dtype=np.int64)[:total_steps]

    def alpha_bar(self, t: int) -> float:
        """Cumulative signal fraction at timestep ``t``; t=-1 is the clean image."""
        if t < 0:
            return 1.0
        return float(self.alphas_bar[t])

    @staticmethod
    def move(x: torch.Tensor, eps: torch.Tensor, a_from: float, a_to: float) -> torch.Tensor:
        """One eta=0 DDIM update from noise level ``a_from`` to ``a_to``."""
        x0_hat = (x - (1.0 - a_from) ** 0.5 * eps) / a_from ** 0.5
        return a_to ** 0.5 * x0_hat + (1.0 - a_to) ** 0.5 * eps

    def invert(self, x0: torch.Tensor, model, steps: int) -> torch.Tensor:
        """Noise a clean latent ``steps`` levels up the schedule.

        The noise prediction for each move is evaluated at the source
        state's timestep (clamped to the first grid point for the move
        off the clean image), the usual first-order inversion
        approximation.
        """
        if not 0 <= steps <= self.total_steps:
            raise ValueError(f"steps must lie in [0, {self.total_steps}]")
        x = x0
        for i in range(steps):
            t_src = self.timesteps[max(i - 1, 0)]
            t_dst = self.timesteps[i]
            eps = model(x, int(t_src))
            x = self.move(x, eps, self.alpha_bar(int(t_src) if i > 0 else -1),
                          self.alpha_bar(int(t_dst)))
        return x

    def denoise_step(self, x: torch.Tensor, model, level: int) -> torch.Tensor:
        """One denoising move from grid level ``level`` toward the image.

        ``level`` counts noising steps applied, so a latent produced by
        ``invert(..., steps=k)`` sits at level ``k``.  Level 0 runs the
        model at the first timestep and moves nowhere, which is how a
        no-inversion extraction still gets a forward pass to harvest.
        """
        if not 0 <= level <= self.total_steps:
            raise ValueError(f"level must lie in [0, {self.total_steps}]")
        t_here = int(self.timesteps[max(level - 1, 0)])
        a_here = self.alpha_bar(t_here) if level > 0 else 1.0
        t_prev = int(self.timesteps[level - 2]) if level >= 2 else -1
        a_prev = self.alpha_bar(t_prev) if level > 0 else 1.0
        eps = model(x, t_here)
        return self.move(x, eps, a_here, a_prev)
