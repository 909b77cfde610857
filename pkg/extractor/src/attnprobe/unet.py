"""A miniature latent U-Net with self-attention at every decoder scale.

This is the bundled lightweight backbone: a few residual conv stages
down from the 64x64 latent to 8x8 and back up, with a multi-head
self-attention block after each decoder stage.  It exists so the
extraction pipeline, the attention taps, and the output contract can
run and be tested on machines with no diffusion checkpoint; the
architecture mirrors where the big models put their decoder
self-attention, not their capacity.
"""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F


def timestep_embedding(t: int, dim: int, max_period: float = 10000.0) -> torch.Tensor:
    """Sinusoidal embedding of a scalar timestep, shape (dim,)."""
    half = dim // 2
    freqs = torch.exp(-math.log(max_period) * torch.arange(half, dtype=torch.float32) / half)
    ang = float(t) * freqs
    emb = torch.cat([torch.cos(ang), torch.sin(ang)])
    if dim % 2:
        emb = torch.cat([emb, emb.new_zeros(1)])
    return emb


class SelfAttention2d(nn.Module):
    """Multi-head dot-product self-attention over spatial positions.

    When ``capture`` is set the post-softmax per-head attention
    (heads, N, N) is stashed on ``last_attn`` for a tap to collect.
    """

    def __init__(self, channels: int, heads: int = 2, logit_gain: float = 16.0):
        super().__init__()
        if channels % heads:
            raise ValueError("channels must divide evenly into heads")
        self.heads = heads
        self.norm = nn.GroupNorm(1, channels)
        self.qkv = nn.Conv2d(channels, 3 * channels, 1)
        self.proj = nn.Conv2d(channels, channels, 1)
        # widens the logit range of the randomly initialised net so maps
        # keep visible structure instead of collapsing toward uniform
        self.logit_gain = logit_gain
        self.capture = False
        self.last_attn = None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        n, dh = h * w, c // self.heads
        q, k, v = self.qkv(self.norm(x)).reshape(b, 3, self.heads, dh, n).unbind(1)
        logits = torch.einsum("bhdi,bhdj->bhij", q, k) * (self.logit_gain / math.sqrt(dh))
        attn = logits.softmax(dim=-1)
        if self.capture:
            self.last_attn = attn.detach()[0]
        out = torch.einsum("bhij,bhdj->bhdi", attn, v).reshape(b, c, h, w)
        return x + self.proj(out)


class ResBlock(nn.Module):
    def __init__(self, cin: int, cout: int, temb_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.temb = nn.Linear(temb_dim, cout)
        self.skip = nn.Conv2d(cin, cout, 1) if cin != cout else nn.Identity()
        self.norm1 = nn.GroupNorm(1, cout)
        self.norm2 = nn.GroupNorm(1, cout)

    def forward(self, x, temb):
        h = F.silu(self.norm1(self.conv1(x)))
        h = h + self.temb(temb)[:, :, None, None]
        h = F.silu(self.norm2(self.conv2(h)))
        return h + self.skip(x)


class TinyLatentUNet(nn.Module):
    """Latent-space epsilon predictor over a 4x64x64 input.

    Encoder stages halve the side 64 -> 32 -> 16 -> 8; decoder stages
    mirror them with skip concatenation, and each decoder stage ends in
    a :class:`SelfAttention2d`.  ``decoder_attention`` maps the spatial
    side to its attention module, which is the surface the extraction
    taps hook.
    """

    SIDES = (8, 16, 32, 64)

    def __init__(self, latent_channels: int = 4, base: int = 16, temb_dim: int = 32):
        super().__init__()
        c1, c2, c3, c4 = base, base * 2, base * 3, base * 4
        self.temb_dim = temb_dim
        self.temb_mlp = nn.Sequential(nn.Linear(temb_dim, temb_dim), nn.SiLU(),
                                      nn.Linear(temb_dim, temb_dim))
        self.enc64 = ResBlock(latent_channels, c1, temb_dim)
        self.enc32 = ResBlock(c1, c2, temb_dim)
        self.enc16 = ResBlock(c2, c3, temb_dim)
        self.enc8 = ResBlock(c3, c4, temb_dim)
        self.mid = ResBlock(c4, c4, temb_dim)
        self.dec8 = ResBlock(c4 + c4, c3, temb_dim)
        self.dec16 = ResBlock(c3 + c3, c2, temb_dim)
        self.dec32 = ResBlock(c2 + c2, c1, temb_dim)
        self.dec64 = ResBlock(c1 + c1, c1, temb_dim)
        self.attn = nn.ModuleDict({
            "8": SelfAttention2d(c3),
            "16": SelfAttention2d(c2),
            "32": SelfAttention2d(c1),
            "64": SelfAttention2d(c1),
        })
        self.out = nn.Conv2d(c1, latent_channels, 3, padding=1)

    @property
    def decoder_attention(self) -> dict:
        return {int(side): mod for side, mod in self.attn.items()}

    def forward(self, x: torch.Tensor, t: int) -> torch.Tensor:
        temb = self.temb_mlp(timestep_embedding(t, self.temb_dim)[None, :])
        h64 = self.enc64(x, temb)
        h32 = self.enc32(F.avg_pool2d(h64, 2), temb)
        h16 = self.enc16(F.avg_pool2d(h32, 2), temb)
        h8 = self.enc8(F.avg_pool2d(h16, 2), temb)
        h = self.mid(h8, temb)
        h = self.attn["8"](self.dec8(torch.cat([h, h8], 1), temb))
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = self.attn["16"](self.dec16(torch.cat([h, h16], 1), temb))
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = self.attn["32"](self.dec32(torch.cat([h, h32], 1), temb))
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = self.attn["64"](self.dec64(torch.cat([h, h64], 1), temb))
        return self.out(h)
