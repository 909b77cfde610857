"""Model backends the extraction pipeline can drive.

A backend owns the latent encoding, the epsilon model, and the set of
decoder self-attention modules to tap.  ``TinyBackend`` is always
available and runs on CPU in seconds; ``StableDiffusionBackend`` wraps
the real 1.4 checkpoint when the diffusers package and local weights
exist, and raises a clear error when they do not.
"""

import numpy as np
import torch
from PIL import Image

from .unet import TinyLatentUNet


class ExtractionError(RuntimeError):
    pass


class TinyBackend:
    """Bundled CPU backbone; weights are seeded, not trained.

    The latent is a 4x64x64 area-downsampled view of the image (RGB
    plus luma, scaled to [-1, 1]), so attention structure follows image
    structure even though the net is random.
    """

    name = "tiny"
    latent_side = 64

    def __init__(self, seed: int = 0):
        torch.manual_seed(seed)
        self.net = TinyLatentUNet()
        self.net.eval()

    def encode(self, image: Image.Image) -> torch.Tensor:
        rgb = image.convert("RGB").resize(
            (self.latent_side, self.latent_side), Image.Resampling.BOX)
        arr = np.asarray(rgb, dtype=np.float32) / 127.5 - 1.0
        luma = arr @ np.array([0.299, 0.587, 0.114], dtype=np.float32)
        lat = np.concatenate([arr.transpose(2, 0, 1), luma[None]], axis=0)
        return torch.from_numpy(lat)[None]

    def model(self, x: torch.Tensor, t: int) -> torch.Tensor:
        with torch.no_grad():
            return self.net(x, t)

    def attention_modules(self) -> dict:
        return self.net.decoder_attention


class StableDiffusionBackend:
    """Stable Diffusion 1.4 over diffusers, decoder self-attention only.

    Loading is strictly local (no downloads).  Everything here fails
    with an ExtractionError naming what is missing, so the CLI surfaces
    a data error rather than a stack trace on hosts without the
    checkpoint.
    """

    name = "sd14"
    latent_side = 64
    model_id = "CompVis/stable-diffusion-v1-4"

    def __init__(self, seed: int = 0, device: str = "cpu"):
        try:
            import diffusers  # noqa: F401
        except ImportError:
            raise ExtractionError(
                "the sd14 backend needs the diffusers package "
                "(pip install attnprobe[sd]) and a local copy of the "
                f"{self.model_id} weights; use --backend tiny to run "
                "without a checkpoint") from None
        from diffusers import AutoencoderKL, UNet2DConditionModel

        torch.manual_seed(seed)
        try:
            self.unet = UNet2DConditionModel.from_pretrained(
                self.model_id, subfolder="unet", local_files_only=True)
            self.vae = AutoencoderKL.from_pretrained(
                self.model_id, subfolder="vae", local_files_only=True)
        except Exception as e:
            raise ExtractionError(
                f"could not load {self.model_id} weights locally: {e}") from e
        self.unet.eval().to(device)
        self.vae.eval().to(device)
        self.device = device
        self._empty_cond = None

    def encode(self, image: Image.Image) -> torch.Tensor:
        rgb = image.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 127.5 - 1.0
        x = torch.from_numpy(arr.transpose(2, 0, 1))[None].to(self.device)
        with torch.no_grad():
            lat = self.vae.encode(x).latent_dist.mode()
        return lat * self.vae.config.scaling_factor

    def model(self, x: torch.Tensor, t: int) -> torch.Tensor:
        cond = self._unconditional_embedding()
        with torch.no_grad():
            return self.unet(x, t, encoder_hidden_states=cond).sample

    def _unconditional_embedding(self):
        if self._empty_cond is None:
            # the segmentation pipeline never uses a caption, so the text
            # branch is fed a zero embedding of the CLIP hidden size
            dim = self.unet.config.cross_attention_dim
            self._empty_cond = torch.zeros(1, 77, dim, device=self.device)
        return self._empty_cond

    def attention_modules(self) -> dict:
        mods = {}
        for name, mod in self.unet.named_modules():
            if "up_blocks" not in name or not name.endswith("attn1"):
                continue  # attn1 is self-attention, attn2 cross
            mods.setdefault(self._block_side(name), mod)
        if not mods:
            raise ExtractionError("no decoder self-attention modules found")
        return mods

    @staticmethod
    def _block_side(name: str) -> int:
        # up_blocks.1/2/3 sit at sides 16/32/64 for a 64x64 latent;
        # up_blocks.0 has no attention in this architecture
        idx = int(name.split("up_blocks.")[1].split(".")[0])
        return {0: 8, 1: 16, 2: 32, 3: 64}[idx]


BACKENDS = {
    TinyBackend.name: TinyBackend,
    StableDiffusionBackend.name: StableDiffusionBackend,
}


def make_backend(name: str, seed: int = 0):
    try:
        cls = BACKENDS[name]
    except KeyError:
        raise ExtractionError(
            f"unknown backend {name!r}; choices: {sorted(BACKENDS)}") from None
    return cls(seed=seed)
