"""U-shaped encoder-decoder from (C, R, R) encodings to 32x32 unit maps.

The input resolution R is a power-of-two multiple of the 32-pixel map grid;
a stack of strided stem blocks first brings R down to 32, then a small U-Net
with skip connections works at map scale. The head is a sigmoid, so raw
outputs live in [0, 1] like the scaled targets.
"""

import numpy as np
import torch
from torch import nn

MAP_SIZE = 32
_WIDTH_CAP = 128


def _block(c_in, c_out):
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, padding=1, bias=False),
        nn.BatchNorm2d(c_out), nn.ReLU(inplace=True),
        nn.Conv2d(c_out, c_out, 3, padding=1, bias=False),
        nn.BatchNorm2d(c_out), nn.ReLU(inplace=True))


def _down(c_in, c_out):
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, stride=2, padding=1, bias=False),
        nn.BatchNorm2d(c_out), nn.ReLU(inplace=True))


class RadioMapNet(nn.Module):
    def __init__(self, in_channels: int, resolution: int, base_width: int = 16):
        super().__init__()
        if resolution < MAP_SIZE or resolution % MAP_SIZE:
            raise ValueError(f"resolution {resolution} not a multiple of 32")
        k = int(np.log2(resolution // MAP_SIZE))
        if MAP_SIZE << k != resolution:
            raise ValueError(f"resolution {resolution} must be a power-of-two "
                             "multiple of 32 (the net halves per stage)")
        self.in_channels = in_channels
        self.resolution = resolution

        w = base_width
        stem = [nn.Conv2d(in_channels, w, 3, padding=1, bias=False),
                nn.BatchNorm2d(w), nn.ReLU(inplace=True)]
        for _ in range(k):     # R -> 32
            stem.append(_down(w, min(2 * w, _WIDTH_CAP)))
            w = min(2 * w, _WIDTH_CAP)
        self.stem = nn.Sequential(*stem)

        w1, w2, w3 = w, min(2 * w, _WIDTH_CAP), min(4 * w, _WIDTH_CAP)
        self.enc1 = _block(w, w1)                       # 32
        self.down1 = _down(w1, w2)
        self.enc2 = _block(w2, w2)                      # 16
        self.down2 = _down(w2, w3)
        self.bottleneck = _block(w3, w3)                # 8
        self.up2 = nn.ConvTranspose2d(w3, w2, 2, stride=2)
        self.dec2 = _block(w2 + w2, w2)
        self.up1 = nn.ConvTranspose2d(w2, w1, 2, stride=2)
        self.dec1 = _block(w1 + w1, w1)
        self.head = nn.Conv2d(w1, 1, 1)

    def forward(self, x):
        x = self.stem(x)
        e1 = self.enc1(x)
        e2 = self.enc2(self.down1(e1))
        b = self.bottleneck(self.down2(e2))
        d2 = self.dec2(torch.cat([self.up2(b), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        return torch.sigmoid(self.head(d1)).squeeze(1)

    @property
    def param_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def masked_mse(pred, target, mask):
    """MSE over valid pixels only; masked pixels carry zero gradient."""
    m = mask.to(pred.dtype)
    n = m.sum()
    if n == 0:
        raise ValueError("batch has no valid pixels")
    return ((pred - target).square() * m).sum() / n
