"""Residual blocks: the standard two-convolution block and the improved
variant that swaps ReLU for a leaky rectifier so negative pre-activations
keep a nonzero gradient (no dead units).

Both blocks preserve the feature-map shape (the identity skip requires it).
At negative_slope == 0 the improved block instantiates the plain rectifier,
making its output bit-identical to the original block on shared weights.
"""

from __future__ import annotations

import torch
from torch import nn


def _conv_bn(channels: int) -> list[nn.Module]:
    return [
        nn.Conv2d(channels, channels, kernel_size=3, padding=1, bias=False),
        nn.BatchNorm2d(channels),
    ]


class OriginalResidualBlock(nn.Module):
    """conv-BN-ReLU-conv-BN with identity skip, ReLU after the sum."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1, self.bn1 = _conv_bn(channels)
        self.conv2, self.bn2 = _conv_bn(channels)
        self.act = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.act(self.bn1(self.conv1(x)))
        h = self.bn2(self.conv2(h))
        return self.act(x + h)


class ImprovedResidualBlock(nn.Module):
    """Same topology with a leaky rectifier of slope ``negative_slope``."""

    def __init__(self, channels: int, negative_slope: float = 0.01):
        super().__init__()
        if negative_slope < 0.0:
            raise ValueError("negative_slope must be >= 0")
        self.channels = channels
        self.negative_slope = negative_slope
        self.conv1, self.bn1 = _conv_bn(channels)
        self.conv2, self.bn2 = _conv_bn(channels)
        # slope 0 is exactly ReLU; use the canonical kernel so the original
        # block is reproduced bit for bit
        self.act = nn.ReLU() if negative_slope == 0.0 else nn.LeakyReLU(negative_slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.act(self.bn1(self.conv1(x)))
        h = self.bn2(self.conv2(h))
        return self.act(x + h)
