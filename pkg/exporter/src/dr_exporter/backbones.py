"""Toy-scale feature extractors echoing the three backbone families, plus
the classifier head assembly.

These are deliberately small stand-ins: each keeps its family's signature
operation (dense concatenation, depthwise-separable convolution, separable
convolutions with residual skips) at a size that runs on any CPU in
milliseconds. Real pretrained weights are out of scope; ``build_head``
optionally loads a local state dict instead of fetching anything.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn

from .blocks import ImprovedResidualBlock

BACKBONES = ("densenet169", "mobilenetv1", "xception")


class _DenseBlock(nn.Module):
    """Each layer consumes the concatenation of all previous feature maps."""

    def __init__(self, in_channels: int, growth: int, layers: int):
        super().__init__()
        self.layers = nn.ModuleList()
        channels = in_channels
        for _ in range(layers):
            self.layers.append(
                nn.Sequential(
                    nn.Conv2d(channels, growth, kernel_size=3, padding=1, bias=False),
                    nn.BatchNorm2d(growth),
                    nn.ReLU(),
                )
            )
            channels += growth
        self.out_channels = channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for layer in self.layers:
            x = torch.cat([x, layer(x)], dim=1)
        return x


class DenseNetTiny(nn.Module):
    def __init__(self):
        super().__init__()
        self.stem = nn.Sequential(
            nn.Conv2d(3, 16, kernel_size=3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(16),
            nn.ReLU(),
        )
        self.block1 = _DenseBlock(16, growth=8, layers=3)
        self.transition = nn.Sequential(
            nn.Conv2d(self.block1.out_channels, 32, kernel_size=1, bias=False),
            nn.AvgPool2d(2),
        )
        self.block2 = _DenseBlock(32, growth=8, layers=3)
        self.out_channels = self.block2.out_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.block2(self.transition(self.block1(self.stem(x))))


def _separable(in_channels: int, out_channels: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_channels, in_channels, kernel_size=3, stride=stride,
                  padding=1, groups=in_channels, bias=False),
        nn.BatchNorm2d(in_channels),
        nn.ReLU(),
        nn.Conv2d(in_channels, out_channels, kernel_size=1, bias=False),
        nn.BatchNorm2d(out_channels),
        nn.ReLU(),
    )


class MobileNetTiny(nn.Module):
    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 16, kernel_size=3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(16),
            nn.ReLU(),
            _separable(16, 32),
            _separable(32, 48, stride=2),
            _separable(48, 56),
        )
        self.out_channels = 56

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x)


class _SeparableResidual(nn.Module):
    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.body = nn.Sequential(
            _separable(in_channels, out_channels),
            nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1,
                      groups=out_channels, bias=False),
            nn.BatchNorm2d(out_channels),
        )
        self.skip = nn.Conv2d(in_channels, out_channels, kernel_size=1, bias=False)
        self.act = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(self.body(x) + self.skip(x))


class XceptionTiny(nn.Module):
    def __init__(self):
        super().__init__()
        self.stem = nn.Sequential(
            nn.Conv2d(3, 16, kernel_size=3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(16),
            nn.ReLU(),
        )
        self.flow = nn.Sequential(
            _SeparableResidual(16, 32),
            nn.MaxPool2d(2),
            _SeparableResidual(32, 48),
        )
        self.out_channels = 48

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.flow(self.stem(x))


_FAMILIES = {
    "densenet169": DenseNetTiny,
    "mobilenetv1": MobileNetTiny,
    "xception": XceptionTiny,
}


class ClassifierHead(nn.Module):
    """Backbone features -> improved residual block -> pooled softmax scores.

    Softmax in the forward pass guarantees valid probability rows, which is
    what the prediction-CSV contract requires.
    """

    def __init__(self, backbone: nn.Module, channels: int, num_classes: int,
                 negative_slope: float):
        super().__init__()
        self.backbone = backbone
        self.block = ImprovedResidualBlock(channels, negative_slope)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.classifier = nn.Linear(channels, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        features = self.block(self.backbone(x))
        pooled = self.pool(features).flatten(1)
        return torch.softmax(self.classifier(pooled), dim=1)


def build_head(
    backbone_name: str,
    num_classes: int = 5,
    negative_slope: float = 0.01,
    weights_path: str | Path | None = None,
    seed: int = 0,
) -> ClassifierHead:
    """Assemble backbone + improved residual block + softmax classifier.

    With ``weights_path`` the state dict is loaded from the local file
    (missing file is an error); otherwise parameters are seeded random.
    """
    if backbone_name not in _FAMILIES:
        raise ValueError(f"unknown backbone {backbone_name!r}; expected one of {BACKBONES}")
    torch.manual_seed(seed)
    backbone = _FAMILIES[backbone_name]()
    model = ClassifierHead(backbone, backbone.out_channels, num_classes, negative_slope)
    if weights_path is not None:
        path = Path(weights_path)
        if not path.exists():
            raise FileNotFoundError(f"weights file not found: {path}")
        model.load_state_dict(torch.load(path, map_location="cpu", weights_only=True))
    model.eval()
    return model
