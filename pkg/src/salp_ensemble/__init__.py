"""Salp-swarm-optimized classifier ensembles with wavelet-fusion
preprocessing and a full evaluation-metric suite."""

__version__ = "0.1.0"
