"""Backbone + improved-residual-block inference exporting prediction CSVs
for the salp-ensemble pipeline."""

__version__ = "0.1.0"
