"""Regime-change detection across trials from spectra, spectrograms and their persistence diagrams."""

__version__ = "0.1.0"
