"""ehg-ptb application package.

This package contains the modules and subpackages that make up the ehg-ptb
pipeline: PhysioNet EHG record ingestion, band-pass filtering and segmentation,
Karhunen-Loeve subspace denoising, spectrotemporal feature extraction, a suite
of classical classifiers and a balanced-subsampling cross-validation harness.
"""

__version__ = "1.0.0"
