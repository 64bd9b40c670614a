"""Domain models package for data representation.

This package contains Pydantic model classes that define the structure of data
used throughout the pipeline: records, segments, spectra, wavelet
decompositions, datasets, trained models and evaluation reports.
"""
