"""Services package for pipeline logic.

This package contains the service modules that implement the pipeline:
signal conditioning and denoising, feature extraction, classifiers, the
evaluation harness and result reporting.
"""
