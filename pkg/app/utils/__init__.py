"""Utility modules for the ehg-ptb pipeline.

This package contains the WFDB header and signal codec, the annotation
manifest reader and writer, and the segment-failure tracker used during
feature extraction.
"""
