"""Classifier construction, training, scoring and persistence."""
