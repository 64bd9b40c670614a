"""Metrics, resampling and the repeated cross-validation experiment."""
