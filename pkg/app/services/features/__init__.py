"""Feature extraction: spectral, wavelet and assembled per-segment vectors."""
