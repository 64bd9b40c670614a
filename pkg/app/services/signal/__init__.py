"""Signal conditioning: band-pass filtering, segmentation and KLT denoising."""
