"""FIT denoiser tests."""
