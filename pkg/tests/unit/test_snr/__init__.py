"""SNR lab tests."""
