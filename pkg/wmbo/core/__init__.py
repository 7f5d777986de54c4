"""Core numerics: kernel analysis, spectral stepping, geometry, flow and validation."""
