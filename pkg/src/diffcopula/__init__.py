"""Copula-based diffusion models."""
