"""Trigonometric-system norms and the ideal norms rho, delta and mu."""
