"""Lyapunov exponents and bifurcation measures for holomorphic families of Moebius groups."""
