"""
Analytically characterised stochastic generators.
"""
