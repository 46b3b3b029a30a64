"""
Adversarial training loops.
"""
