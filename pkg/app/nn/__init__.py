"""
Neural building blocks, generator and discriminators.
"""
