"""
Core components: errors, configuration, field operations and statistics.
"""
