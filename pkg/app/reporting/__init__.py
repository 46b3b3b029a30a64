"""
CSV output, figures and analysis reports.
"""
