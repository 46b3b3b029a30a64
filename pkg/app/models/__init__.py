"""
Data models for the turbulent field synthesis system.
"""
