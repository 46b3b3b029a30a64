"""
Raw record ingestion.
"""
