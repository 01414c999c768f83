"""Utility modules for einstein-lab."""
