"""Test suite for einstein-lab."""
