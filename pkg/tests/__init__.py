"""Tests for ox_slap.
"""
