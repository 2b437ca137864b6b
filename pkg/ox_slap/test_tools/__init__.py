"""Helpers for tests of ox_slap.
"""
