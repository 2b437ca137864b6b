"""Tests of the physics and numerics layers.
"""
