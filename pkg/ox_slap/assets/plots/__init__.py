"""Templates for generated plotting scripts.
"""
