"""Core physics and numerics for ox_slap.
"""
