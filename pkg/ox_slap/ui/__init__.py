"""Configuration, artifact writers and command line for ox_slap.
"""
