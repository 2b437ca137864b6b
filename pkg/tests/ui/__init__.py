"""Tests of configuration loading and the command line.
"""
