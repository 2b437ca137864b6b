"""Package with packaged assets: reference configurations and templates.
"""
