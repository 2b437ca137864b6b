"""Reference run configurations (JSON).
"""
