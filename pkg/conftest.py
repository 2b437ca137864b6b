"""Simple pytest hook to skip setup.py
"""

collect_ignore = ["setup.py"]
