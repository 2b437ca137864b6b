"""Package for simulating and designing single-site addressing of atoms
in optical lattices by position-dependent adiabatic passage.
"""


VERSION = '0.1.0'
