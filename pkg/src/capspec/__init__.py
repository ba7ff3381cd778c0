"""Validated spectra of geodesic caps.

Rigorous interval enclosures of cap eigenfunction profiles, certified
eigenvalue-crossing checks, and a floating-point spectrum explorer.
"""

__version__ = "0.1.0"
