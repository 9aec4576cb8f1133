"""
Optimal finite-rank (internal-variable) models of linear viscoelastic memory.
"""

__version__ = "0.1.0"
