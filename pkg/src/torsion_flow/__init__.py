"""
Torsion Flow - pseudohermitian geometry of homogeneous contact 3-manifolds

Structure constants, Tanaka-Webster invariants, the torsion flow and its
coupled variants, and numerical checks of their monotone functionals.
"""

__version__ = "0.1.0"
__author__ = "Torsion Flow Team"
__email__ = "team@torsion-flow.dev"
__description__ = "Pseudohermitian invariants and torsion flows on homogeneous contact 3-manifolds"

from .config import Settings

__all__ = ["Settings", "__version__"]
