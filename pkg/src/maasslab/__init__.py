"""Numerical laboratory for level-one Maass forms.

Kloosterman sums, special functions, Hecke data ingestion, Rankin-Selberg
central values, the Kuznetsov trace formula, twisted first moments and the
distinguishing-prime machinery.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
