"""Matrix thermodynamic uncertainty relations for non-Abelian charge transport."""

__version__ = "0.1.0"
