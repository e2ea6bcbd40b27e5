"""Discrete abelian Yang-Mills fields, helicity observables and their Poisson algebra."""

__version__ = "0.1.0"
