"""Graded Fuzz: sensitivity typechecker, exact distribution interpreter and privacy-bound harness."""

__version__ = "0.1.0"
