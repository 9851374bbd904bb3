"""Free probability workbench: non-commutative moments, Fock and random-matrix
models of semicircular families, and microstate free entropy."""

__version__ = "0.1.0"
