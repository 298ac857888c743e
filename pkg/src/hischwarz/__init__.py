"""Higher Schwarzians, quasimodular forms for SL2(Z) and equivariant functions."""

__version__ = "0.1.0"
