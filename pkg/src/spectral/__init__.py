"""Periodic supersymmetric hierarchies: exact construction and numerical verification."""
