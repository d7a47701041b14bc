"""Desk-scale SAT search pipeline for the primitive weight-19 subcase of
Lam's problem, producing third-party-checkable certificates."""

__version__ = "0.1.0"
