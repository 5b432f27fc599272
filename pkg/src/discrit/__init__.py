"""Numerical toolkit for rearrangement- and capacity-based spectral
discreteness criteria: weighted rearrangements, the extremal set-function
problem, Choquet/base-polyhedron duality, singular kernel compositions,
m-adic dense systems and the Cantor-window counterexample potential."""

__version__ = "0.1.0"
