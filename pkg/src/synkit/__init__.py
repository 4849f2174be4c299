"""synkit: a small logic-synthesis toolkit.

Gate-level netlists, and-inverter graphs, arithmetic generators, cut-based
rewriting and mapping, static timing and simulation-based equivalence
checking.
"""
__version__ = "0.1.0"
