"""Exact-arithmetic engine for a polyhedral sequence space X_M built over a base space Z.

Modules: ``base_spaces`` (Z), ``schreier``, ``construction`` (parameters and
blocks), ``measures`` (the norming set M), ``norm_engine`` (||.||_M and the
dual norm), ``quotient`` (Q, u_n* and the domination verifiers), ``cli``.
"""
from .base_spaces import BaseSpaceId, c0_space, lp_space, parse_space, tsirelson_space
from .construction import BlockSystem, ParameterLedger, standard_setup
from .measures import AtomicMeasure, UnitFunctional, in_M
from .norm_engine import dual_norm_M, norm_M
from .quotient import Setup, apply_Q, u_star
from .vectors import SparseVector, parse_vector

__version__ = "0.1.0"

__all__ = ["BaseSpaceId", "c0_space", "lp_space", "parse_space", "tsirelson_space", "BlockSystem",
           "ParameterLedger", "standard_setup", "AtomicMeasure", "UnitFunctional", "in_M",
           "dual_norm_M", "norm_M", "Setup", "apply_Q", "u_star", "SparseVector", "parse_vector"]
