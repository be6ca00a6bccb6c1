"""Exact HeLP (Luthar-Passi) constraint engine for torsion units of integral group rings."""

from .analysis import AdmissibleCache, EliminationReport, PrimeGraph, admissible, report, spectrum
from .chartab import CharacterTable, DatasetError, bundled_dataset, load_dataset
from .cyclotomic import CycNum
from .help_core import AugTuple, CaseAssignment, ConstraintSystem, SystemBuilder, build_system
from .solver import Box, SolutionSet, Unbounded, brute_force, classify_trivial, enumerate_solutions, propagate_bounds

__all__ = [
    "AdmissibleCache",
    "AugTuple",
    "Box",
    "CaseAssignment",
    "CharacterTable",
    "ConstraintSystem",
    "CycNum",
    "DatasetError",
    "EliminationReport",
    "PrimeGraph",
    "SolutionSet",
    "SystemBuilder",
    "Unbounded",
    "admissible",
    "brute_force",
    "build_system",
    "bundled_dataset",
    "classify_trivial",
    "enumerate_solutions",
    "load_dataset",
    "propagate_bounds",
    "report",
    "spectrum",
]
