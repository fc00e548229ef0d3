"""Margulis invariants, cross-ratios and orbit-counting thermodynamics for
affine deformations of Schottky groups in SO^0(2,1)."""
from .errors import MargulisError
from .freegroup import ConjClass, conj_class, enumerate_classes, format_word, parse_word
from .rep import DeformedRep, Representation, TangentVector, schottky_builder

__version__ = "0.1.0"

__all__ = [
    "ConjClass",
    "DeformedRep",
    "MargulisError",
    "Representation",
    "TangentVector",
    "conj_class",
    "enumerate_classes",
    "format_word",
    "parse_word",
    "schottky_builder",
]
