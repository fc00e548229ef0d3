"""Cross-ratio limits and variational formulas for pairs of group elements.

Given coprime words g and h, the sequences

    d_n = l(g^n h^n) - l(g^n) - l(h^n)
    a_n = alpha(g^n h^n) - alpha(g^n) - alpha(h^n)

converge exponentially.  ``length_gap_sequence`` and ``alpha_gap_sequence``
compute them next to their predicted limits; ``goldman_margulis_check`` and
``dcr_check`` compare finite-difference derivatives along a path of linear
representations with the corresponding Margulis-invariant expressions.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import freegroup as fg
from .errors import NotCoprime
from .minkowski import cross_ratio, neutral_section, pairing
from .rep import (
    TRACE_MAX,
    DeformedRep,
    Representation,
    TangentVector,
    axis_point,
    derivative_deformation,
    linear_word,
    margulis_invariant,
    path_point,
    translation_length,
    word_fixed_points,
)

DEFAULT_N_MAX = 12
DEFAULT_STEP = 1e-4


@dataclass
class GapSequence:
    """A convergent difference sequence and its predicted limit."""

    values: list
    target: float
    last_stable_n: int
    gaps: list = field(default_factory=list)
    ratio: float = float("nan")  # fitted geometric decrement of the gaps

    @property
    def final_gap(self) -> float:
        return self.gaps[-1] if self.gaps else float("nan")

    def decreasing(self, floor: float = 0.0) -> bool:
        """Gaps decrease strictly until they reach ``floor`` (roundoff level)."""
        g = np.asarray(self.gaps)
        live = g > floor
        if live.sum() < 2:
            return True
        idx = np.flatnonzero(live)
        return bool(np.all(np.diff(g[idx]) < 0) and idx[-1] == len(idx) - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["final_gap"] = self.final_gap
        return d


def _fit_ratio(gaps: Sequence[float], floor: float = 1e-13) -> float:
    g = np.asarray(gaps, dtype=float)
    keep = g > floor
    if keep.sum() < 2:
        return float("nan")
    n = np.arange(1, len(g) + 1)[keep]
    return float(np.exp(np.polyfit(n, np.log(g[keep]), 1)[0]))


def _check_pair(g, h):
    g = fg.reduce(g)
    h = fg.reduce(h)
    if not g or not h:
        raise NotCoprime("both words must be nontrivial")
    if not fg.are_coprime(g, h):
        raise NotCoprime(f"{fg.format_word(g)} and {fg.format_word(h)} are powers of a common element")
    return g, h


def _sequence(values, target) -> GapSequence:
    gaps = [abs(v - target) for v in values]
    return GapSequence(values, float(target), len(values), gaps, _fit_ratio(gaps))


def _in_range(rep: Representation, w) -> bool:
    _, core = fg.cyclic_split(w)
    tr = np.trace(linear_word(rep, core))
    return bool(np.isfinite(tr) and abs(tr) < TRACE_MAX)


def length_cross_ratio(rep: Representation, g, h) -> float:
    """b(h-, g-, g+, h+) from the fixed points of g and h."""
    fg_, fh = word_fixed_points(rep, g), word_fixed_points(rep, h)
    return float(cross_ratio(fh.minus, fg_.minus, fg_.plus, fh.plus))


def length_gap_sequence(rep: Representation, g, h, n_max: int = DEFAULT_N_MAX) -> GapSequence:
    """d_n = l(g^n h^n) - l(g^n) - l(h^n) for n = 1..n_max, target log b(h-, g-, g+, h+).

    Stops early (``last_stable_n < n_max``) once a trace leaves floating
    point range.  When the axes of g and h cross, b is negative and the
    target is NaN.
    """
    g, h = _check_pair(g, h)
    b = length_cross_ratio(rep, g, h)
    target = float(np.log(b)) if b > 0 else float("nan")
    values = []
    for n in range(1, n_max + 1):
        gn, hn = fg.power(g, n), fg.power(h, n)
        gh = fg.reduce(gn + hn)
        if not _in_range(rep, gh):
            break
        values.append(
            translation_length(rep, gh) - translation_length(rep, gn) - translation_length(rep, hn)
        )
    return _sequence(values, target)


def affine_pairing(rho: DeformedRep, g, h, x_g=None, x_h=None) -> float:
    """<X_g - X_h | nu(h-, g+) + nu(h+, g-)> with X_w on the axis of rho(w).

    ``x_g`` and ``x_h`` override the default axis points; any point on the
    same axis gives the same value.
    """
    g, h = fg.reduce(g), fg.reduce(h)
    fg_ = word_fixed_points(rho.linear, g)
    fh = word_fixed_points(rho.linear, h)
    xg = axis_point(rho, g) if x_g is None else np.asarray(x_g, dtype=float)
    xh = axis_point(rho, h) if x_h is None else np.asarray(x_h, dtype=float)
    direction = neutral_section(fh.minus, fg_.plus) + neutral_section(fh.plus, fg_.minus)
    return float(pairing(xg - xh, direction))


def alpha_gap_sequence(rho: DeformedRep, g, h, n_max: int = DEFAULT_N_MAX) -> GapSequence:
    """a_n = alpha(g^n h^n) - alpha(g^n) - alpha(h^n), target the affine pairing."""
    g, h = _check_pair(g, h)
    target = affine_pairing(rho, g, h)
    values = []
    for n in range(1, n_max + 1):
        gn, hn = fg.power(g, n), fg.power(h, n)
        gh = fg.reduce(gn + hn)
        if not _in_range(rho.linear, gh):
            break
        values.append(
            margulis_invariant(rho, gh) - margulis_invariant(rho, gn) - margulis_invariant(rho, hn)
        )
    return _sequence(values, target)


# -- derivatives along linear paths ----------------------------------------


@dataclass
class VariationCheck:
    fd: float
    exact: float
    fd_half: float  # same stencil at step / 2
    step: float

    @property
    def error(self) -> float:
        return abs(self.fd - self.exact)

    def within(self, tol: float) -> bool:
        return self.error <= tol * (1.0 + abs(self.exact))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error"] = self.error
        return d


def _linear_path(rep: Representation, v: TangentVector):
    if not v.is_linear_only():
        raise ValueError("expected a tangent vector with zero translation variation")
    base = DeformedRep(rep, [np.zeros(3)] * rep.rank)
    return lambda t: path_point(base, v, t).linear


def five_point_derivative(f, step: float) -> float:
    return (8 * (f(step) - f(-step)) - (f(2 * step) - f(-2 * step))) / (12 * step)


def goldman_margulis_check(rep: Representation, v: TangentVector, w, step: float = DEFAULT_STEP) -> VariationCheck:
    """d/dt l(w) along exp(tA_i) L_i versus alpha of the derivative deformation."""
    path = _linear_path(rep, v)
    w = fg.reduce(w)

    def f(t):
        return translation_length(path(t), w) if t else translation_length(rep, w)

    exact = margulis_invariant(derivative_deformation(rep, v), w)
    return VariationCheck(
        five_point_derivative(f, step), exact, five_point_derivative(f, step / 2), step
    )


def dcr_check(rep: Representation, v: TangentVector, g, h, step: float = DEFAULT_STEP) -> VariationCheck:
    """d/dt log b(h-, g-, g+, h+) along a linear path versus the affine pairing."""
    g, h = _check_pair(g, h)
    path = _linear_path(rep, v)

    def f(t):
        return float(np.log(length_cross_ratio(path(t) if t else rep, g, h)))

    exact = affine_pairing(derivative_deformation(rep, v), g, h)
    return VariationCheck(
        five_point_derivative(f, step), exact, five_point_derivative(f, step / 2), step
    )
