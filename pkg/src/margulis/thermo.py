"""Orbit counting: spectra, entropy, intersection, J and the pressure form."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.special import ndtr

from . import freegroup as fg
from .errors import InsufficientData, NotHyperbolic, SignMismatch, StepTooSmall
from .rep import DeformedRep, TangentVector, core_invariants, path_point, scaling_tangent

LOG = logging.getLogger(__name__)

GRID_POINTS = 64
MIN_COUNT = 50
# Relative width of the smoothed counting kernel used by J and the pressure
# form.  A sharp count makes J piecewise constant in the representation,
# which a finite-difference Hessian cannot see through.  Second variations
# are stable for widths between about 0.05 and 0.1 on the bundled example.
J_BANDWIDTH = 0.08
# J fits the base entropy on [c/2, c] with c this fraction of complete_below,
# leaving room for the second window, which is co-scaled by I.
J_WINDOW_FRACTION = 0.9
J_WEIGHTING = "chebyshev"
TRUNCATION_SLACK = 0.05
RICHARDSON_TOL = 0.2
# Below this magnitude two second-difference estimates are not compared.
RICHARDSON_FLOOR = 1e-6
_CHUNK_ROWS = 200_000


@lru_cache(maxsize=8)
def class_powers(rank: int, max_len: int) -> np.ndarray:
    classes, _ = class_arrays(rank, max_len)
    return np.array([len(c) // fg.primitive_period(c.word) for c in classes], dtype=float)


@lru_cache(maxsize=8)
def class_arrays(rank: int, max_len: int, workers: int = 1):
    """Enumerated classes and, per length, an (N_k, k) letter array."""
    classes = tuple(fg.enumerate_classes(rank, max_len, workers=workers))
    by_len: dict[int, list] = {}
    for idx, c in enumerate(classes):
        by_len.setdefault(len(c), []).append(idx)
    blocks = []
    for k, idx in sorted(by_len.items()):
        words = np.array([classes[i].word for i in idx], dtype=np.intp)
        blocks.append((np.array(idx), words))
    return classes, blocks


@dataclass
class SpectrumTable:
    """Margulis invariants and lengths of every class up to ``max_len``.

    Arrays are in enumeration order (length, then lexicographic);
    :meth:`entries` gives the rows sorted by alpha.
    """

    classes: tuple
    alpha: np.ndarray
    ell: np.ndarray
    word_length: np.ndarray
    max_len: int
    rank: int
    complete_below: float
    sign: int  # +1 or -1 for a one-signed spectrum, 0 if mixed
    power: np.ndarray = field(repr=False, default=None)  # k with class = (primitive class)^k

    @property
    def properness_violation(self) -> bool:
        return self.sign == 0

    def order(self) -> np.ndarray:
        return np.argsort(self.alpha, kind="stable")

    def entries(self):
        for i in self.order():
            yield self.classes[i], float(self.alpha[i]), float(self.ell[i]), int(self.word_length[i])

    def __len__(self) -> int:
        return len(self.classes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "word_length", "alpha", "ell"])
        for c, a, l, k in self.entries():
            writer.writerow([str(c), k, repr(a), repr(l)])
        return buf.getvalue()

    def to_records(self) -> list[dict]:
        return [
            {"class": str(c), "word_length": k, "alpha": a, "ell": l}
            for c, a, l, k in self.entries()
        ]


def class_invariants(rho: DeformedRep, max_len: int, workers: int = 1):
    """alpha and ell arrays (enumeration order) for all classes up to max_len."""
    classes, blocks = class_arrays(rho.rank, max_len, workers)
    alpha = np.empty(len(classes))
    ell = np.empty(len(classes))
    for idx, words in blocks:
        k = words.shape[1]
        step = max(1, _CHUNK_ROWS // k)
        for s in range(0, len(words), step):
            a, l, ok = core_invariants(rho, words[s : s + step], rho.linear.eps_hyp)
            if not ok.all():
                bad = classes[idx[s + int(np.argmin(ok))]]
                raise NotHyperbolic(f"class {bad} is not hyperbolic", bad.word)
            alpha[idx[s : s + step]] = a
            ell[idx[s : s + step]] = l
    return classes, alpha, ell


def build_spectrum(rho: DeformedRep, max_len: int, workers: int = 1) -> SpectrumTable:
    classes, alpha, ell = class_invariants(rho, max_len, workers)
    lengths = np.array([len(c) for c in classes])
    if np.all(alpha > 0):
        sign = 1
    elif np.all(alpha < 0):
        sign = -1
    else:
        sign = 0
    # Truncation bound: a class longer than max_len is assumed to have
    # |alpha| >= its length times the smallest observed |alpha| per letter.
    complete_below = float(max_len * np.min(np.abs(alpha) / lengths))
    return SpectrumTable(
        classes, alpha, ell, lengths, max_len, rho.rank, complete_below, sign,
        class_powers(rho.rank, max_len),
    )


# -- entropy ---------------------------------------------------------------


@dataclass
class EntropyEstimate:
    h: float
    stderr: float
    window: tuple
    count_curve: list = field(repr=False)
    r2: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "stderr": self.stderr,
            "window": list(self.window),
            "r2": self.r2,
            "count_curve": [list(p) for p in self.count_curve],
        }


def _signed_alpha(table: SpectrumTable) -> np.ndarray:
    if table.sign == 0:
        raise SignMismatch("spectrum has Margulis invariants of both signs")
    return table.sign * table.alpha


def _weights(table: SpectrumTable, a: np.ndarray, weighting: str) -> np.ndarray | None:
    if weighting == "count":
        return None
    if weighting == "chebyshev":
        power = table.power if table.power is not None else class_powers(table.rank, table.max_len)
        return a / power
    raise ValueError(f"unknown weighting {weighting!r}")


def counting_function(
    table: SpectrumTable, thresholds, bandwidth: float = 0.0, weighting: str = "count"
) -> np.ndarray:
    """N(T) = #{classes with |alpha| <= T}, optionally smoothed or weighted.

    ``weighting="chebyshev"`` weights each class by |alpha| of its primitive
    root instead of 1.  Both sums grow like exp(hT), but the weighted one has
    no 1/T prefactor, so its log is much closer to linear at small T.

    With ``bandwidth > 0`` the indicator is replaced by a normal CDF of width
    ``bandwidth * max(thresholds)``, which keeps N differentiable in the
    representation and commutes with rescaling alpha and T together.
    """
    a = _signed_alpha(table)
    w = _weights(table, a, weighting)
    t = np.asarray(thresholds, dtype=float)
    if bandwidth <= 0:
        order = np.argsort(a, kind="stable")
        idx = np.searchsorted(a[order], t, side="right")
        if w is None:
            return idx.astype(float)
        return np.concatenate([[0.0], np.cumsum(w[order])])[idx]
    width = bandwidth * float(t.max())
    k = ndtr((t[:, None] - a[None, :]) / width)
    return k.sum(axis=1) if w is None else k @ w


def fit_growth_rate(thresholds, log_counts):
    """Least-squares slope of log N against T: (slope, stderr, r2)."""
    res = stats.linregress(np.asarray(thresholds, float), np.asarray(log_counts, float))
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    return float(res.slope), stderr, float(res.rvalue**2)


def entropy(
    table: SpectrumTable,
    window=None,
    grid: int = GRID_POINTS,
    min_count: int = MIN_COUNT,
    bandwidth: float = 0.0,
    weighting: str = "count",
) -> EntropyEstimate:
    """Exponential growth rate of N(T) over a window inside the complete range."""
    a = _signed_alpha(table)
    top = table.complete_below
    lo, hi = window if window is not None else (top / 2.0, top)
    if not (0 < lo < hi <= top * (1 + 1e-12)):
        raise InsufficientData(
            f"window ({lo:.6g}, {hi:.6g}) is not inside (0, {top:.6g}], the complete range"
        )
    if np.count_nonzero(a <= top) < min_count:
        raise InsufficientData(f"fewer than {min_count} classes below {top:.6g}")
    t = np.linspace(lo, hi, grid)
    n = counting_function(table, t, bandwidth, weighting)
    if np.any(n <= 0):
        raise InsufficientData("empty count inside the window")
    logn = np.log(n)
    h, se, r2 = fit_growth_rate(t, logn)
    return EntropyEstimate(h, se, (float(lo), float(hi)), list(zip(t.tolist(), logn.tolist())), r2)


# -- intersection and J ----------------------------------------------------


def intersection(table1: SpectrumTable, rho2: DeformedRep | None = None, table2: SpectrumTable | None = None) -> float:
    """Average of alpha_2 / alpha_1 over classes with |alpha_1| <= complete_below."""
    a1 = _signed_alpha(table1)
    mask = a1 <= table1.complete_below
    if np.any(a1[mask] <= 0):
        raise SignMismatch("non-positive Margulis invariant in the counting set")
    if table2 is not None:
        if table2.rank != table1.rank or table2.max_len < table1.max_len:
            raise ValueError("second table does not cover the first")
        alpha2 = table2.alpha[: len(table1.classes)]
    elif rho2 is not None:
        _, alpha2, _ = class_invariants(rho2, table1.max_len)
    else:
        raise ValueError("need rho2 or table2")
    return float(np.mean(table1.sign * alpha2[mask] / a1[mask]))


class _JBase:
    """Base-point data for J_rho: table, fitting window top and entropy."""

    def __init__(self, table: SpectrumTable, bandwidth: float, fraction: float = J_WINDOW_FRACTION):
        self.table = table
        self.bandwidth = bandwidth
        self.top = fraction * table.complete_below
        self.h = self._entropy(table, self.top)

    def _entropy(self, table: SpectrumTable, top: float) -> float:
        return entropy(
            table, (top / 2.0, top), bandwidth=self.bandwidth, weighting=J_WEIGHTING
        ).h

    def j(self, table2: SpectrumTable) -> float:
        # The second window is the first one stretched by I, so J is exactly
        # invariant under u2 -> c*u2 and stays smooth in rho2.
        i12 = intersection(self.table, table2=table2)
        top2 = self.top * i12
        if top2 > table2.complete_below:
            raise InsufficientData(
                f"co-scaled window top {top2:.6g} exceeds complete_below {table2.complete_below:.6g}"
            )
        return i12 * self._entropy(table2, top2) / self.h


def j_functional(
    rho1: DeformedRep,
    rho2: DeformedRep,
    max_len: int,
    bandwidth: float = J_BANDWIDTH,
    table1: SpectrumTable | None = None,
) -> float:
    """J_{rho1}(rho2) = I(rho1, rho2) h_{rho2} / h_{rho1} at matched depth.

    Both entropies use the primitive-length weighted count.  rho1 is fitted
    on [c/2, c], rho2 on the same window multiplied by I(rho1, rho2).
    """
    t1 = table1 if table1 is not None else build_spectrum(rho1, max_len)
    return _JBase(t1, bandwidth).j(build_spectrum(rho2, max_len))


class PressureEvaluator:
    """Second variations of t -> J_rho(path_point(rho, v, t)) at t = 0.

    The base spectrum and entropy are computed once and reused for every
    direction.
    """

    def __init__(self, rho: DeformedRep, max_len: int, bandwidth: float = J_BANDWIDTH):
        self.rho = rho
        self.max_len = max_len
        self.bandwidth = bandwidth
        self.base = _JBase(build_spectrum(rho, max_len), bandwidth)
        self.table = self.base.table
        self.h = self.base.h

    def j_along(self, v: TangentVector, t: float) -> float:
        if t == 0:
            return 1.0
        return self.base.j(build_spectrum(path_point(self.rho, v, t), self.max_len))

    def _stencil(self, v: TangentVector, step: float) -> float:
        f = {k: self.j_along(v, k * step) for k in (-2, -1, 1, 2)}
        return (16 * (f[1] + f[-1]) - (f[2] + f[-2]) - 30.0) / (12 * step * step)

    def second_variation(self, v: TangentVector, step: float) -> tuple[float, float]:
        """(estimate at step, estimate at step/2)."""
        return self._stencil(v, step), self._stencil(v, step / 2)


def _check_richardson(p: float, p_half: float, tol: float = RICHARDSON_TOL, floor: float = RICHARDSON_FLOOR):
    scale = max(abs(p), abs(p_half))
    if scale > floor and abs(p - p_half) > tol * scale:
        raise StepTooSmall(
            f"second difference unstable under step halving ({p:.6g} vs {p_half:.6g})"
        )


def pressure_form(
    rho: DeformedRep,
    v: TangentVector,
    w: TangentVector,
    max_len: int,
    step: float = 1e-3,
    bandwidth: float = J_BANDWIDTH,
    evaluator: PressureEvaluator | None = None,
) -> float:
    """P_rho(v, w): finite-difference Hessian of J, polarized for v != w."""
    ev = evaluator if evaluator is not None else PressureEvaluator(rho, max_len, bandwidth)

    def quad(d):
        p, p_half = ev.second_variation(d, step)
        _check_richardson(p, p_half)
        return p

    if v is w:
        return quad(v)
    return 0.25 * (quad(v + w) - quad(v - w))


def scaling_path_j(rho: DeformedRep, ts, max_len: int, bandwidth: float = J_BANDWIDTH) -> list[float]:
    """J_rho along the cocycle-scaling path (L, (1 + t) u)."""
    ev = PressureEvaluator(rho, max_len, bandwidth)
    v = scaling_tangent(rho)
    return [ev.j_along(v, t) for t in ts]
