"""Schottky representations into SO^0(2,1) and their affine deformations.

Numerical notes
---------------
For a long word w the matrix L(w) has entries of size exp(length) and the
translation part u(w) is just as large, so the textbook formula
``alpha(w) = <u(w) | nu(w)>`` loses every significant digit to cancellation.
Instead the Margulis invariant is computed as a sum over cyclic rotations::

    alpha(x_1 ... x_k) = sum_i <u(x_i) | nu(x_i ... x_k x_1 ... x_{i-1})>

which follows from the cocycle identity and nu(c w c^-1) = L(c) nu(w).  Every
term is O(1).  Lengths, fixed points and alpha are always computed on the
cyclically reduced core of a word; the conjugator is applied afterwards to
boundary points, which is well conditioned.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from . import freegroup as fg
from .errors import InvalidAxis, LeftHyperbolicRegime, NotHyperbolic, SingularSystem
from .minkowski import (
    EPS_ORTH,
    boundary_from_angle,
    boundary_point,
    check_lorentz,
    flow_matrix,
    lorentz_inverse,
    neutral_section,
    pairing,
    so21_to_mink,
)

EPS_HYP = 1e-9
KAPPA_MAX = 1e12
# Products are renormalized before squaring; beyond this trace a word is
# treated as numerically out of range.
TRACE_MAX = 1e300


class AffineMap(NamedTuple):
    linear: np.ndarray
    translation: np.ndarray

    def __call__(self, x):
        return self.linear @ np.asarray(x, dtype=float) + self.translation

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other."""
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def inverse(self) -> "AffineMap":
        li = lorentz_inverse(self.linear)
        return AffineMap(li, -li @ self.translation)


class FixedPoints(NamedTuple):
    minus: np.ndarray
    plus: np.ndarray
    nu: np.ndarray
    ell: float


@dataclass(frozen=True, eq=False)
class Representation:
    """Generator images of a rank-n free group in SO^0(2,1)."""

    generators: tuple
    certified: bool | None = None
    eps_hyp: float = EPS_HYP

    def __post_init__(self):
        gens = tuple(check_lorentz(g) for g in self.generators)
        for i, g in enumerate(gens):
            if np.trace(g) <= 3.0 + self.eps_hyp:
                raise NotHyperbolic(f"generator {fg.format_word([2 * i])} is not hyperbolic", (2 * i,))
        object.__setattr__(self, "generators", gens)

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letter_matrices(self) -> np.ndarray:
        """Array of shape (2n, 3, 3) indexed by letter."""
        out = np.empty((2 * self.rank, 3, 3))
        for i, g in enumerate(self.generators):
            out[2 * i] = g
            out[2 * i + 1] = lorentz_inverse(g)
        return out


@dataclass(frozen=True, eq=False)
class DeformedRep:
    """A representation into SO^0(2,1) x R^3 given by its values on generators."""

    linear: Representation
    translations: tuple

    def __post_init__(self):
        us = tuple(np.array(u, dtype=float).reshape(3) for u in self.translations)
        if len(us) != self.linear.rank:
            raise ValueError("need one translation per generator")
        object.__setattr__(self, "translations", us)

    @property
    def rank(self) -> int:
        return self.linear.rank

    def letter_translations(self) -> np.ndarray:
        """Array of shape (2n, 3): u(g) and u(g^-1) = -L(g)^-1 u(g)."""
        out = np.empty((2 * self.rank, 3))
        for i, (g, u) in enumerate(zip(self.linear.generators, self.translations)):
            out[2 * i] = u
            out[2 * i + 1] = -lorentz_inverse(g) @ u
        return out

    def scaled(self, c: float) -> "DeformedRep":
        return DeformedRep(self.linear, tuple(c * u for u in self.translations))


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Variation of a DeformedRep: so(2,1) matrices (right-translated) and vectors."""

    linear_variation: tuple
    translation_variation: tuple

    def __post_init__(self):
        lin = tuple(np.array(a, dtype=float).reshape(3, 3) for a in self.linear_variation)
        tr = tuple(np.array(w, dtype=float).reshape(3) for w in self.translation_variation)
        if len(lin) != len(tr):
            raise ValueError("linear and translation variations must have equal length")
        for a in lin:
            so21_to_mink(a)  # raises NotInLieAlgebra
        object.__setattr__(self, "linear_variation", lin)
        object.__setattr__(self, "translation_variation", tr)

    @classmethod
    def zero(cls, rank: int) -> "TangentVector":
        return cls([np.zeros((3, 3))] * rank, [np.zeros(3)] * rank)

    def is_linear_only(self) -> bool:
        return all(not np.any(w) for w in self.translation_variation)

    def __add__(self, other):
        return TangentVector(
            [a + b for a, b in zip(self.linear_variation, other.linear_variation)],
            [a + b for a, b in zip(self.translation_variation, other.translation_variation)],
        )

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, c: float):
        return TangentVector(
            [c * a for a in self.linear_variation], [c * w for w in self.translation_variation]
        )

    __rmul__ = __mul__


# -- single words ----------------------------------------------------------


def linear_word(rep: Representation, w: Sequence[int]) -> np.ndarray:
    mats = rep.letter_matrices()
    m = np.eye(3)
    for x in w:
        m = m @ mats[x]
    return m


def evaluate(rho: DeformedRep, w: Sequence[int]) -> AffineMap:
    """Affine image of a word, folding the cocycle identity left to right."""
    mats = rho.linear.letter_matrices()
    us = rho.letter_translations()
    m = np.eye(3)
    u = np.zeros(3)
    for x in w:
        u = u + m @ us[x]
        m = m @ mats[x]
    return AffineMap(m, u)


def _ell_from_trace(tr):
    return np.arccosh((np.asarray(tr) - 1.0) / 2.0)


def _top_eigvec(m_n, scale, lam_minus):
    """Attracting null eigendirection of a batch of scaled hyperbolic matrices.

    ``m_n = M / scale``.  Columns of (M - I)(M - lam_minus I) span the
    eigenline of the top eigenvalue; one power step refines it.
    """
    eye = np.eye(3)
    inv_s = (1.0 / scale)[:, None, None]
    p = (m_n - eye * inv_s) @ (m_n - eye * (lam_minus / scale)[:, None, None])
    j = np.argmax(np.linalg.norm(p, axis=1), axis=-1)
    v = p[np.arange(len(p)), :, j]
    v = np.einsum("nij,nj->ni", m_n, v)
    return boundary_point(v / v[:, 2:3])


def batch_fixed_points(mats: np.ndarray, eps_hyp: float = EPS_HYP):
    """Fixed points, neutral vectors and lengths for a stack of matrices.

    Returns (minus, plus, nu, ell) arrays and a boolean mask of the rows that
    are hyperbolic; non-hyperbolic rows hold NaN.
    """
    mats = np.asarray(mats, dtype=float)
    scale = np.abs(mats).max(axis=(1, 2))
    tr = np.trace(mats, axis1=1, axis2=2)
    ok = np.isfinite(tr) & (tr > 3.0 + eps_hyp) & (np.abs(tr) < TRACE_MAX)
    n = len(mats)
    minus = np.full((n, 3), np.nan)
    plus = np.full((n, 3), np.nan)
    nu = np.full((n, 3), np.nan)
    ell = np.full(n, np.nan)
    if ok.any():
        m = mats[ok]
        s = scale[ok]
        ell_ok = _ell_from_trace(tr[ok])
        lam = np.exp(-ell_ok)
        m_n = m / s[:, None, None]
        plus[ok] = _top_eigvec(m_n, s, lam)
        minus[ok] = _top_eigvec(lorentz_inverse(m_n), s, lam)
        nu[ok] = neutral_section(minus[ok], plus[ok])
        ell[ok] = ell_ok
    return minus, plus, nu, ell, ok


def fixed_points(g, eps_hyp: float = EPS_HYP) -> FixedPoints:
    """Repelling/attracting boundary points, neutral vector and length of g."""
    g = np.asarray(g, dtype=float)
    minus, plus, nu, ell, ok = batch_fixed_points(g[None], eps_hyp)
    if not ok[0]:
        raise NotHyperbolic(f"matrix with trace {np.trace(g)!r} is not hyperbolic")
    return FixedPoints(minus[0], plus[0], nu[0], float(ell[0]))


def batch_products(letter_mats: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Products L(w) for an (N, k) array of letters, folded left to right."""
    words = np.asarray(words, dtype=np.intp)
    n, k = words.shape
    m = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    for j in range(k):
        m = m @ letter_mats[words[:, j]]
    return m


def _rotation_array(words: np.ndarray) -> np.ndarray:
    k = words.shape[1]
    return np.stack([np.roll(words, -i, axis=1) for i in range(k)], axis=1)


def core_invariants(
    rho_or_rep, words: np.ndarray, eps_hyp: float = EPS_HYP
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(alpha, ell, ok) for an (N, k) array of cyclically reduced words.

    ``rho_or_rep`` may be a bare Representation, in which case alpha is NaN.
    """
    words = np.asarray(words, dtype=np.intp)
    n, k = words.shape
    rep = rho_or_rep.linear if isinstance(rho_or_rep, DeformedRep) else rho_or_rep
    mats = rep.letter_matrices()
    rots = _rotation_array(words).reshape(n * k, k)
    prods = batch_products(mats, rots)
    _, _, nu, ell, ok = batch_fixed_points(prods, eps_hyp)
    ok = ok.reshape(n, k).all(axis=1)
    ell = ell.reshape(n, k)[:, 0]
    if isinstance(rho_or_rep, DeformedRep):
        us = rho_or_rep.letter_translations()[words]
        alpha = pairing(us, nu.reshape(n, k, 3)).sum(axis=1)
    else:
        alpha = np.full(n, np.nan)
    return alpha, ell, ok


def _core(w):
    c, core = fg.cyclic_split(w)
    if not core:
        raise NotHyperbolic("the identity is not hyperbolic", tuple(w))
    return c, core


def word_fixed_points(rep: Representation, w: Sequence[int]) -> FixedPoints:
    """Fixed points of L(w), computed on the cyclic core and pushed by the conjugator."""
    c, core = _core(w)
    try:
        fp = fixed_points(linear_word(rep, core), rep.eps_hyp)
    except NotHyperbolic as exc:
        raise NotHyperbolic(str(exc), tuple(w)) from None
    if not c:
        return fp
    cm = linear_word(rep, c)
    minus = boundary_point(cm @ fp.minus)
    plus = boundary_point(cm @ fp.plus)
    return FixedPoints(minus, plus, neutral_section(minus, plus), fp.ell)


def translation_length(rep: Representation, w: Sequence[int]) -> float:
    _, core = _core(w)
    return word_fixed_points(rep, core).ell


def margulis_invariant(rho: DeformedRep, w: Sequence[int]) -> float:
    """alpha(w) = <u(w) | nu(w)>, evaluated by the stable rotation sum."""
    w = fg.reduce(w)
    if not w:
        return 0.0
    _, core = _core(w)
    alpha, _, ok = core_invariants(rho, np.array([core]), rho.linear.eps_hyp)
    if not ok[0]:
        raise NotHyperbolic(f"word {fg.format_word(w)} is not hyperbolic", w)
    return float(alpha[0])


def axis_point(rho: DeformedRep, w: Sequence[int], kappa_max: float = KAPPA_MAX) -> np.ndarray:
    """A point X on the affine line fixed by rho(w).

    Solves (L - I) X = alpha nu - u on the span of the two null eigenvectors;
    among the valid solutions the one Euclidean-orthogonal to nu is returned.
    """
    w = fg.reduce(w)
    c, core = _core(w)
    g = evaluate(rho, core)
    fp = fixed_points(g.linear, rho.linear.eps_hyp)
    alpha = margulis_invariant(rho, core)
    lam_p, lam_m = np.exp(fp.ell), np.exp(-fp.ell)
    vp, vm = fp.plus, fp.minus
    pm = pairing(vp, vm)
    kappa = max(1.0 / (lam_p - 1.0), 1.0 / (1.0 - lam_m)) * (
        np.linalg.norm(vp) * np.linalg.norm(vm) / abs(pm)
    )
    if not np.isfinite(kappa) or kappa > kappa_max:
        raise SingularSystem(f"axis solve is ill-conditioned (kappa={kappa:.3g})")
    u_perp = g.translation - alpha * fp.nu
    cp = pairing(u_perp, vm) / pm
    cm = pairing(u_perp, vp) / pm
    x = -(cp / (lam_p - 1.0)) * vp - (cm / (lam_m - 1.0)) * vm
    nu = fp.nu
    if c:
        x = evaluate(rho, c)(x)
        nu = word_fixed_points(rho.linear, w).nu
    return x - (x @ nu) / (nu @ nu) * nu


# -- construction ----------------------------------------------------------


def axis_frame(minus, plus) -> np.ndarray:
    """The element of SO^0(2,1) taking the model axis (0,-1,1) -> (0,1,1) to minus -> plus."""
    minus = np.asarray(minus, dtype=float)
    plus = np.asarray(plus, dtype=float)
    s = np.sqrt(-2.0 / pairing(plus, minus))
    return np.column_stack(
        [neutral_section(minus, plus), 0.5 * s * (plus - minus), 0.5 * s * (plus + minus)]
    )


def hyperbolic_from_axis(minus, plus, length: float) -> np.ndarray:
    h = axis_frame(minus, plus)
    return h @ flow_matrix(length) @ lorentz_inverse(h)


@dataclass
class PingPong:
    certified: bool
    # (start, end) angles of each arc, traversed counterclockwise; order is
    # attracting arc of g_1, repelling arc of g_1, attracting arc of g_2, ...
    arcs: list = field(default_factory=list)
    reason: str = ""


def _arc(h, lo: float, hi: float):
    """Image under h of the model arc of angles [lo, hi]."""
    a = boundary_point(h @ boundary_from_angle(lo))
    b = boundary_point(h @ boundary_from_angle(hi))
    return float(np.arctan2(a[1], a[0])), float(np.arctan2(b[1], b[0]))


def _in_arc(theta, arc, slack=0.0):
    start, end = arc
    width = (end - start) % (2 * np.pi)
    return ((np.asarray(theta) - start + slack) % (2 * np.pi)) <= width + 2 * slack


def pingpong_certificate(rep: Representation, samples: int = 720) -> PingPong:
    """Try to certify the Schottky property with 2n disjoint boundary arcs.

    For each generator g of length l the arcs are the images of
    {sin(theta) >= tanh(l/2)} and {sin(theta) <= -tanh(l/2)} under the frame of
    its axis; g maps the complement of the repelling arc onto the attracting
    one.  Containment is also checked on a dense sample of the circle.
    """
    arcs = []
    frames = []
    for g in rep.generators:
        fp = fixed_points(g, rep.eps_hyp)
        h = axis_frame(fp.minus, fp.plus)
        c = np.arcsin(np.tanh(fp.ell / 2.0))
        arcs.append(_arc(h, c, np.pi - c))
        arcs.append(_arc(h, np.pi + c, 2 * np.pi - c))
        frames.append(g)
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            if _in_arc(arcs[j][0], arcs[i]) or _in_arc(arcs[i][0], arcs[j]):
                return PingPong(False, arcs, f"arcs {i} and {j} overlap")
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    pts = boundary_from_angle(theta)
    for i, g in enumerate(frames):
        for mat, src, dst in ((g, arcs[2 * i + 1], arcs[2 * i]), (lorentz_inverse(g), arcs[2 * i], arcs[2 * i + 1])):
            outside = ~_in_arc(theta, src, slack=-1e-9)
            img = pts[outside] @ mat.T
            ang = np.arctan2(img[:, 1], img[:, 0])
            if not np.all(_in_arc(ang, dst, slack=1e-9)):
                return PingPong(False, arcs, f"generator {i} fails arc containment")
    return PingPong(True, arcs, "")


def schottky_builder(axes: Sequence, lengths: Sequence[float], eps_hyp: float = EPS_HYP) -> Representation:
    """Generators with prescribed axis endpoint angles (minus, plus) and lengths."""
    if len(axes) != len(lengths) or not axes:
        raise InvalidAxis("need one axis per length")
    pts = []
    for (tm, tp), ell in zip(axes, lengths):
        if not ell > 0:
            raise InvalidAxis("translation lengths must be positive")
        pts.extend([boundary_from_angle(tm), boundary_from_angle(tp)])
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.hypot(*(pts[i][:2] - pts[j][:2])) < 1e-9:
                raise InvalidAxis("axis endpoints must be pairwise distinct")
    gens = [hyperbolic_from_axis(pts[2 * i], pts[2 * i + 1], ell) for i, ell in enumerate(lengths)]
    rep = Representation(tuple(gens), eps_hyp=eps_hyp)
    cert = pingpong_certificate(rep) if len(gens) > 1 else PingPong(True)
    return Representation(rep.generators, certified=cert.certified, eps_hyp=eps_hyp)


def with_certificate(rep: Representation) -> Representation:
    cert = pingpong_certificate(rep)
    return Representation(rep.generators, certified=cert.certified, eps_hyp=rep.eps_hyp)


# -- deformations ----------------------------------------------------------


def path_point(rho: DeformedRep, v: TangentVector, t: float) -> DeformedRep:
    """Generator i -> (exp(t A_i) L_i, u_i + t w_i)."""
    if len(v.linear_variation) != rho.rank:
        raise ValueError("tangent vector rank mismatch")
    gens = []
    for g, a in zip(rho.linear.generators, v.linear_variation):
        m = expm(t * a) @ g if np.any(a) else g
        gens.append(m)
    try:
        rep = Representation(tuple(gens), certified=rho.linear.certified, eps_hyp=rho.linear.eps_hyp)
    except NotHyperbolic as exc:
        raise LeftHyperbolicRegime(f"path left the hyperbolic regime at t={t}: {exc}") from None
    us = [u + t * w for u, w in zip(rho.translations, v.translation_variation)]
    return DeformedRep(rep, tuple(us))


def scaling_tangent(rho: DeformedRep) -> TangentVector:
    """The direction (0, u) of the path (L, (1 + t) u)."""
    return TangentVector([np.zeros((3, 3))] * rho.rank, list(rho.translations))


def derivative_deformation(rep: Representation, v: TangentVector) -> DeformedRep:
    """The affine deformation (rho_0, d/dt rho_t) of a linear path."""
    return DeformedRep(rep, tuple(so21_to_mink(a, EPS_ORTH) for a in v.linear_variation))
