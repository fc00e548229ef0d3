"""Linear algebra in Minkowski space R^{2,1}.

Vectors are plain numpy arrays whose last axis has length 3; every function
here broadcasts over leading axes so that whole batches of boundary points
can be processed at once.  The bilinear form has signature (+, +, -).

Boundary points of the hyperboloid are future-pointing null rays, stored on
the affine slice ``x3 = 1`` (so they live on the unit circle in the first two
coordinates).
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateBoundaryPair, NotInLieAlgebra, NotLorentz

Q = np.diag([1.0, 1.0, -1.0])
_SIGN = np.array([1.0, 1.0, -1.0])

EPS_ORTH = 1e-10
EPS_NULL = 1e-10


def pairing(v, w):
    """Lorentzian pairing v1*w1 + v2*w2 - v3*w3 (broadcasts)."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return v[..., 0] * w[..., 0] + v[..., 1] * w[..., 1] - v[..., 2] * w[..., 2]


def mink_cross(v, w):
    """Lorentzian cross product.

    The unique bilinear map with ``det[x, v, w] == pairing(x, mink_cross(v, w))``
    for every x.
    """
    return np.cross(np.asarray(v, dtype=float), np.asarray(w, dtype=float)) * _SIGN


def lorentz_inverse(g):
    """Inverse of an element of SO(2,1), computed exactly as Q g^T Q."""
    g = np.asarray(g, dtype=float)
    return (g.swapaxes(-1, -2) * _SIGN[..., None, :]) * _SIGN[..., :, None]


def check_lorentz(m, tol: float = EPS_ORTH) -> np.ndarray:
    """Validate membership in SO^0(2,1) and return the matrix as an array."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise NotLorentz("expected a finite 3x3 matrix")
    scale = max(1.0, float(np.abs(m).max()) ** 2)
    if np.abs(m.T @ Q @ m - Q).max() > tol * scale:
        raise NotLorentz("matrix does not preserve the Lorentzian form")
    if abs(np.linalg.det(m) - 1.0) > tol * scale:
        raise NotLorentz("determinant is not 1")
    if m[2, 2] <= 0:
        raise NotLorentz("matrix reverses time orientation")
    return m


def boundary_point(v, tol: float = EPS_NULL) -> np.ndarray:
    """Normalize a future-pointing null vector to the slice x3 = 1.

    The first two coordinates are projected back onto the unit circle, which
    removes the rounding drift accumulated while computing the direction.
    """
    v = np.asarray(v, dtype=float)
    x3 = v[..., 2]
    if np.any(x3 <= 0):
        raise ValueError("boundary direction must be future pointing")
    p = v / x3[..., None]
    r = np.hypot(p[..., 0], p[..., 1])
    if np.any(np.abs(r - 1.0) > max(tol, 1e-6)):
        raise ValueError("direction is not null")
    out = np.empty_like(p)
    out[..., 0] = p[..., 0] / r
    out[..., 1] = p[..., 1] / r
    out[..., 2] = 1.0
    return out


def boundary_from_angle(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta), np.ones_like(theta)], axis=-1)


def boundary_angle(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.arctan2(p[..., 1], p[..., 0])


def chordal_distance(a, b):
    """Euclidean distance between two boundary points on the x3 = 1 circle."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])


def neutral_section(a, b, tol: float = EPS_NULL):
    """Unit spacelike vector attached to the oriented geodesic from a to b.

    Orthogonal to both null lifts, with orientation ``det[nu, a, b] < 0``.
    At the model geodesic from (0,-1,1) to (0,1,1) this gives (1,0,0).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(chordal_distance(a, b) <= tol):
        raise DegenerateBoundaryPair("neutral section needs distinct boundary points")
    c = mink_cross(a, b)
    return -c / np.sqrt(pairing(c, c))[..., None]


def cross_ratio(a, b, c, d, tol: float = EPS_NULL):
    """b(a, b, c, d) = (1 + <nu(a, d) | nu(b, c)>) / 2."""
    return 0.5 * (1.0 + pairing(neutral_section(a, d, tol), neutral_section(b, c, tol)))


def flow_matrix(t: float) -> np.ndarray:
    """Geodesic flow: boost by t along the x2 axis."""
    ch, sh = np.cosh(t), np.sinh(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, ch, sh], [0.0, sh, ch]])


def _hat(v):
    v = np.asarray(v, dtype=float)
    z = np.zeros(v.shape[:-1])
    return np.stack(
        [
            np.stack([z, -v[..., 2], v[..., 1]], axis=-1),
            np.stack([v[..., 2], z, -v[..., 0]], axis=-1),
            np.stack([-v[..., 1], v[..., 0], z], axis=-1),
        ],
        axis=-2,
    )


def mink_to_so21(v) -> np.ndarray:
    """Inverse of :func:`so21_to_mink`: the matrix w -> mink_cross(w, v)."""
    return -_SIGN[..., :, None] * _hat(v)


def so21_to_mink(A, tol: float = EPS_ORTH) -> np.ndarray:
    """Identify a matrix of so(2,1) with a vector of R^{2,1}.

    Returns the v with ``A @ w == mink_cross(w, v)`` for every w.  This sign
    makes the derivative of the boost path ``flow_matrix(l + t)`` correspond
    to the translation (1, 0, 0), i.e. to a unit Margulis invariant along the
    boost axis.  The identification is equivariant:
    ``so21_to_mink(g A g^-1) == g @ so21_to_mink(A)``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[-2:] != (3, 3):
        raise NotInLieAlgebra("expected a 3x3 matrix")
    defect = np.swapaxes(A, -1, -2) @ Q + Q @ A
    if np.abs(defect).max() > tol * max(1.0, float(np.abs(A).max())):
        raise NotInLieAlgebra("matrix is not in so(2,1)")
    S = -_SIGN[..., :, None] * A
    return np.stack([S[..., 2, 1], S[..., 0, 2], S[..., 1, 0]], axis=-1)
