"""High-precision reference values, independent of the library's numerics."""
import itertools

import mpmath as mp

DPS = 60


def _flow(t):
    return mp.matrix([[1, 0, 0], [0, mp.cosh(t), mp.sinh(t)], [0, mp.sinh(t), mp.cosh(t)]])


def _rot(th):
    return mp.matrix([[mp.cos(th), -mp.sin(th), 0], [mp.sin(th), mp.cos(th), 0], [0, 0, 1]])


def generator(axis, length):
    """Exact hyperbolic element with a diametric axis from angle axis[0] to axis[1]."""
    minus, plus = (mp.mpf(x) for x in axis)
    if abs(mp.cos(plus - minus) + 1) > mp.mpf(10) ** -12:
        raise ValueError("oracle handles diametric axes only")
    r = _rot(plus - mp.pi / 2)
    return r * _flow(mp.mpf(length)) * _rot(-(plus - mp.pi / 2))


class Affine:
    """Generators given exactly by axes, lengths and translation vectors."""

    def __init__(self, axes, lengths, translations):
        with mp.workdps(DPS):
            q = mp.diag([1, 1, -1])
            self.mats, self.trans = [], []
            for axis, ell, u in zip(axes, lengths, translations):
                g = generator(axis, ell)
                gi = q * g.T * q
                u = mp.matrix([mp.mpf(x) for x in u])
                self.mats += [g, gi]
                self.trans += [u, -gi * u]


def from_config(path):
    import json

    d = json.loads(open(path).read())
    return Affine(
        [g["axis"] for g in d["generators"]],
        [g["length"] for g in d["generators"]],
        [[str(x) for x in u] for u in d["translations"]],
    )


def affine_word(rho, w):
    mats, trans = rho.mats, rho.trans
    m, u = mp.eye(3), mp.matrix([0, 0, 0])
    for x in w:
        u = u + m * trans[x]
        m = m * mats[x]
    return m, u


def invariants(rho, w):
    """(alpha, ell) of a cyclically reduced word by eigendecomposition at 60 digits.

    ``rho`` is an :class:`Affine`.
    """
    with mp.workdps(DPS):
        m, u = affine_word(rho, w)
        vals, vecs = mp.eig(m)
        mods = [abs(v) for v in vals]
        ip, im = mods.index(max(mods)), mods.index(min(mods))
        i1 = ({0, 1, 2} - {ip, im}).pop()
        vp, vm, nu = vecs[:, ip], vecs[:, im], vecs[:, i1]
        vp = vp if mp.re(vp[2]) > 0 else -vp
        vm = vm if mp.re(vm[2]) > 0 else -vm
        nu = nu / mp.sqrt(nu[0] ** 2 + nu[1] ** 2 - nu[2] ** 2)
        frame = mp.matrix([[nu[r], vm[r], vp[r]] for r in range(3)])
        if mp.re(mp.det(frame)) > 0:
            nu = -nu
        alpha = u[0] * nu[0] + u[1] * nu[1] - u[2] * nu[2]
        return float(mp.re(alpha)), float(mp.log(max(mods)))


def naive_classes(rank, max_len):
    """Reduce-and-classify oracle: every reduced word up to max_len, mapped to
    the least rotation of its cyclic reduction."""
    seen = set()
    for n in range(1, max_len + 1):
        for w in itertools.product(range(2 * rank), repeat=n):
            if any(w[i] == w[i + 1] ^ 1 for i in range(n - 1)):
                continue
            core = list(w)
            while len(core) > 1 and core[0] == core[-1] ^ 1:
                core = core[1:-1]
            seen.add(min(tuple(core[i:] + core[:i]) for i in range(len(core))))
    return seen
