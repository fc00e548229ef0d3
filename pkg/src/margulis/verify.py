"""Verification campaigns and the JSON scorecard.

Every report is a plain dict that is a pure function of its inputs, the seed
and the tolerance table, so two runs serialize to identical bytes.  A failed
or crashed case is recorded and the campaign carries on.
"""
from __future__ import annotations

import json
import math
import time
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import crossratio as cr
from . import freegroup as fg
from . import thermo
from .config import DEFAULT_TOLERANCES, SCHEMA_VERSION, RepConfig
from .errors import ConfigError, MargulisError
from .minkowski import boundary_from_angle, cross_ratio, mink_to_so21, neutral_section, pairing
from .rep import DeformedRep, TangentVector, derivative_deformation, scaling_tangent

SUITES = ("identities", "signs", "variational", "pressure")
EXIT_CODES = {"identities": 10, "signs": 11, "variational": 12, "pressure": 13}

DEFAULT_SAMPLES = 10_000
DEFAULT_WORDS = ("a", "b", "ab", "aB", "aab", "abAB", "aabB", "abbAB")
DEFAULT_PAIRS = (("a", "b"), ("b", "a"), ("ab", "b"), ("aab", "Ba"), ("ab", "aB"))
DEFAULT_RANDOM_PATHS = 3
DEFAULT_MAX_LEN = 10
SCALING_PATH_TS = (-0.2, -0.1, 0.1, 0.2)


def _tol(tol: dict | None) -> dict:
    return dict(DEFAULT_TOLERANCES) if tol is None else {**DEFAULT_TOLERANCES, **tol}


# -- identities ------------------------------------------------------------


def _random_lorentz(rng, n: int, size: float = 1.0) -> np.ndarray:
    return np.array([expm(mink_to_so21(rng.normal(size=3) * size)) for _ in range(n)])


def _admissible_tuples(rng, samples: int, k: int, min_sep: float) -> np.ndarray:
    """(samples, k) boundary angles, all pairwise chordal distances >= min_sep."""
    out = np.empty((0, k))
    while len(out) < samples:
        theta = rng.uniform(0.0, 2 * np.pi, size=(2 * samples, k))
        d = np.abs(theta[:, :, None] - theta[:, None, :])
        chord = 2 * np.sin(np.minimum(d, 2 * np.pi - d) / 2)
        chord[:, np.arange(k), np.arange(k)] = np.inf
        out = np.concatenate([out, theta[chord.min(axis=(1, 2)) >= min_sep]])
    return out[:samples]


def _rel(lhs, rhs) -> float:
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    dev = np.abs(lhs - rhs) / scale
    if dev.ndim > 1:
        dev = dev.max(axis=-1)
    return float(dev.max()) if dev.size else 0.0


def run_identity_suite(samples: int = DEFAULT_SAMPLES, seed: int = 0, tol: dict | None = None) -> dict:
    """Neutral-section and cross-ratio identities on random boundary tuples.

    Deviations are relative to max(1, |lhs|, |rhs|); tuples whose points come
    closer than ``identities.min_separation`` (chordal) are resampled.
    """
    tol = _tol(tol)
    rng = np.random.default_rng(seed)
    theta = _admissible_tuples(rng, samples, 5, tol["identities.min_separation"])
    a, b, c, d, w = (boundary_from_angle(theta[:, i]) for i in range(5))
    nab, nba, nac, nad = (neutral_section(a, b), neutral_section(b, a), neutral_section(a, c), neutral_section(a, d))
    b_abcd = cross_ratio(a, b, c, d)
    b_dbca = cross_ratio(d, b, c, a)
    dev = {
        "antisymmetry": _rel(nab + nba, np.zeros_like(nab)),
        "unit_pairing": _rel(pairing(nab, nac), np.ones(samples)),
        "vector_relation": _rel(b_dbca[:, None] * nab + b_abcd[:, None] * nac, nad),
        "symmetries": max(_rel(b_abcd, cross_ratio(b, a, d, c)), _rel(b_abcd, cross_ratio(d, c, b, a))),
        "complement": _rel(b_abcd + b_dbca, np.ones(samples)),
        "cocycle": _rel(cross_ratio(a, w, c, d) * cross_ratio(w, b, c, d), b_abcd),
    }
    g = _random_lorentz(rng, samples, size=0.5)

    def act(p):
        return np.einsum("nij,nj->ni", g, p)

    def lift(p):
        q = act(p)
        return q / q[:, 2:3]

    ga, gb, gc, gd = lift(a), lift(b), lift(c), lift(d)
    # g can squeeze an admissible tuple; compare only tuples that stay admissible.
    images = np.stack([ga, gb, gc, gd], axis=1)
    sep = np.linalg.norm(images[:, :, None, :2] - images[:, None, :, :2], axis=-1)
    sep[:, np.arange(4), np.arange(4)] = np.inf
    keep = sep.min(axis=(1, 2)) >= tol["identities.min_separation"]
    dev["equivariance"] = max(
        _rel(neutral_section(ga, gb)[keep], act(nab)[keep]),
        _rel(cross_ratio(ga, gb, gc, gd)[keep], b_abcd[keep]),
    )
    limit = tol["identities.max_deviation"]
    return {
        "suite": "identities",
        "samples": samples,
        "equivariance_samples": int(keep.sum()),
        "seed": seed,
        "max_deviation": dev,
        "tolerance": limit,
        "passed": all(v < limit for v in dev.values()),
    }


# -- opposite signs --------------------------------------------------------


def run_opposite_sign_check(rho: DeformedRep, max_len: int = DEFAULT_MAX_LEN, witnesses: int = 5) -> dict:
    """PASS iff every enumerated class has alpha of one strict sign."""
    table = thermo.build_spectrum(rho, max_len)
    a = table.alpha
    pos = np.flatnonzero(a > 0)
    neg = np.flatnonzero(a < 0)
    zero = np.flatnonzero(a == 0)

    def listing(idx, key):
        idx = idx[np.argsort(key(a[idx]), kind="stable")][:witnesses]
        return [{"class": str(table.classes[i]), "alpha": float(a[i])} for i in idx]

    passed = len(zero) == 0 and (len(pos) == 0 or len(neg) == 0)
    report = {
        "suite": "signs",
        "max_len": max_len,
        "classes": len(table),
        "positive": int(len(pos)),
        "negative": int(len(neg)),
        "zero": int(len(zero)),
        "sign": int(table.sign),
        "passed": bool(passed),
    }
    if not passed:
        report["witnesses"] = {
            "positive": listing(pos, lambda x: -x),
            "negative": listing(neg, lambda x: x),
            "zero": listing(zero, lambda x: x),
        }
    return report


# -- variational -----------------------------------------------------------


def random_linear_paths(rank: int, count: int, seed: int, size: float = 1.0) -> list[TangentVector]:
    rng = np.random.default_rng(seed)
    return [
        TangentVector([mink_to_so21(rng.normal(size=3) * size) for _ in range(rank)], [np.zeros(3)] * rank)
        for _ in range(count)
    ]


def _case(fn, **meta):
    try:
        out = fn()
    except MargulisError as exc:
        return {**meta, "passed": False, "error": f"{type(exc).__name__}: {exc}"}
    return {**meta, **out}


def _limit_case(rho, g, h, n_max, tol):
    seq = cr.length_gap_sequence(rho.linear, g, h, n_max)
    aseq = cr.alpha_gap_sequence(rho, g, h, n_max)
    # Gauge: move both axis points along their own neutral lines.
    nu_g = cr.word_fixed_points(rho.linear, g).nu
    nu_h = cr.word_fixed_points(rho.linear, h).nu
    x_g, x_h = cr.axis_point(rho, g), cr.axis_point(rho, h)
    gauge = max(
        abs(cr.affine_pairing(rho, g, h, x_g + s * nu_g, x_h + t * nu_h) - aseq.target)
        for s, t in ((1.0, 0.0), (0.0, -2.5), (3.0, 7.0))
    )
    length_ok = bool(
        seq.final_gap < tol["length_gap.final"] and seq.decreasing(tol["length_gap.final"] * 1e-3)
    )
    return {
        "length_gap": {**seq.to_dict(), "limit_over_target": seq.values[-1] / seq.target if seq.target else None},
        "alpha_gap": aseq.to_dict(),
        "gauge_deviation": gauge,
        "length_passed": length_ok,
        "alpha_passed": bool(aseq.final_gap < tol["alpha_gap.final"] and gauge < tol["alpha_gap.gauge"]),
        "passed": length_ok and bool(aseq.final_gap < tol["alpha_gap.final"] and gauge < tol["alpha_gap.gauge"]),
    }


def run_variational_suite(
    rho: DeformedRep,
    paths: Sequence[TangentVector],
    words: Sequence,
    pairs: Sequence = (),
    tol: dict | None = None,
    step: float = cr.DEFAULT_STEP,
    n_max: int = cr.DEFAULT_N_MAX,
) -> dict:
    """Limit sequences per pair, then derivative checks per (path, word) and (path, pair).

    Words may be strings or letter tuples.  ``paths`` must be linear-only.
    """
    tol = _tol(tol)
    words = [fg.parse_word(w) if isinstance(w, str) else tuple(w) for w in words]
    pairs = [tuple(fg.parse_word(x) if isinstance(x, str) else tuple(x) for x in p) for p in pairs]
    rep = rho.linear
    limits = [
        _case(lambda g=g, h=h: _limit_case(rho, g, h, n_max, tol), pair=[fg.format_word(g), fg.format_word(h)])
        for g, h in pairs
    ]
    gm_cases, dcr_cases = [], []
    for k, v in enumerate(paths):

        def gm(w=None, v=v):
            c = cr.goldman_margulis_check(rep, v, w, step)
            return {**c.to_dict(), "passed": c.within(tol["goldman_margulis.relative"])}

        for w in words:
            gm_cases.append(_case(lambda w=w, gm=gm: gm(w), path=k, word=fg.format_word(w)))

        def dcr(g, h, v=v):
            c = cr.dcr_check(rep, v, g, h, step)
            lim = cr.alpha_gap_sequence(derivative_deformation(rep, v), g, h, n_max)
            cons = abs(c.exact - lim.values[-1])
            fd_ok = c.within(tol["dcr.relative"])
            cons_ok = cons < tol["dcr.consistency"]
            return {
                **c.to_dict(),
                "fd_over_exact": c.fd / c.exact if abs(c.exact) > 1e-8 else None,
                "alpha_gap_limit": lim.values[-1],
                "consistency_deviation": cons,
                "fd_passed": bool(fd_ok),
                "consistency_passed": bool(cons_ok),
                "passed": bool(fd_ok and cons_ok),
            }

        for g, h in pairs:
            dcr_cases.append(
                _case(lambda g=g, h=h, dcr=dcr: dcr(g, h), path=k, pair=[fg.format_word(g), fg.format_word(h)])
            )
    groups = {"limits": limits, "goldman_margulis": gm_cases, "cross_ratio_derivative": dcr_cases}
    return {
        "suite": "variational",
        **groups,
        "summary": {k: {"cases": len(v), "passed": sum(c["passed"] for c in v)} for k, v in groups.items()},
        "passed": all(c["passed"] for v in groups.values() for c in v),
    }


# -- pressure --------------------------------------------------------------


def _is_scaling(rho: DeformedRep, v: TangentVector) -> bool:
    s = scaling_tangent(rho)
    return all(np.array_equal(a, b) for a, b in zip(v.translation_variation, s.translation_variation)) and not any(
        np.any(a) for a in v.linear_variation
    )


def run_pressure_suite(
    rho: DeformedRep,
    basis: Sequence[TangentVector],
    max_len: int = DEFAULT_MAX_LEN,
    step: float = 1e-3,
    tol: dict | None = None,
    names: Sequence[str] | None = None,
) -> dict:
    """Gram matrix of the pressure form over a basis whose first vector is v_scale."""
    tol = _tol(tol)
    if not basis or not _is_scaling(rho, basis[0]):
        raise ValueError("the first basis vector must be the scaling direction (0, u)")
    ev = thermo.PressureEvaluator(rho, max_len)
    n = len(basis)
    quad: dict = {}

    def q(key, v):
        if key not in quad:
            quad[key] = ev.second_variation(v, step)
        return quad[key]

    gram = np.zeros((n, n))
    gram_half = np.zeros((n, n))
    for i in range(n):
        gram[i, i], gram_half[i, i] = q((i, i, 1), basis[i])
        for j in range(i):
            p_plus = q((i, j, 1), basis[i] + basis[j])
            p_minus = q((i, j, -1), basis[i] - basis[j])
            gram[i, j] = gram[j, i] = 0.25 * (p_plus[0] - p_minus[0])
            gram_half[i, j] = gram_half[j, i] = 0.25 * (p_plus[1] - p_minus[1])
    eig = np.linalg.eigvalsh(gram)
    complement = np.linalg.eigvalsh(gram[1:, 1:]) if n > 1 else np.array([])
    # The eigenvalue belonging to v_scale: the one whose eigenvector leans most on e_0.
    w, vecs = np.linalg.eigh(gram)
    scale_eig = float(w[int(np.argmax(np.abs(vecs[0])))])
    scale_row = float(np.abs(gram[0]).max())
    denom = np.maximum(np.abs(gram), np.abs(gram_half))
    rel_change = np.where(denom > thermo.RICHARDSON_FLOOR, np.abs(gram - gram_half) / np.where(denom > 0, denom, 1), 0.0)
    j_path = [ev.j_along(basis[0], t) for t in SCALING_PATH_TS]
    checks = {
        "symmetric": bool(np.abs(gram - gram.T).max() <= tol["pressure.symmetry"]),
        "psd": bool(eig.min() >= -tol["pressure.psd_floor"]),
        "scaling_kernel": bool(abs(scale_eig) < tol["pressure.kernel"] and scale_row < tol["pressure.kernel"]),
        "complement_positive": bool(complement.size == 0 or complement.min() >= tol["pressure.lambda_min"]),
        "step_halving_stable": bool(rel_change.max() <= tol["pressure.richardson"]),
        "scaling_path_j": bool(max(abs(j - 1.0) for j in j_path) <= tol["j.scaling_path"]),
    }
    return {
        "suite": "pressure",
        "basis": list(names) if names else [f"v{i}" for i in range(n)],
        "max_len": max_len,
        "step": step,
        "entropy": ev.h,
        "gram": gram.tolist(),
        "gram_half_step": gram_half.tolist(),
        "eigenvalues": eig.tolist(),
        "complement_eigenvalues": complement.tolist(),
        "scaling_eigenvalue": scale_eig,
        "scaling_row_max": scale_row,
        "step_halving_max_relative_change": float(rel_change.max()),
        "scaling_path": {"t": list(SCALING_PATH_TS), "j": j_path},
        "checks": checks,
        "passed": all(checks.values()),
    }


# -- scorecard -------------------------------------------------------------


def campaign_settings(cfg: RepConfig, seed: int) -> dict:
    camp = cfg.campaign
    return {
        "words": list(camp.get("words", DEFAULT_WORDS)),
        "pairs": [list(p) for p in camp.get("pairs", DEFAULT_PAIRS)],
        "random_paths": int(camp.get("random_paths", DEFAULT_RANDOM_PATHS)),
        "max_len": int(camp.get("max_len", DEFAULT_MAX_LEN)),
        "samples": int(camp.get("samples", DEFAULT_SAMPLES)),
        "seed": seed,
    }


def pressure_basis(cfg: RepConfig):
    rho = cfg.deformed()
    if not cfg.paths:
        raise ConfigError("the config has no 'paths' block; the pressure basis comes from it")
    return rho, cfg.paths, cfg.path_names


def run_suite(name: str, cfg: RepConfig, seed: int = 0, tol: dict | None = None, step: float = 1e-3) -> dict:
    settings = campaign_settings(cfg, seed)
    rho = cfg.deformed()
    if name == "identities":
        return run_identity_suite(settings["samples"], seed, tol)
    if name == "signs":
        return run_opposite_sign_check(rho, settings["max_len"])
    if name == "variational":
        linear = [p for p in cfg.paths if p.is_linear_only() and any(np.any(a) for a in p.linear_variation)]
        paths = linear + random_linear_paths(cfg.rank, settings["random_paths"], seed)
        return run_variational_suite(rho, paths, settings["words"], settings["pairs"], tol)
    if name == "pressure":
        rho, basis, names = pressure_basis(cfg)
        return run_pressure_suite(rho, basis, settings["max_len"], step, tol, names)
    raise ValueError(f"unknown suite {name!r}")


def _clean(x):
    """NaN and infinities become None so the scorecard is strict JSON."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def scorecard(cfg: RepConfig, suites: Sequence[str], seed: int = 0, tol: dict | None = None, timings: bool = False) -> dict:
    tol = _tol(tol)
    results = {}
    for name in suites:
        t0 = time.perf_counter()
        try:
            results[name] = run_suite(name, cfg, seed, tol)
        except MargulisError as exc:
            results[name] = {"suite": name, "passed": False, "error": f"{type(exc).__name__}: {exc}"}
        if timings:
            results[name]["seconds"] = time.perf_counter() - t0
    return _clean(
        {
            "schema_version": SCHEMA_VERSION,
            "config": cfg.to_dict(),
            "campaign": campaign_settings(cfg, seed),
            "tolerances": tol,
            "suites": results,
            "passed": all(r["passed"] for r in results.values()),
        }
    )


def exit_code(card: dict) -> int:
    """0 if everything passed, else the code of the first failing suite."""
    for name in SUITES:
        r = card["suites"].get(name)
        if r is not None and not r["passed"]:
            return EXIT_CODES[name]
    return 0


def dumps(card: dict) -> str:
    return json.dumps(card, indent=2, sort_keys=True, allow_nan=False) + "\n"
