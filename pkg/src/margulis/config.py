"""Representation configs (JSON) and the central tolerance table."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, MargulisError, NotHyperbolic
from .minkowski import EPS_NULL, EPS_ORTH, check_lorentz, so21_to_mink
from .rep import (
    EPS_HYP,
    KAPPA_MAX,
    DeformedRep,
    Representation,
    TangentVector,
    schottky_builder,
    with_certificate,
)

SCHEMA_VERSION = 1

ENV_THREADS = "MARGULIS_THREADS"
ENV_TOLERANCE_FILE = "MARGULIS_TOLERANCE_FILE"

# Every threshold used by the verification campaigns and the acceptance
# suite.  Keys are namespaced by check.
DEFAULT_TOLERANCES = {
    "minkowski.eps_orth": EPS_ORTH,
    "minkowski.eps_null": EPS_NULL,
    "rep.eps_hyp": EPS_HYP,
    "rep.kappa_max": KAPPA_MAX,
    "identities.max_deviation": 1e-9,
    "identities.min_separation": 1e-2,
    "eigen.relative": 1e-9,
    "alpha.relative": 1e-9,
    "scaling.spectrum_relative": 1e-12,
    "scaling.entropy_relative": 1e-9,
    "length_gap.final": 1e-6,
    "alpha_gap.final": 1e-5,
    "alpha_gap.gauge": 1e-10,
    "goldman_margulis.relative": 1e-6,
    "dcr.relative": 1e-5,
    "dcr.consistency": 1e-5,
    "j.truncation": 0.05,
    "j.scaling_path": 1e-9,
    "pressure.symmetry": 1e-12,
    "pressure.kernel": 1e-6,
    "pressure.psd_floor": 1e-6,
    "pressure.lambda_min": 1e-4,
    "pressure.richardson": 0.2,
}


def tolerances(overrides: dict | None = None, path: str | os.PathLike | None = None) -> dict:
    """Defaults, then a JSON tolerance file, then explicit overrides."""
    tol = dict(DEFAULT_TOLERANCES)
    path = path or os.environ.get(ENV_TOLERANCE_FILE)
    if path:
        try:
            extra = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read tolerance file {path}: {exc}") from None
        tol.update(_check_tolerances(extra))
    if overrides:
        tol.update(_check_tolerances(overrides))
    return tol


def _check_tolerances(d) -> dict:
    if not isinstance(d, dict):
        raise ConfigError("tolerances must be a JSON object")
    out = {}
    for k, v in d.items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}")
        try:
            out[k] = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"tolerance {k!r} is not a number") from None
    return out


def default_threads() -> int:
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} must be an integer") from None
        return max(1, n)
    return os.cpu_count() or 1


# -- representation configs ------------------------------------------------


@dataclass
class RepConfig:
    rank: int
    generators: list  # 3x3 arrays
    translations: list  # length-3 arrays
    paths: list = field(default_factory=list)  # TangentVector
    path_names: list = field(default_factory=list)
    campaign: dict = field(default_factory=dict)
    certified: bool | None = None

    def representation(self) -> Representation:
        return Representation(tuple(self.generators), certified=self.certified)

    def deformed(self) -> DeformedRep:
        return DeformedRep(self.representation(), tuple(self.translations))

    def to_dict(self) -> dict:
        """Normalized form: every generator as a row-major matrix."""
        d = {
            "schema_version": SCHEMA_VERSION,
            "rank": self.rank,
            "generators": [{"matrix": [float(x) for x in g.ravel()]} for g in self.generators],
            "translations": [[float(x) for x in u] for u in self.translations],
        }
        if self.paths:
            d["paths"] = [
                {
                    "name": name,
                    "linear_variation": [[float(x) for x in a.ravel()] for a in p.linear_variation],
                    "translation_variation": [[float(x) for x in w] for w in p.translation_variation],
                }
                for name, p in zip(self.path_names, self.paths)
            ]
        if self.campaign:
            d["campaign"] = self.campaign
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _vector(x, what: str, n: int) -> np.ndarray:
    try:
        a = np.array(x, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected {n} numbers") from None
    if a.shape != (n,) or not np.all(np.isfinite(a)):
        raise ConfigError(f"{what}: expected {n} finite numbers")
    return a


def _list(d: dict, key: str, rank: int, where: str = "config") -> list:
    val = d.get(key)
    if not isinstance(val, list) or len(val) != rank:
        raise ConfigError(f"{where}: '{key}' must be a list with one entry per generator ({rank})")
    return val


def from_dict(d: dict) -> RepConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    rank = d.get("rank")
    if not isinstance(rank, int) or rank < 1:
        raise ConfigError("'rank' must be a positive integer")
    gens_spec = _list(d, "generators", rank)
    kinds = set()
    axes, lengths, mats = [], [], []
    for i, g in enumerate(gens_spec):
        where = f"generators[{i}]"
        if not isinstance(g, dict):
            raise ConfigError(f"{where}: expected an object")
        if "matrix" in g:
            kinds.add("matrix")
            m = _vector(g["matrix"], f"{where}.matrix", 9).reshape(3, 3)
            try:
                mats.append(check_lorentz(m))
            except MargulisError as exc:
                raise ConfigError(f"{where}: {exc}") from None
        elif "axis" in g and "length" in g:
            kinds.add("axis")
            axes.append(tuple(_vector(g["axis"], f"{where}.axis", 2)))
            try:
                lengths.append(float(g["length"]))
            except (TypeError, ValueError):
                raise ConfigError(f"{where}.length: expected a number") from None
        else:
            raise ConfigError(f"{where}: need either 'matrix' or 'axis' and 'length'")
    if kinds == {"axis"}:
        try:
            rep = schottky_builder(axes, lengths)
        except NotHyperbolic:
            raise
        except MargulisError as exc:
            raise ConfigError(f"generators: {exc}") from None
        gens = list(rep.generators)
        certified = rep.certified
    elif kinds == {"matrix"}:
        rep = with_certificate(Representation(tuple(mats))) if rank > 1 else Representation(tuple(mats), True)
        gens = mats
        certified = rep.certified
    else:
        raise ConfigError("generators: do not mix 'matrix' and 'axis' forms")
    translations = [
        _vector(u, f"translations[{i}]", 3) for i, u in enumerate(_list(d, "translations", rank))
    ]
    paths, names = [], []
    for j, p in enumerate(d.get("paths") or []):
        where = f"paths[{j}]"
        if not isinstance(p, dict):
            raise ConfigError(f"{where}: expected an object")
        lin = [
            _vector(a, f"{where}.linear_variation[{i}]", 9).reshape(3, 3)
            for i, a in enumerate(_list(p, "linear_variation", rank, where))
        ]
        tr = [
            _vector(w, f"{where}.translation_variation[{i}]", 3)
            for i, w in enumerate(_list(p, "translation_variation", rank, where))
        ]
        for i, a in enumerate(lin):
            try:
                so21_to_mink(a)
            except MargulisError:
                raise ConfigError(f"{where}.linear_variation[{i}] is not in so(2,1)") from None
        paths.append(TangentVector(lin, tr))
        names.append(str(p.get("name", f"path{j}")))
    campaign = d.get("campaign") or {}
    if not isinstance(campaign, dict):
        raise ConfigError("'campaign' must be an object")
    return RepConfig(rank, gens, translations, paths, names, campaign, certified)


def loads(text: str) -> RepConfig:
    try:
        d = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return from_dict(d)


def load(path: str | os.PathLike) -> RepConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)


def bundled_path(name: str) -> Path:
    """Path of a config shipped with the package (e.g. 'standard_pair.json')."""
    return Path(str(resources.files("margulis") / "data" / name))


def bundled(name: str = "standard_pair.json") -> RepConfig:
    return load(bundled_path(name))
