import numpy as np
import pytest

from margulis import freegroup as fg
from margulis import thermo
from margulis.errors import InsufficientData, SignMismatch
from margulis.minkowski import mink_to_so21
from margulis.rep import DeformedRep, TangentVector, margulis_invariant, path_point

MAX_LEN = 8


@pytest.fixture(scope="module")
def table(standard):
    return thermo.build_spectrum(standard, MAX_LEN)


def synthetic_table(alpha, max_len=10):
    alpha = np.asarray(alpha, dtype=float)
    n = len(alpha)
    classes = tuple(fg.ConjClass((0,) * (i + 1)) for i in range(n))
    return thermo.SpectrumTable(
        classes, alpha, alpha.copy(), np.ones(n, int), max_len, 2, float(alpha.max()), 1, np.ones(n)
    )


def test_entry_counts(standard, table):
    assert len(thermo.build_spectrum(standard, 1)) == 4
    per_len = np.bincount(table.word_length)[1:]
    oracle = [len(list(fg.enumerate_classes(2, k, min_len=k))) for k in range(1, MAX_LEN + 1)]
    assert per_len.tolist() == oracle


def test_table_matches_pointwise(standard, table, rng):
    for i in rng.choice(len(table), 30, replace=False):
        assert table.alpha[i] == pytest.approx(margulis_invariant(standard, table.classes[i].word), rel=1e-12)
    assert table.sign == 1
    assert table.complete_below == pytest.approx(MAX_LEN * np.min(table.alpha / table.word_length))


def test_scaling_multiplies_spectrum(standard, table):
    scaled = thermo.build_spectrum(standard.scaled(3.0), MAX_LEN)
    np.testing.assert_allclose(scaled.alpha, 3 * table.alpha, rtol=1e-12, atol=0)
    np.testing.assert_array_equal(scaled.ell, table.ell)
    flipped = thermo.build_spectrum(standard.scaled(-1.0), MAX_LEN)
    assert flipped.sign == -1


@pytest.mark.parametrize("weighting", ["count", "chebyshev"])
@pytest.mark.parametrize("bandwidth", [0.0, 0.08])
def test_entropy_scales_inversely(standard, table, weighting, bandwidth):
    lo, hi = table.complete_below / 2, table.complete_below
    h = thermo.entropy(table, (lo, hi), bandwidth=bandwidth, weighting=weighting)
    scaled = thermo.build_spectrum(standard.scaled(3.0), MAX_LEN)
    h3 = thermo.entropy(scaled, (3 * lo, 3 * hi), bandwidth=bandwidth, weighting=weighting)
    assert h.h > 0 and np.isfinite(h.h) and np.isfinite(h.stderr)
    assert abs(h3.h - h.h / 3) <= 1e-9 * h.h / 3


def test_entropy_exact_exponential():
    # N(T) = exp(kT) exactly at integer T: place the k-th jump at T = log(count)/k
    k = 0.7
    counts = np.floor(np.exp(k * np.arange(1, 16))).astype(int)
    alpha = np.concatenate([np.full(c - p, t) for t, c, p in zip(np.arange(1, 16), counts, np.r_[0, counts[:-1]])])
    tab = synthetic_table(alpha)
    t = np.arange(8, 16)
    logn = np.log(thermo.counting_function(tab, t))
    slope, _, _ = thermo.fit_growth_rate(t, np.log(counts[t - 1]))
    np.testing.assert_allclose(logn, np.log(counts[t - 1]))
    assert abs(slope - k) < 1e-3  # integer floors only


def test_fit_growth_rate_exact_line():
    t = np.linspace(1, 5, 20)
    slope, se, r2 = thermo.fit_growth_rate(t, 0.37 * t + 2)
    assert abs(slope - 0.37) < 1e-12 and se < 1e-6 and r2 == pytest.approx(1.0)


def test_entropy_window_guards(table):
    with pytest.raises(InsufficientData):
        thermo.entropy(table, (1.0, 2 * table.complete_below))
    with pytest.raises(InsufficientData):
        thermo.entropy(table, (0.1, 0.2), min_count=10**9)


def test_mixed_sign_rejected(mixed_cfg):
    tab = thermo.build_spectrum(mixed_cfg.deformed(), 4)
    assert tab.properness_violation
    with pytest.raises(SignMismatch):
        thermo.entropy(tab)


def test_smoothed_count_approaches_sharp(table):
    # thresholds between spectrum values; a class exactly at T counts 1/2 when smoothed
    a = np.sort(table.alpha)
    idx = np.searchsorted(a, np.linspace(table.complete_below / 2, table.complete_below * 0.99, 5))
    t = 0.5 * (a[idx - 1] + a[idx])
    sharp = thermo.counting_function(table, t)
    smooth = thermo.counting_function(table, t, bandwidth=1e-6)
    np.testing.assert_allclose(smooth, sharp, rtol=0.02)


def test_intersection(standard, table):
    assert thermo.intersection(table, table2=table) == 1.0
    scaled = thermo.build_spectrum(standard.scaled(2.5), MAX_LEN)
    assert thermo.intersection(table, table2=scaled) == pytest.approx(2.5, rel=1e-14)
    assert thermo.intersection(table, rho2=standard.scaled(2.5)) == pytest.approx(2.5, rel=1e-14)


def test_intersection_continuous(standard, table):
    w = TangentVector([np.zeros((3, 3))] * 2, [(0.1, 0.2, 0.0), (-0.3, 0.1, 0.05)])
    vals = [thermo.intersection(table, rho2=path_point(standard, w, t)) for t in (0, 1e-4, 2e-4)]
    assert abs(vals[1] - vals[0]) < 1e-3 and abs((vals[2] - vals[1]) - (vals[1] - vals[0])) < 1e-10


def test_j_identities(standard, table):
    base = thermo._JBase(table, thermo.J_BANDWIDTH)
    assert base.j(table) == 1.0
    for t in (-0.2, -0.1, 0.1, 0.2):
        j = base.j(thermo.build_spectrum(standard.scaled(1 + t), MAX_LEN))
        assert abs(j - 1) < 1e-9


def test_j_lower_bound_on_sampled_pairs(standard, table, rng):
    base = thermo._JBase(table, thermo.J_BANDWIDTH)
    seen = 0
    for _ in range(6):
        v = TangentVector(
            [mink_to_so21(rng.normal(size=3) * 0.05) for _ in range(2)],
            [rng.normal(size=3) * 0.05 for _ in range(2)],
        )
        try:
            j = base.j(thermo.build_spectrum(path_point(standard, v, 1.0), MAX_LEN))
        except InsufficientData:
            continue
        seen += 1
        assert j >= 1 - thermo.TRUNCATION_SLACK
    assert seen >= 3


def test_j_insufficient_window(standard, table):
    # a cocycle that stretches most invariants pushes the co-scaled window out
    other = DeformedRep(standard.linear, [standard.translations[0] * 20, standard.translations[1]])
    with pytest.raises(InsufficientData):
        thermo._JBase(table, thermo.J_BANDWIDTH).j(thermo.build_spectrum(other, MAX_LEN))


def test_csv_header(table):
    lines = table.to_csv().splitlines()
    assert lines[0] == "class,word_length,alpha,ell"
    assert len(lines) == len(table) + 1
    alphas = [float(x.split(",")[2]) for x in lines[1:]]
    assert alphas == sorted(alphas)
