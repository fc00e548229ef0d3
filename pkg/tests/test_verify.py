import json

import numpy as np
import pytest

from margulis import verify
from margulis.rep import TangentVector, scaling_tangent


def test_identity_suite_deterministic():
    a = verify.run_identity_suite(2000, seed=7)
    b = verify.run_identity_suite(2000, seed=7)
    assert verify.dumps(verify._clean(a)) == verify.dumps(verify._clean(b))
    assert a["passed"], a["max_deviation"]
    assert a["equivariance_samples"] > 1000


def test_signs(standard, mixed_cfg):
    r = verify.run_opposite_sign_check(standard, 7)
    assert r["passed"] and r["negative"] == 0 and r["zero"] == 0
    r = verify.run_opposite_sign_check(standard.scaled(-1.0), 7)
    assert r["passed"] and r["positive"] == 0
    r = verify.run_opposite_sign_check(mixed_cfg.deformed(), 5)
    assert not r["passed"]
    assert r["witnesses"]["positive"] and r["witnesses"]["negative"]
    pos = r["witnesses"]["positive"][0]
    assert pos["alpha"] > 0 and r["witnesses"]["negative"][0]["alpha"] < 0


def test_variational_empty(standard):
    r = verify.run_variational_suite(standard, [], [], [])
    assert r["passed"] and all(v["cases"] == 0 for v in r["summary"].values())


def test_variational_report_roundtrip(standard):
    paths = verify.random_linear_paths(2, 1, seed=0)
    r = verify.run_variational_suite(standard, paths, ["a", "ab"], [("a", "b")])
    text = verify.dumps(verify._clean(r))
    assert json.loads(text) == verify._clean(r)
    assert r["summary"]["goldman_margulis"] == {"cases": 2, "passed": 2}
    case = r["cross_ratio_derivative"][0]
    assert case["consistency_passed"]
    assert case["fd_over_exact"] == pytest.approx(0.5, abs=1e-6)


def test_pressure_scaling_only(standard):
    r = verify.run_pressure_suite(standard, [scaling_tangent(standard)], max_len=8)
    assert abs(r["gram"][0][0]) < 1e-6
    assert r["checks"]["scaling_kernel"]


def test_pressure_requires_scaling_first(standard):
    with pytest.raises(ValueError):
        verify.run_pressure_suite(standard, [TangentVector.zero(2)], max_len=6)


def test_pressure_gram_symmetric(standard_cfg):
    rho, basis, names = verify.pressure_basis(standard_cfg)
    r = verify.run_pressure_suite(rho, basis[:2], max_len=8, names=names[:2])
    g = np.array(r["gram"])
    assert np.array_equal(g, g.T)
    assert r["basis"] == ["v_scale", "rotate_a"]


def test_exit_code():
    card = {"suites": {"signs": {"passed": False}, "pressure": {"passed": False}}}
    assert verify.exit_code(card) == 11
    assert verify.exit_code({"suites": {"identities": {"passed": True}}}) == 0


def test_clean():
    assert verify._clean({"x": [float("nan"), np.float64(1.5), np.int64(2), np.bool_(True)]}) == {
        "x": [None, 1.5, 2, True]
    }
