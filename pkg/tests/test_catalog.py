import numpy as np
import pytest

from conftest import sample, suite_ids
from qemlab import catalog, classify, jets, verify
from qemlab.catalog import interval, sphere, warp
from qemlab.charts import ScalarField
from qemlab.conformal import QEStructure, qe_point
from qemlab.errors import ParamError


def measured(e, count=20):
    qs = [qe_point(e.qe, p) for p in sample(e, count)]
    return np.mean([q.R for q in qs]), np.mean([q.mu for q in qs])


@pytest.mark.parametrize("entry_id, params", catalog.SUITE, ids=suite_ids())
def test_expected_record_matches_measurement(entry_id, params):
    e = catalog.build(entry_id, params)
    pts = sample(e)
    assert verify.check_qe_system(e.qe, pts).passed
    R, mu = measured(e)
    assert abs(R - e.expected.R) <= 1e-8 * (1 + abs(e.expected.R))
    assert abs(mu - e.expected.mu) <= 1e-8 * (1 + abs(e.expected.mu))
    assert np.sign(e.qe.lam) == e.expected.lam_sign
    if e.expected.t_flat is not None:
        assert classify.t_flat_test(e.qe, pts).is_t_flat == e.expected.t_flat


def test_example_record(example_a):
    assert example_a.qe.lam == -3
    assert example_a.expected.mu == -1 and example_a.expected.R == -8
    assert example_a.expected.t_flat is False
    assert example_a.n == 4


def test_hyperbolic_record():
    e = catalog.build("hyperbolic", {"n": 3, "m": 2})
    assert e.qe.lam == -4 and e.expected.einstein and e.expected.t_flat


def test_sinh_product_record():
    e = catalog.build("prop_rigid_a", {"q": 2, "m": 2, "lambda": -2})
    assert e.expected.mu == pytest.approx(1.0)
    p = sample(e, 1)[0]
    assert qe_point(e.qe, p).u == pytest.approx(np.sinh(p[0]), rel=1e-14)


def test_expected_scalar_curvature():
    assert catalog.expected_scalar_curvature("exampleA", {"p": 1, "q": 2, "m": 2}) == pytest.approx(-8)
    for n, m in [(3, 2), (5, 3.5)]:
        assert catalog.expected_scalar_curvature("hyperbolic", {"n": n, "m": m}) == -n * (n - 1)
    assert catalog.expected_scalar_curvature("product_R_H2", {"m": 2, "lambda": -0.7}) == \
        pytest.approx(2 * -0.7)


@pytest.mark.parametrize("p, q, m", [(1, 2, 2), (2, 3, 2.5), (1, 3, 4)])
def test_example_curvature_sits_in_spectrum_slot(p, q, m):
    e = catalog.build("exampleA", {"p": p, "q": q, "m": m})
    table = classify.admissible_spectrum(p + 1 + q, m, e.qe.lam)
    assert float(table.value(q)) == pytest.approx(e.expected.R, abs=1e-12)
    R, _ = measured(e, 5)
    assert abs(R - float(table.value(q))) <= 1e-8


def test_doubled_exponent_potential_fails():
    e = catalog.build("exp_cigar", {"n": 3, "m": 2})
    chart = e.qe.g.chart
    doubled = QEStructure(e.qe.g, ScalarField(chart, lambda x: jets.exp(2 * x[0])), e.qe.m, e.qe.lam)
    assert verify.check_qe_system(doubled, sample(e)).max_residual >= 1e-3
    assert verify.check_qe_system(e.qe, sample(e)).passed


def test_positive_lambda_fails_for_hyperbolic_times_einstein():
    e = catalog.build("prop_rigid_f", {"n": 5, "q": 2, "m": 2})
    assert e.qe.lam == -(2 + 5 - 2 - 1)
    flipped = e.qe.with_lambda(-e.qe.lam)
    assert verify.check_qe_system(flipped, sample(e)).max_residual >= 1e-3
    assert catalog.NOTE_RIGID_F_SIGN in e.notes


def test_sphere_fiber_for_cosh_warping_fails():
    n, m = 3, 2.0
    piece = warp(interval("t"), lambda x: jets.cosh(x[0]), sphere(n - 1))
    qe = QEStructure(piece.metric, ScalarField(piece.chart, lambda x: jets.sinh(x[0])), m, -(m + n - 1))
    assert verify.check_qe_system(qe, piece.chart.sample(20)).max_residual >= 1e-3


def test_ambiguity_notes_attached():
    assert catalog.NOTE_SQRT_K in catalog.build("hyperbolic", {"n": 3, "m": 2}).notes
    assert catalog.NOTE_EXP_POTENTIAL in catalog.build("exp_cigar", {"n": 3, "m": 2}).notes
    assert catalog.NOTE_COSH_FIBER in catalog.build("cosh_cylinder", {"n": 3, "m": 2}).notes


@pytest.mark.parametrize("entry_id, params, word", [
    ("exampleA", {"p": 0, "q": 2, "m": 2}, "p"),
    ("exampleA", {"p": 1, "q": 1, "m": 2}, "q"),
    ("hyperbolic", {"n": 3, "m": 1}, "m"),
    ("product_cosh", {"n": 3, "m": 2, "lambda": 0.5}, "lambda"),
    ("hyperbolic", {"n": 3, "m": 2, "C": 1}, "unknown"),
    ("hemisphere", {"n": 2.5}, "integer"),
    ("exampleA", {"scale": -1}, "scale"),
])
def test_parameter_validation(entry_id, params, word):
    with pytest.raises(ParamError, match=word):
        catalog.build(entry_id, params)


def test_unknown_entry():
    with pytest.raises(KeyError):
        catalog.build("nope")
    assert "exampleA" in catalog.entry_ids()


@pytest.mark.parametrize("c", [0.5, 2.0])
@pytest.mark.parametrize("entry_id, params", [("hyperbolic", {"n": 3, "m": 2}),
                                              ("exampleA", {"p": 1, "q": 2, "m": 2}),
                                              ("product_R_H2", {"m": 2, "lambda": -1})])
def test_rescaled_entries(entry_id, params, c):
    base = catalog.build(entry_id, params)
    e = catalog.build(entry_id, dict(params, scale=c))
    assert e.qe.lam == pytest.approx(base.qe.lam / c**2)
    assert all(r.passed for r in verify.run_all(e.qe, sample(e, 10), kernel=False))
    R, mu = measured(e, 10)
    assert R == pytest.approx(base.expected.R / c**2, abs=1e-8)
    assert e.expected.R == pytest.approx(base.expected.R / c**2)
    assert mu == pytest.approx(e.expected.mu, abs=1e-8)


@pytest.mark.parametrize("entry_id, params", catalog.SUITE, ids=suite_ids())
def test_fiber_scale_sensitivity(entry_id, params):
    e = catalog.build(entry_id, dict(params, fiber_scale=1.05))
    r = verify.check_qe_system(e.qe, sample(e, 10))
    if e.fiber_sensitive:
        assert r.max_residual >= 1e-3
    else:
        assert r.passed
