import math

import numpy as np
import pytest

from conftest import sample, suite_ids
from qemlab import catalog, jets, verify
from qemlab.charts import Chart, MetricField, ScalarField
from qemlab.conformal import QEStructure
from qemlab.catalog import sphere


def by_id(reports):
    return {r.identity_id: r for r in reports}


def test_hessian_equation_on_example(example_a, example_a_points):
    r = verify.check_qe_system(example_a.qe, example_a_points)
    assert r.status == "pass" and r.max_residual <= 1e-8
    assert r.points_checked == len(example_a_points)


def test_hessian_equation_on_hemisphere():
    e = catalog.build("hemisphere", {"n": 4, "m": 3})
    assert e.qe.lam == 3 + 4 - 1
    assert verify.check_qe_system(e.qe, sample(e)).passed


def test_wrong_lambda_fails(example_a, example_a_points):
    bad = example_a.qe.with_lambda(example_a.qe.lam + 0.1)
    for check in (verify.check_qe_system, verify.check_trace):
        r = check(bad, example_a_points)
        assert r.status == "fail" and r.max_residual >= 1e-3


def test_trace_equation(example_a, example_a_points):
    assert verify.check_trace(example_a.qe, example_a_points).max_residual <= 1e-10
    g = sphere(3).metric
    const = QEStructure(g, ScalarField(g.chart, lambda x: 2.0), 2.0, 2.0)
    pts = g.chart.sample(10)
    assert verify.check_trace(const, pts).passed
    assert verify.check_qe_system(const, pts).passed
    assert not verify.check_trace(const.with_lambda(2.1), pts).passed


def test_mu_values(example_a, example_a_points):
    r = verify.check_mu_constant(example_a.qe, example_a_points)
    assert r.passed and r.values["mu"] == pytest.approx(-1.0, abs=1e-9)
    assert r.values["mu_spread"] <= 1e-9
    hyp = catalog.build("hyperbolic", {"n": 3, "m": 2})
    r = verify.check_mu_constant(hyp.qe, sample(hyp))
    assert r.passed and r.values["mu"] < 0
    sinh = catalog.build("prop_rigid_a", {"q": 2, "m": 2, "lambda": -2})
    r = verify.check_mu_constant(sinh.qe, sample(sinh))
    assert r.passed and r.values["mu"] == pytest.approx(1.0, abs=1e-9)


def test_scalar_curvature_relations():
    for eid, params in [("exampleA", {"p": 1, "q": 2, "m": 2}), ("hyperbolic", {"n": 4, "m": 2}),
                        ("product_R_H2", {"m": 2, "lambda": -1})]:
        e = catalog.build(eid, params)
        grad, lap = verify.check_propA(e.qe, sample(e))
        assert grad.passed and lap.passed
        assert "constant R" in lap.note
    s = catalog.build("surface_cosh", {"m": 2})
    assert all(r.status == "not_applicable" for r in verify.check_propA(s.qe, sample(s)))


def test_constant_curvature_bundle(example_a, example_a_points):
    reps = by_id(verify.check_constantR_identities(example_a.qe, example_a_points))
    assert all(r.status == "pass" for r in reps.values())
    tn = reps["transnormal"].values
    assert tn["c0"] == pytest.approx(-1.0, abs=1e-9) and tn["c2"] == pytest.approx(1.0, abs=1e-9)
    assert tn["alpha"] == pytest.approx(-1.0, abs=1e-9)
    hemi = catalog.build("hemisphere", {"n": 3, "m": 2})
    assert all(r.passed for r in verify.check_constantR_identities(hemi.qe, sample(hemi)))


def test_transnormal_function_matches_sinh():
    data = verify.TransnormalData.from_constants(4, 2.0, -3.0, -8.0, -1.0)
    for r in (0.3, 1.1):
        assert data.b(math.cosh(r)) == pytest.approx(math.sinh(r) ** 2, rel=1e-14)
        assert data.a(math.cosh(r)) == pytest.approx(2 * math.cosh(r), rel=1e-14)


def non_constant_curvature_structure():
    chart = Chart(("a", "b", "c"), ((-0.5, 0.5),) * 3)
    g = MetricField.from_diagonal(chart, lambda x: [1.0, 2 + jets.sin(x[0]), 1 + x[0] * x[1] ** 2])
    u = ScalarField(chart, lambda x: 2 + x[0] + 0.5 * x[2])
    return QEStructure(g, u, 2.0, -1.0)


def test_constant_curvature_checks_skip_otherwise():
    qe = non_constant_curvature_structure()
    pts = qe.g.chart.sample(5)
    assert all(r.status == "not_applicable" for r in verify.check_constantR_identities(qe, pts))
    aux = by_id(verify.check_lemma_aux(qe, pts))
    assert aux["q_contraction"].status == "not_applicable"
    assert aux["p_transport"].status == "not_applicable"
    assert aux["p_curl"].status == "fail"  # not a QE structure
    assert verify.check_qe_system(qe, pts).status == "fail"


def test_auxiliary_identities(example_a, example_a_points):
    assert all(r.status == "pass" for r in verify.check_lemma_aux(example_a.qe, example_a_points))
    for eid, params in [("hyperbolic", {"n": 3, "m": 2}), ("cosh_cylinder", {"n": 3, "m": 2})]:
        e = catalog.build(eid, params)
        assert all(r.status == "pass" for r in verify.check_lemma_aux(e.qe, sample(e)))


def test_cotton_weyl_t_and_contraction(example_a, example_a_points):
    reps = verify.check_lem1_and_tric(example_a.qe, example_a_points)
    assert all(r.status == "pass" for r in reps)
    e = catalog.build("product_R_H2", {"m": 2, "lambda": -1})
    reps = by_id(verify.check_lem1_and_tric(e.qe, sample(e)))
    assert "u C = T" in reps["cotton_weyl_t"].note


def test_contraction_two_paths(example_a):
    from qemlab.conformal import qe_point
    for r in (0.2, 1.0, 1.9):
        q = qe_point(example_a.qe, [r, 1.0, 0.0, 1.0])
        direct, expansion, closed = verify.tric_terms(q)
        assert direct == pytest.approx(expansion, rel=1e-10)
        assert direct == pytest.approx(closed, rel=1e-10)
        assert abs(direct) > 1e-3
    hyp = catalog.build("hyperbolic", {"n": 3, "m": 2})
    q = qe_point(hyp.qe, sample(hyp, 1)[0])
    assert max(abs(v) for v in verify.tric_terms(q)) <= 1e-10


def test_boundary_points_are_skipped():
    chart = Chart(("t", "y1", "y2"), ((0.0, 2.0), (-1, 1), (-1, 1)))
    g = MetricField.from_diagonal(chart, lambda x: [1.0, 1.0, 1.0])
    qe = QEStructure(g, ScalarField(chart, lambda x: x[0]), 2.0, 0.0)
    pts = np.array([[0.0, 0.1, 0.2], [0.5, 0.0, 0.0], [1.0, 0.3, -0.3]])
    reps = by_id(verify.run_all(qe, pts))
    assert reps["hessian_equation"].points_checked == 3
    assert reps["d_t_relation"].points_checked == 2
    assert reps["scalar_laplacian_relation"].points_checked == 2
    assert all(r.passed for r in reps.values())


def test_report_semantics():
    r = verify._fold("x", [1e-12, 5e-9], 1e-10)
    assert r.status == "fail" and not r.passed and r.failure_kind == "TOLERANCE"
    r = verify._fold("x", [1e-2], 1e-7)
    assert r.failure_kind == "IDENTITY"
    r = verify._fold("x", [1e-12], 1e-10)
    assert r.passed and r.failure_kind is None and r.max_residual >= 0
    assert verify._fold("x", [], 1e-7).status == "not_applicable"


def test_residual_normalization():
    assert verify.residual(np.array([1.0]), np.array([1.0 + 1e-6])) == pytest.approx(1e-6 / 2, rel=1e-6)
    assert verify.residual(np.array([1000.0]), np.array([1001.0])) == pytest.approx(1 / 1002, rel=1e-9)


def test_fiber_rescaling_breaks_structure():
    e = catalog.build("exampleA", {"p": 1, "q": 2, "m": 2, "fiber_scale": 1.05})
    r = verify.check_qe_system(e.qe, sample(e))
    assert r.max_residual >= 1e-3


def test_parse_perturbation():
    assert verify.parse_perturbation("lambda=+0.1") == ("lambda", 0.1)
    assert verify.parse_perturbation("fiber=1.05") == ("fiber", 1.05)
    with pytest.raises(ValueError):
        verify.parse_perturbation("mass=1")


@pytest.mark.parametrize("entry_id, params", catalog.SUITE, ids=suite_ids())
def test_every_identity_holds_on_catalog(entry_id, params):
    e = catalog.build(entry_id, params)
    reps = verify.run_all(e.qe, sample(e, 50))
    failing = [(r.identity_id, r.max_residual) for r in reps if not r.passed]
    assert not failing
    assert all(r.max_residual <= 1e-7 for r in reps)


@pytest.mark.parametrize("entry_id, params", catalog.SUITE, ids=suite_ids())
def test_negative_controls_on_catalog(entry_id, params):
    e = catalog.build(entry_id, params)
    pts = sample(e, 20)
    base = by_id(verify.run_all(e.qe, pts, kernel=False))
    for ident, (kind, amount) in verify.NEGATIVE_CONTROLS.items():
        if base[ident].status == "not_applicable":
            continue
        bad = by_id(verify.run_all(verify.perturbed(e.qe, kind, amount), pts, kernel=False))
        assert bad[ident].max_residual >= verify.CONTROL_MIN_RESIDUAL, ident
