import math

import numpy as np
import pytest

from conftest import sample, suite_ids
from qemlab import catalog, jets
from qemlab.catalog import hyperbolic, sphere
from qemlab.charts import Chart, MetricField, ScalarField
from qemlab.conformal import (
    QEStructure, cotton, d_tensor, kn, kulkarni_nomizu, norm2, p_tensor, q_tensor, qe_point,
    schouten, t_tensor, traceless_ricci, weyl, weyl_divergence,
)
from qemlab.curvature import geometry, riemann, riemann_symmetry_residual
from qemlab.errors import DimensionError, ParamError, ShapeError


def generic(n, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-0.2, 0.2, (n, n, n))
    chart = Chart(tuple(f"x{i}" for i in range(n)), ((-0.5, 0.5),) * n)

    def fn(x):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                e = sum(float(A[i, j, k] + A[j, i, k]) * x[k] for k in range(n))
                e = e + 0.1 * jets.sin(x[i] * x[j])
                row.append(e + (2.0 + 0.3 * jets.cos(x[i])) * (i == j))
            rows.append(row)
        return [[0.5 * (rows[i][j] + rows[j][i]) for j in range(n)] for i in range(n)]

    return MetricField(chart, fn)


def test_schouten_values():
    g = sphere(3).metric
    p = g.chart.sample(1)[0]
    np.testing.assert_allclose(schouten(g, p).entries, 0.5 * geometry(g, p, 0).g0, atol=1e-12)
    flat = catalog.flat(3).metric
    assert np.abs(schouten(flat, [0.1, 0.2, 0.3]).entries).max() == 0
    with pytest.raises(DimensionError):
        schouten(sphere(2).metric, [1.0, 1.0])


def test_schouten_blocks_on_example(example_a, example_a_points):
    # base block Ric = -g, fiber block Ric = -3 g, R = -8: A = Ric + (4/3) g
    g = example_a.qe.g
    for p in example_a_points[:5]:
        A, g0 = schouten(g, p).entries, geometry(g, p, 0).g0
        np.testing.assert_allclose(A[:2, :2], g0[:2, :2] / 3, atol=1e-12)
        np.testing.assert_allclose(A[2:, 2:], -5 * g0[2:, 2:] / 3, atol=1e-12)


def test_weyl_vanishes_in_dimension_three():
    g = generic(3)
    for p in g.chart.sample(5):
        W = weyl(g, p).entries
        assert np.abs(W).max() <= 1e-9 * (1 + np.abs(riemann(g, p).entries).max())


def test_weyl_of_hyperbolic_four_space():
    g = hyperbolic(4).metric
    for p in g.chart.sample(5):
        assert np.abs(weyl(g, p).entries).max() <= 1e-9


def test_weyl_norm_on_example(example_a, example_a_points):
    # product of surfaces K1 = -1, K2 = -3: |W|^2 = (4/3)(K1 + K2)^2
    for p in example_a_points[:5]:
        W = weyl(example_a.qe.g, p).entries
        gi = geometry(example_a.qe.g, p, 0).g0_inv
        assert norm2(W, gi) == pytest.approx(64 / 3, rel=1e-12)
        assert riemann_symmetry_residual(W) <= 1e-12
        assert np.abs(np.einsum("ik,ijkl->jl", gi, W)).max() <= 1e-9


def test_weyl_generic_four_dimensional():
    g = generic(4, seed=3)
    for p in g.chart.sample(5):
        W = weyl(g, p).entries
        geom = geometry(g, p, 2)
        assert np.abs(np.einsum("ik,ijkl->jl", geom.g0_inv, W)).max() <= 1e-9
        n = 4
        A = schouten(g, p).entries
        np.testing.assert_allclose(kn(A, geom.g0) / (n - 2) + W, riemann(g, p).entries, atol=1e-9)


def test_cotton_properties_generic():
    for n in (3, 4):
        g = generic(n, seed=n)
        for p in g.chart.sample(5):
            C = cotton(g, p).entries
            gi = geometry(g, p, 0).g0_inv
            assert np.abs(C + C.transpose(1, 0, 2)).max() <= 1e-12
            assert np.abs(np.einsum("jk,ijk->i", gi, C)).max() <= 1e-9
            assert np.abs(np.einsum("ik,ijk->j", gi, C)).max() <= 1e-9
            assert np.abs(C).max() > 1e-4


def test_cotton_weyl_divergence_generic():
    g = generic(4, seed=11)
    for p in g.chart.sample(5):
        geom = geometry(g, p, 4)
        C = cotton(g, p).entries
        rhs = -(4 - 2) / (4 - 3) * weyl_divergence(geom)
        assert np.abs(C - rhs).max() <= 1e-7 * (1 + np.abs(C).max())


@pytest.mark.parametrize("entry_id, params", [
    ("hyperbolic", {"n": 4, "m": 2}), ("exampleA", {"p": 1, "q": 2, "m": 2}),
    ("cosh_cylinder", {"n": 3, "m": 2}), ("hemisphere", {"n": 3, "m": 2}),
])
def test_cotton_vanishes(entry_id, params):
    e = catalog.build(entry_id, params)
    for p in sample(e, 10):
        assert np.abs(cotton(e.qe.g, p).entries).max() <= 1e-8


def test_kulkarni_nomizu():
    I = np.eye(3)
    gg = kulkarni_nomizu(I, I).entries
    assert gg[0, 1, 0, 1] == 2
    np.testing.assert_array_equal(gg, 2 * (np.einsum("ik,jl->ijkl", I, I) - np.einsum("il,jk->ijkl", I, I)))
    assert np.abs(kulkarni_nomizu(np.zeros((3, 3)), np.zeros((3, 3))).entries).max() == 0
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(2, 4, 4))
    K = kulkarni_nomizu(a + a.T, b + b.T).entries
    assert riemann_symmetry_residual(K) <= 1e-12
    with pytest.raises(ShapeError):
        kulkarni_nomizu(np.eye(3), np.eye(4))


def test_kn_reproduces_sphere_curvature():
    g = sphere(3).metric
    for p in g.chart.sample(5):
        A, g0 = schouten(g, p).entries, geometry(g, p, 0).g0
        np.testing.assert_allclose(kn(A, g0), riemann(g, p).entries, atol=1e-9)


def test_traceless_ricci(example_a, example_a_points):
    g = example_a.qe.g
    for p in example_a_points[:5]:
        Ro = traceless_ricci(g, p).entries
        gi = geometry(g, p, 0).g0_inv
        assert abs(np.einsum("ij,ij->", gi, Ro)) <= 1e-10
        # Ricci eigenvalues (-1, -1, -3, -3) about their mean -2
        assert norm2(Ro, gi) == pytest.approx(4.0, abs=1e-10)
    lam = -1.5
    e = catalog.build("product_R_H2", {"m": 2, "lambda": lam})
    p = sample(e, 1)[0]
    assert norm2(traceless_ricci(e.qe.g, p).entries, geometry(e.qe.g, p, 0).g0_inv) == \
        pytest.approx(2 * lam**2 / 3, abs=1e-10)


def test_t_tensor_on_example(example_a):
    qe = example_a.qe
    for r in np.linspace(0.1, 2.0, 7):
        p = [r, 1.0, 0.2, 1.3]
        q = qe_point(qe, p)
        T = t_tensor(qe, p).entries
        assert np.abs(T + T.transpose(1, 0, 2)).max() <= 1e-12
        assert norm2(T, q.g_inv) == pytest.approx(64 / 3 * math.sinh(r) ** 2, rel=1e-10)
        D = d_tensor(qe, p).entries
        assert norm2(D, q.g_inv) == pytest.approx(
            (1 / (2 * math.cosh(r))) ** 2 * 64 / 3 * math.sinh(r) ** 2, rel=1e-10)
        assert np.abs(np.einsum("jk,ijk->i", q.g_inv, T)).max() <= 1e-10


def test_t_and_d_vanish_on_hyperbolic_space():
    e = catalog.build("hyperbolic", {"n": 4, "m": 2})
    for p in sample(e, 10):
        assert np.abs(t_tensor(e.qe, p).entries).max() <= 1e-10
        assert np.abs(d_tensor(e.qe, p).entries).max() <= 1e-10


def test_t_vanishes_for_constant_potential():
    g = sphere(3).metric
    qe = QEStructure(g, ScalarField(g.chart, lambda x: 1.0), 2.0, 2.0)
    p = g.chart.sample(1)[0]
    # every term carries grad u or grad R, the latter zero up to rounding
    assert np.abs(t_tensor(qe, p).entries).max() <= 1e-12
    assert np.abs(d_tensor(qe, p).entries).max() == 0


def test_p_and_q_on_example(example_a, example_a_points):
    qe = example_a.qe
    for p in example_a_points[:5]:
        q = qe_point(qe, p)
        assert q.rho == pytest.approx(-1.0, abs=1e-12)
        P = p_tensor(qe, p).entries
        ev = np.sort(np.linalg.eigvals(q.g_inv @ P).real)
        np.testing.assert_allclose(ev, [-2, -2, 0, 0], atol=1e-10)
        assert np.einsum("ij,ij->", q.g_inv, P) == pytest.approx(q.R - 4 * q.rho, abs=1e-12)
        assert riemann_symmetry_residual(q_tensor(qe, p).entries) <= 1e-9


def test_p_equals_ricci_on_product():
    e = catalog.build("product_R_H2", {"m": 2, "lambda": -1})
    p = sample(e, 1)[0]
    q = qe_point(e.qe, p)
    assert q.rho == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(q.P, q.ric, atol=1e-12)


def test_p_of_einstein_entry_is_multiple_of_metric():
    e = catalog.build("hyperbolic", {"n": 3, "m": 2})
    q = qe_point(e.qe, sample(e, 1)[0])
    ev = np.linalg.eigvals(q.g_inv @ q.P).real
    assert np.ptp(ev) <= 1e-10


def test_p_and_q_need_m_above_one():
    e = catalog.build("hyperbolic", {"n": 3, "m": 2})
    qe = QEStructure(e.qe.g, e.qe.u, 1.0, e.qe.lam)
    p = sample(e, 1)[0]
    with pytest.raises(ParamError):
        p_tensor(qe, p)
    with pytest.raises(ParamError):
        q_tensor(qe, p)
    with pytest.raises(ParamError):
        QEStructure(e.qe.g, e.qe.u, 0.0, 1.0)


@pytest.mark.parametrize("entry_id, params", [it for it in catalog.SUITE
                                              if catalog.build(*it).n >= 3],
                         ids=[i for i, it in zip(suite_ids(), catalog.SUITE)
                              if catalog.build(*it).n >= 3])
def test_decomposition_and_t_trace_on_catalog(entry_id, params):
    e = catalog.build(entry_id, params)
    for p in sample(e, 10):
        q = qe_point(e.qe, p)
        n = q.n
        A = q.ric - q.R / (2 * (n - 1)) * q.g
        assert np.abs(kn(A, q.g) / (n - 2) + q.W - q.rm).max() <= 1e-8
        assert np.abs(np.einsum("jk,ijk->i", q.g_inv, q.T)).max() <= 1e-8


def test_rescaling_map():
    e = catalog.build("hyperbolic", {"n": 3, "m": 2})
    s = e.qe.rescaled(2.0)
    assert s.lam == pytest.approx(e.qe.lam / 4)
    p = sample(e, 1)[0]
    assert qe_point(s, p).R == pytest.approx(qe_point(e.qe, p).R / 4, rel=1e-12)
    assert qe_point(s, p).mu == pytest.approx(qe_point(e.qe, p).mu / 4, rel=1e-12)
