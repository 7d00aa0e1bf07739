import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ultracarl.domain import (Ball, BoundaryError, Box, DomainError, DomainModel, boundary_distance, check_T,
                              contains, normal_batch, normal_f, outward_normal, r_plus, sample_boundary,
                              static_reparametrize)
from ultracarl.geometry import ReferencePoint, Signature, SpaceTimePoint, metric_inner


def drifting_disc(T=2.0):
    return DomainModel(Signature(1, 2), T, Ball([0.0, 0.0], 1.0, radius_profile=[1.0, 0.2, 0.02],
                                                 center_profile=[[0.0, 0.3], [0.0, 0.0, -0.05]]))


def test_static_disc_normal_is_radial(unit_disc):
    q = SpaceTimePoint([0.3], [np.cos(1.0), np.sin(1.0)])
    nu_t, nu_x = outward_normal(unit_disc, q)
    assert nu_t == 0.0
    assert np.allclose(nu_x, q.x, atol=1e-15)


def test_normal_rejects_points_off_the_boundary(unit_disc):
    with pytest.raises(BoundaryError):
        outward_normal(unit_disc, SpaceTimePoint([0.0], [0.5, 0.0]))
    with pytest.raises(BoundaryError):
        outward_normal(unit_disc, SpaceTimePoint([2.5], [1.0, 0.0]))
    box = DomainModel(Signature(1, 2), 2.0, Box([-1, -1], [1, 1]))
    with pytest.raises(BoundaryError):
        outward_normal(box, SpaceTimePoint([0.0], [1.0, 1.0]))
    nu_t, nu_x = outward_normal(box, SpaceTimePoint([0.0], [1.0, 0.2]))
    assert nu_t == 0.0 and nu_x.tolist() == [1.0, 0.0]


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.9, 1.9), st.floats(0, 2 * np.pi))
def test_moving_normal_is_unit_and_follows_level_set(t1, theta):
    dom = drifting_disc()
    s = dom.shape
    omega = np.array([np.cos(theta), np.sin(theta)])
    x = s.c(np.array(t1)) + s.rho(np.array(t1)) * omega
    nu_t, nu_x = normal_batch(dom, np.array([[t1]]), x[None])
    nu = np.concatenate([nu_t, nu_x[0]])
    assert metric_inner(nu, nu, dom.sig) == pytest.approx(1.0, abs=1e-12)

    # g-raised gradient of phi = |x - c(t1)| - rho(t1), by differences
    def phi(y):
        return np.linalg.norm(y[1:] - s.c(np.array(y[0]))) - s.rho(np.array(y[0]))

    y0 = np.concatenate([[t1], x])
    h = 1e-6
    d = np.array([(phi(y0 + h * e) - phi(y0 - h * e)) / (2 * h) for e in np.eye(3)])
    raised = d * np.array([-1.0, 1.0, 1.0])
    raised /= np.sqrt(metric_inner(raised, raised, dom.sig))
    assert np.allclose(nu, raised, atol=1e-8)


def test_boundary_measure_of_static_disc(unit_disc):
    s = sample_boundary(unit_disc, (16, 64))
    assert s.area == pytest.approx(2 * np.pi * 4.0, rel=1e-13)
    assert np.allclose(boundary_distance(unit_disc, s.t, s.x), 0.0, atol=1e-15)


def test_moving_patch_measure_matches_induced_metric():
    # induced area density from the Gram determinant of the chart tangents
    dom = drifting_disc()
    s = dom.shape
    n_t, n_ang = 8, 16
    samp = sample_boundary(dom, (n_t, n_ang))
    dt, dth = 2 * dom.T / n_t, 2 * np.pi / n_ang
    h = 1e-6
    for i in range(0, len(samp), 7):
        t1, th = samp.t[i, 0], samp.angle[i]

        def chart(a, b):
            w = np.array([np.cos(b), np.sin(b)])
            return np.concatenate([[a], s.c(np.array(a)) + s.rho(np.array(a)) * w])

        e_t = (chart(t1 + h, th) - chart(t1 - h, th)) / (2 * h)
        e_th = (chart(t1, th + h) - chart(t1, th - h)) / (2 * h)
        G = np.array([[metric_inner(a, b, dom.sig) for b in (e_t, e_th)] for a in (e_t, e_th)])
        dens = np.sqrt(abs(np.linalg.det(G)))
        assert samp.weight[i] / (dt * dth) == pytest.approx(dens, rel=1e-7)


def test_non_timelike_boundary_is_rejected():
    dom = DomainModel(Signature(1, 2), 1.0, Ball([0.0, 0.0], 2.0, radius_profile=[2.0, 1.2]))
    with pytest.raises(DomainError):
        sample_boundary(dom, 8)


def test_contains_is_strict(unit_disc):
    t = np.array([[0.0], [0.0], [2.0]])
    x = np.array([[0.5, 0.0], [1.0, 0.0], [0.0, 0.0]])
    assert contains(unit_disc, t, x).tolist() == [True, False, False]


def test_r_plus_static_and_moving(unit_disc, growing_disc):
    sig = unit_disc.sig
    assert r_plus(unit_disc, ReferencePoint([0.0], [0.0, 0.0])) == 1.0
    assert r_plus(unit_disc, ReferencePoint([0.0], [2.0, 0.0])) == 3.0
    p = ReferencePoint([0.0], [2.0, 0.0])
    R = r_plus(growing_disc, p)
    # sup of 2 + rho(t1) subject to 2 + rho(t1) > |t1|: attained as t1 -> 10/3
    assert 10 / 3 <= R <= 10 / 3 + 1e-3
    with pytest.raises(DomainError):
        check_T(unit_disc, ReferencePoint([0.0], [2.0, 0.0]))
    assert check_T(growing_disc, p) == R


def test_normal_f_sign_follows_position_of_p(unit_disc):
    q = SpaceTimePoint([0.0], [1.0, 0.0])
    assert normal_f(unit_disc, q, ReferencePoint([0.0], [0.0, 0.0])) == 0.5
    assert normal_f(unit_disc, q, ReferencePoint([0.0], [2.0, 0.0])) == -0.5


def test_reparametrization_maps_boundary_to_boundary():
    dom = drifting_disc()
    rp = static_reparametrize(dom)
    samp = sample_boundary(rp.static, (6, 12))
    t, x = rp.map(samp.t, samp.x)
    assert np.allclose(boundary_distance(dom, t, x), 0.0, atol=1e-14)
    assert np.all(rp.det(samp.t) > 0)
    J = rp.jacobian(samp.t[:1], samp.x[:1])[0]
    h = 1e-6
    y = np.concatenate([samp.t[0], samp.x[0]])
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        ap = np.concatenate(rp.map((y + e)[:1], (y + e)[1:]))
        am = np.concatenate(rp.map((y - e)[:1], (y - e)[1:]))
        assert np.allclose((ap - am) / (2 * h), J[:, j], atol=1e-8)
