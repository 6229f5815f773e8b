import math

import numpy as np
import pytest

import phasekit as pk
from phasekit import NoCrossingError, Section


def radial_radius(r0, t):
    """Closed form for dr/dt = r(1 - r^2)."""
    e = math.exp(2.0 * t)
    return math.sqrt(r0 * r0 * e / (1.0 - r0 * r0 + r0 * r0 * e))


def test_radial_closed_form():
    m = pk.make_model("radial")
    traj = pk.integrate(m, np.array([2.0, 0.0]), (0.0, 1.0),
                        tol=(1e-10, 1e-12))
    r = np.linalg.norm(traj.states[-1])
    assert abs(r - radial_radius(2.0, 1.0)) < 1e-9


def test_on_cycle_rotation():
    m = pk.make_model("radial")
    x = pk.flow(m, np.array([1.0, 0.0]), math.pi / 2, tol=(1e-11, 1e-13))
    np.testing.assert_allclose(x, [0.0, 1.0], atol=1e-9)


def test_zero_span_identity():
    m = pk.make_model("radial")
    traj = pk.integrate(m, np.array([1.3, 0.2]), (0.0, 0.0))
    assert len(traj.times) == 1
    np.testing.assert_allclose(traj.states[0], [1.3, 0.2])
    x = pk.flow(m, np.array([1.3, 0.2]), 0.0)
    np.testing.assert_allclose(x, [1.3, 0.2])


def test_group_property_single():
    m = pk.make_model("radial")
    x0 = np.array([1.5, 0.2])
    tol = (1e-9, 1e-11)
    once = pk.flow(m, x0, 1.4, tol=tol)
    twice = pk.flow(m, pk.flow(m, x0, 0.7, tol=tol), 0.7, tol=tol)
    assert np.linalg.norm(once - twice) < 10 * 1e-8


def test_group_property_random():
    m = pk.make_model("radial")
    rng = np.random.default_rng(7)
    tol = (1e-9, 1e-11)
    for _ in range(100):
        ang = rng.uniform(0, 2 * math.pi)
        rad = rng.uniform(0.4, 1.8)
        x0 = rad * np.array([math.cos(ang), math.sin(ang)])
        t, s = rng.uniform(0.1, 1.2, size=2)
        a = pk.flow(m, x0, t + s, tol=tol)
        b = pk.flow(m, pk.flow(m, x0, s, tol=tol), t, tol=tol)
        assert np.linalg.norm(a - b) < 100 * 1e-8


def test_spiral_period_return():
    m = pk.make_model("spiral")
    x = pk.flow(m, np.array([1.0, 0.0]), 2 * math.pi, tol=(1e-11, 1e-13))
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-8)


def test_convergence_order():
    m = pk.make_model("radial")
    x0 = np.array([2.0, 0.0])
    exact = radial_radius(2.0, 1.0)
    errs = []
    for rtol in (1e-5, 1e-6, 1e-7, 1e-8):
        x = pk.flow(m, x0, 1.0, tol=(rtol, rtol * 1e-2))
        errs.append(abs(np.linalg.norm(x) - exact))
    # halving (here: decimating) tol must cut the endpoint error by >= 2x
    for a, b in zip(errs, errs[1:]):
        assert b < a / 2 or b < 1e-12


def test_trajectory_invariants():
    m = pk.make_model("radial")
    traj = pk.integrate(m, np.array([1.5, 0.1]), (0.0, 3.0))
    assert np.all(np.diff(traj.times) > 0)
    assert traj.states.shape[1] == m.dim
    for k in (0, len(traj.times) // 2, len(traj.times) - 1):
        np.testing.assert_allclose(traj.dense_eval(traj.times[k]),
                                   traj.states[k], rtol=0, atol=1e-12)


def test_find_crossing_on_cycle():
    m = pk.make_model("radial")
    sec = Section(s=lambda x: x[1], direction=+1)
    t_star, x_star = pk.find_crossing(m, np.array([1.0, 0.0]), sec,
                                      t_max=10.0)
    assert abs(t_star - 2 * math.pi) < 1e-6
    assert abs(x_star[1]) < 1e-10


def test_find_crossing_off_cycle():
    m = pk.make_model("radial")
    sec = Section(s=lambda x: x[1], direction=+1)
    t_star, x_star = pk.find_crossing(m, np.array([2.0, 0.0]), sec,
                                      t_max=10.0)
    assert abs(t_star - 2 * math.pi) < 0.1
    assert x_star[0] > 0 and x_star[0] < 2.0
    assert abs(x_star[1]) < 1e-10


def test_find_crossing_never():
    m = pk.make_model("radial")
    sec = Section(s=lambda x: x[0] - 10.0, direction=+1)
    with pytest.raises(NoCrossingError):
        pk.find_crossing(m, np.array([1.5, 0.0]), sec, t_max=30.0)


def test_direction_filtering():
    m = pk.make_model("radial")
    up = Section(s=lambda x: x[1], direction=+1)
    down = Section(s=lambda x: x[1], direction=-1)
    t_up, _ = pk.find_crossing(m, np.array([0.0, 1.0]), up, t_max=10.0)
    t_down, _ = pk.find_crossing(m, np.array([0.0, 1.0]), down, t_max=10.0)
    # starting at the top of the circle: downward crossing comes first
    assert abs(t_down - math.pi / 2) < 1e-6
    assert abs(t_up - 3 * math.pi / 2) < 1e-6
