import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brownmap.domain import (PI_PLUS, boundary_sigma, bracket_radii, in_sigma, lifetime_at_origin,
                             lifetime_from_moments, lifetime_T, theta_t)
from brownmap.errors import DomainError
from brownmap.measure import Law


def delta1_closed_form(lam):
    # p0 = p2 = 1/|1 - lam|^2 for the point mass at 1
    r2 = abs(lam) ** 2
    if r2 == 1.0:
        return abs(1 - lam) ** 2
    return abs(1 - lam) ** 2 * math.log(1 / r2) / (1 - r2)


def test_delta1_examples(delta1):
    assert lifetime_T(delta1, -1) == pytest.approx(4.0, abs=1e-14)
    assert lifetime_T(delta1, 1j) == pytest.approx(2.0, abs=1e-14)
    for th in np.linspace(0.1, math.pi, 7):
        assert lifetime_T(delta1, complex(math.cos(th), math.sin(th))) == pytest.approx(2 - 2 * math.cos(th), abs=1e-13)


def test_delta1_grid_against_closed_form(delta1):
    rng = np.random.default_rng(1)
    for _ in range(200):
        lam = complex(rng.uniform(-3, 3), rng.uniform(0.05, 3))
        assert lifetime_T(delta1, lam) == pytest.approx(delta1_closed_form(lam), rel=1e-10)


def test_removable_singularity_series():
    # R close to 1 on both sides of the series cutoff
    for u in (1e-3, 2e-4, 9e-5, 1e-7, 0.0, -1e-7, -9e-5, -2e-4):
        p2 = 2.0
        p0 = p2 * (1 + u)
        exact = math.log1p(u) / (u * p2) if u else 1 / p2
        assert lifetime_from_moments(p0, p2, 1.0) == pytest.approx(exact, rel=1e-12)
    assert lifetime_from_moments(math.inf, 3.0, 1.0) == 0.0


def test_errors_and_origin(delta1, uniform12, half_zero):
    with pytest.raises(DomainError):
        lifetime_T(delta1, 0)
    assert lifetime_at_origin(delta1) == math.inf
    assert lifetime_at_origin(uniform12) == math.inf
    with pytest.raises(DomainError):
        lifetime_at_origin(half_zero)


def test_on_support_values(delta1, uniform12):
    assert lifetime_T(delta1, 1.0) == 0.0
    assert lifetime_T(uniform12, 1.5) == 0.0


def test_cusp_value(cusp):
    # normalized density 3 (xi - 1)^2 on [1, 2]: p0(1) = 3, p2(1) = 7
    R = 3 / 7
    assert lifetime_T(cusp, 1.0) == pytest.approx(math.log(R) / (7 * (R - 1)), rel=1e-12)
    assert lifetime_T(cusp, 1.5) == 0.0
    # T scales like 1/mass; the unnormalized density (mass 1/9) gives about 1.91 at 1
    assert lifetime_from_moments(3 / 9, 7 / 9, 1.0) == pytest.approx(1.91, abs=5e-3)


def test_theta_t_examples(delta1):
    assert theta_t(delta1, 1.0, 2.0).theta == pytest.approx(math.pi / 2, abs=1e-9)
    th = theta_t(delta1, 1.0, 4.02)
    assert th.is_pi_plus and th.theta == PI_PLUS
    T10 = delta1_closed_form(10.0)
    assert theta_t(delta1, 10.0, 0.9 * T10).theta == 0.0
    with pytest.raises(DomainError):
        theta_t(delta1, -1.0, 1.0)


def test_pi_plus_iff_circle_inside(delta1):
    assert not theta_t(delta1, 1.0, 4.0).is_pi_plus
    assert theta_t(delta1, 1.0, 4.0 + 1e-9).is_pi_plus


def test_in_sigma_examples(delta1, two_atoms):
    assert in_sigma(delta1, -1, 4.02)
    assert not in_sigma(delta1, -1, 3.9)
    assert not in_sigma(delta1, 0, 100.0)
    assert not in_sigma(two_atoms, 0, 100.0)


def test_support_in_closure(two_atoms, uniform12, cusp):
    for law in (two_atoms, uniform12, cusp):
        pts = [x for x, _ in law.atoms] + [0.5 * (p.a + p.b) for p in law.densities]
        for t in (0.01, 0.1, 1.0):
            for x in pts:
                assert in_sigma(law, x + 1e-6j, t) or in_sigma(law, x, t)


def test_bracket_contains_trace(two_atoms):
    for t in (0.1, 0.4):
        tr = boundary_sigma(two_atoms, t, 128)
        r_min, r_max = bracket_radii(two_atoms, t)
        v = tr.vertices()
        assert np.all(np.abs(v) <= r_max) and np.all(np.abs(v) >= r_min)


def test_boundary_small_t_single_component(delta1):
    tr = boundary_sigma(delta1, 0.1)
    assert len(tr.components) == 1 and not tr.flagged
    for z in tr.vertices():
        assert lifetime_T(delta1, z) == pytest.approx(0.1, abs=1e-8)


def test_boundary_annulus(delta1):
    tr = boundary_sigma(delta1, 4.02)
    assert len(tr.components) == 2 and not tr.flagged
    # inner curve ends at a negative real vertex, where theta_t reaches pi
    assert any(np.min(c.real) < 0 for c in tr.components)
    assert tr.contains([-1.0])[0] and not tr.contains([0.0])[0] and not tr.contains([100.0])[0]


@pytest.mark.parametrize("t,n", [(0.1, 2), (0.4, 1)])
def test_boundary_two_atoms_components(two_atoms, t, n):
    tr = boundary_sigma(two_atoms, t)
    assert len(tr.components) == n and not tr.flagged


def test_boundary_cusp_point_one(cusp):
    # t = 1/2 and t = 1 for the mass-1/9 density (xi - 1)^2 / 3 are t/9 for the normalized law
    for t in (1 / 18, 1 / 9):
        tr = boundary_sigma(cusp, t, 48)
        r_low = min(float(np.min(r)) for r in tr.radii)
        assert r_low == pytest.approx(1.0, abs=1e-9)
        assert lifetime_T(cusp, 1.0) > t
        # T jumps at the density end point; only that real-axis vertex is flagged
        flagged = [tr.components[c][j] for c, j, _ in tr.flagged]
        assert len(flagged) == 1 and flagged[0] == pytest.approx(1.0, abs=1e-8)


def test_trace_io(tmp_path, two_atoms):
    tr = boundary_sigma(two_atoms, 0.1, 64)
    tr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "component_id,re,im,r,theta"
    assert len(lines) == 1 + len(tr.vertices())
    tr.to_json(tmp_path / "t.json")


def test_empty_trace_when_t_tiny():
    law = Law.uniform(1.0, 2.0)
    tr = boundary_sigma(law, 1e-300, 16)
    # Sigma_t always contains the support's interior points where T = 0
    assert not tr.is_empty


laws = st.sampled_from([
    Law.delta(1.0),
    Law.point_masses([(1.0, 0.2), (2.0, 0.8)]),
    Law.point_masses([(0.5, 0.3), (3.0, 0.7)]),
])


@settings(max_examples=80, deadline=None)
@given(laws, st.floats(0.05, 4), st.floats(0.01, math.pi - 0.01))
def test_conjugation_exact(law, r, th):
    lam = r * complex(math.cos(th), math.sin(th))
    assert lifetime_T(law, lam) == lifetime_T(law, lam.conjugate())


@settings(max_examples=80, deadline=None)
@given(laws, st.floats(0.05, 4), st.floats(0.001, math.pi - 0.001), st.floats(0.001, math.pi - 0.001))
def test_monotone_in_angle(law, r, a, b):
    t1, t2 = sorted((a, b))
    T1 = lifetime_T(law, r * complex(math.cos(t1), math.sin(t1)))
    T2 = lifetime_T(law, r * complex(math.cos(t2), math.sin(t2)))
    assert T1 <= T2 * (1 + 1e-12) + 1e-14


@settings(max_examples=40, deadline=None)
@given(laws, st.floats(0.1, 3), st.floats(-math.pi, math.pi), st.floats(0.05, 2))
def test_in_sigma_matches_theta_t(law, r, th, t):
    lam = r * complex(math.cos(th), math.sin(th))
    T = lifetime_T(law, lam)
    if abs(T - t) < 1e-6 * t:
        return  # too close to the boundary for the bisection tolerance
    assert in_sigma(law, lam, t) == theta_t(law, r, t).contains_angle(th)
