from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy import integrate

from conftest import random_spec, specs
from rmcurve.curve import (
    branch_points,
    check_ordering,
    count_real_branch_points,
    cut_structure,
    density,
    density_profile,
    dx_dz,
    fiber_roots,
    in_support,
    lambda0,
    lambda_fn,
    lambda_values,
    mass_between,
    primitive,
    reference_point,
    resolve_sheet,
    standard_lattice,
    validate_spec,
    x_of_z,
    xi0,
    xi_branch,
    xi_sheets,
)
from rmcurve.errors import DegenerateCurveError, PoleError, SpecError

SLOW = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])


def two_cut_endpoints(a):
    """Support endpoints for a = +-a, eps = 1/2 from the roots of the branch quartic."""
    spec = validate_spec([-a, a], ["1/2", "1/2"])
    inner = np.sqrt(8 * a**2 + 1)
    y = np.sqrt([(2 * a**2 + 1 + inner) / 2, (2 * a**2 + 1 - inner) / 2])
    return np.sort(x_of_z(spec, np.concatenate([-y, y])))


def oracle_roots(spec, x):
    """Fiber roots from mpmath at 30 digits, independent of the companion solver."""
    mpmath.mp.dps = 30
    p = np.poly1d([1.0])
    for a in spec.a_array:
        p = p * np.poly1d([1.0, -a])
    t = np.poly1d([1.0, 0.0]) * p
    for j, e in enumerate(spec.eps_array):
        q = np.poly1d([1.0])
        for i, a in enumerate(spec.a_array):
            if i != j:
                q = q * np.poly1d([1.0, -a])
        t = t + e * q
    coeffs = (t - x * p).coeffs
    roots = mpmath.polyroots([mpmath.mpc(c) for c in coeffs], maxsteps=200, extraprec=60)
    return np.array([complex(r) for r in roots])


class TestSpec:
    def test_pairs_sorted_jointly(self):
        s = validate_spec([2.0, -1.0], ["3/4", "1/4"])
        assert s.a == (-1.0, 2.0)
        assert s.eps == (Fraction(1, 4), Fraction(3, 4))

    @pytest.mark.parametrize(
        "a, eps",
        [([0, 0], ["1/2", "1/2"]), ([0, 1], ["1/2", "1/3"]), ([0, 1], ["3/2", "-1/2"]), ([0], ["1/2", "1/2"]), ([], [])],
    )
    def test_invalid_specs_rejected(self, a, eps):
        with pytest.raises(SpecError):
            validate_spec(a, eps)

    def test_pole_rejected(self, two_cut):
        with pytest.raises(PoleError):
            x_of_z(two_cut, 2.0)

    @SLOW
    @given(specs(), st.complex_numbers(max_magnitude=8, allow_nan=False, allow_infinity=False))
    def test_fiber_roots_solve_the_fiber(self, spec, x):
        roots = fiber_roots(spec, np.array([x]))[0]
        assert roots.shape == (spec.k + 1,)
        scale = 1 + abs(x) + max(abs(np.asarray(spec.a_array)))
        assert np.allclose(x_of_z(spec, roots), x, atol=1e-9 * scale)

    @SLOW
    @given(specs(), st.floats(-6, 6))
    def test_x_of_z_on_real_line(self, spec, y):
        if np.min(np.abs(y - spec.a_array)) < 1e-3:
            return
        want = y + sum(float(e) / (y - a) for a, e in zip(spec.a, spec.eps))
        assert np.real_if_close(x_of_z(spec, y)) == pytest.approx(want, rel=1e-13, abs=1e-13)

    def test_fiber_roots_match_high_precision_oracle(self, three_cut):
        for x in (0.3 + 0.2j, -2.0 + 0j, 5.5 - 1.0j):
            got = np.sort_complex(fiber_roots(three_cut, np.array([x]))[0])
            want = np.sort_complex(oracle_roots(three_cut, x))
            assert np.allclose(got, want, atol=1e-12)


class TestBranchPoints:
    def test_semicircle(self, semicircle):
        bps = branch_points(semicircle)
        assert np.allclose(bps.x_real, [-2, 2], atol=1e-12)
        assert np.allclose(bps.y_real, [-1, 1], atol=1e-12)

    @pytest.mark.parametrize("a", [1.2, 2.0, 3.5])
    def test_two_cut_quartic_formula(self, a):
        spec = validate_spec([-a, a], ["1/2", "1/2"])
        assert np.allclose(branch_points(spec).x_real, two_cut_endpoints(a), atol=1e-10)

    @pytest.mark.parametrize("a", [0.3, 0.9])
    def test_merged_below_transition(self, a):
        spec = validate_spec([-a, a], ["1/2", "1/2"])
        bps = branch_points(spec)
        assert bps.l == 1 and len(bps.x_pairs) == 1
        w, wb = bps.x_pairs[0]
        assert w.imag > 0 and np.isclose(wb, np.conj(w))

    def test_critical_spec_raises(self):
        spec = validate_spec([-1, 1], ["1/2", "1/2"])
        with pytest.raises(DegenerateCurveError):
            branch_points(spec)
        assert count_real_branch_points(spec) in (2, 3, 4)

    @SLOW
    @given(specs())
    def test_branch_points_are_critical_points_of_x(self, spec):
        bps = branch_points(spec)
        y = np.array(bps.y_roots)
        assert y.size == 2 * spec.k
        assert np.all(np.abs(dx_dz(spec, y)) < 1e-9)
        assert list(bps.x_real) == sorted(bps.x_real)

    @pytest.mark.parametrize("a", [-1.5, 0.0, 2.5])
    def test_single_source_is_shifted_semicircle(self, a):
        spec = validate_spec([a], ["1"])
        assert np.allclose(branch_points(spec).x_real, [a - 2, a + 2], atol=1e-12)


class TestDensity:
    def test_semicircle_closed_form(self, semicircle):
        x = np.linspace(-2.5, 2.5, 101)
        want = np.sqrt(np.clip(4 - x**2, 0, None)) / (2 * np.pi)
        assert np.allclose(density(semicircle, x), want, atol=1e-12)

    def test_density_matches_high_precision_roots(self, three_cut):
        for x in np.linspace(-4.5, 4.5, 13):
            want = max(r.imag for r in oracle_roots(three_cut, x)) / np.pi
            assert abs(density(three_cut, x) - want) < 1e-10

    def test_zero_off_support(self, two_cut):
        z = branch_points(two_cut).x_real
        gap = 0.5 * (z[1] + z[2])
        assert density(two_cut, gap) == 0.0
        assert density(two_cut, z[0] - 1) == 0.0
        assert not in_support(two_cut, gap)

    @SLOW
    @given(specs())
    def test_cut_masses_match_quadrature(self, spec):
        cs = cut_structure(spec)
        for (lo, hi), m in zip(cs.cuts, cs.masses):
            ref, _ = integrate.quad(lambda x: density(spec, x), lo, hi, epsabs=1e-12, limit=200)
            assert abs(m - ref) < 1e-7
        assert abs(sum(cs.masses) - 1) < 1e-8

    def test_masses_follow_fractions(self, three_cut):
        cs = cut_structure(three_cut)
        assert np.allclose(cs.masses, [1 / 3] * 3, atol=1e-10)

    def test_merged_cut_carries_both_fractions(self, merged):
        cs = cut_structure(merged)
        assert cs.sheet_groups == ((1, 2),)
        assert np.allclose(cs.masses, [1.0], atol=1e-10)

    def test_profile_cdf_is_monotone_and_complete(self, two_cut):
        prof = density_profile(two_cut)
        assert np.all(np.diff(prof.cumulative) >= -1e-15)
        assert abs(prof.cdf(prof.grid[-1] + 1) - 1) < 1e-9
        mid = 0.5 * (prof.cuts[0][1] + prof.cuts[1][0])
        assert abs(prof.cdf(mid) - 0.5) < 1e-9

    def test_mass_between_matches_quadrature(self, three_cut):
        lo, hi = cut_structure(three_cut).cuts[1]
        x = lo + 0.37 * (hi - lo)
        ref, _ = integrate.quad(lambda t: density(three_cut, t), lo, x, epsabs=1e-13)
        assert abs(mass_between(three_cut, 2, x) - ref) < 1e-9

    def test_edge_constant_matches_square_root_law(self, three_cut):
        cs = cut_structure(three_cut)
        z = branch_points(three_cut).x_real
        d = 1e-8
        for j, rho in enumerate(cs.edge_constants):
            inner = z[j] + d if j % 2 == 0 else z[j] - d
            assert abs(np.pi * density(three_cut, inner) / np.sqrt(d) - rho) < 1e-3 * rho

    def test_semicircle_edge_constants(self, semicircle):
        assert np.allclose(cut_structure(semicircle).edge_constants, [1, 1], atol=1e-10)


class TestSheets:
    @staticmethod
    def brute_force(spec, x, steps=4000):
        """Nearest-root matching along the straight segment from the reference point."""
        x_far = reference_point(spec)
        y = np.sort(oracle_roots(spec, x_far).real)
        y = np.concatenate([[y[-1]], y[:-1]]).astype(complex)
        for u in np.linspace(0, 1, steps + 1)[1:]:
            xs = x_far + u * (x - x_far)
            r = np.sort_complex(fiber_roots(spec, np.array([xs]))[0])
            order = [int(np.argmin(np.abs(r - v))) for v in y]
            assert len(set(order)) == len(order)
            y = r[order]
        return y

    @pytest.mark.parametrize("x", [0.5 + 0.3j, -2.0 + 0.01j, 3.0 - 0.5j, -5.0 - 2.0j])
    def test_tracking_matches_brute_force(self, three_cut, x):
        assert np.allclose(xi_sheets(three_cut, x), self.brute_force(three_cut, x), atol=1e-10)

    @SLOW
    @given(specs(), st.sampled_from([1, -1]))
    def test_asymptotic_labels(self, spec, sign):
        x = 1e4 * np.exp(1j * sign * 0.7)
        xi = xi_sheets(spec, x)
        assert abs(xi[0] - (x - 1 / x)) < 1e-6
        assert np.allclose(xi[1:], spec.a_array + spec.eps_array / x, atol=1e-6)

    @SLOW
    @given(specs(), st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False))
    def test_sheet_zero_is_the_physical_branch(self, spec, x):
        if x.imag == 0:
            return
        assert abs(xi_sheets(spec, x)[0] - xi0(spec, x)) < 1e-10

    def test_sheets_are_a_permutation_of_the_roots(self, merged):
        for x in (0.1 + 0.2j, -0.3 - 0.05j, 2.0 + 1e-3j):
            got = np.sort_complex(xi_sheets(merged, x))
            want = np.sort_complex(fiber_roots(merged, np.array([x]))[0])
            assert np.allclose(got, want, atol=1e-12)

    def test_gluing_along_cuts(self, three_cut):
        # Sheet glued along a cut continues xi_0 through it: xi_{s+} = xi_{0-}.
        cs = cut_structure(three_cut)
        for (lo, hi), (s,) in zip(cs.cuts, cs.sheet_groups):
            x = np.linspace(lo, hi, 9)[1:-1]
            plus = xi_sheets(three_cut, x + 0j, 1)[:, s]
            assert np.allclose(plus, xi0(three_cut, x + 0j, -1), atol=1e-10)

    def test_merged_gluing_switches_at_crossing(self, merged):
        cs = cut_structure(merged)
        (r,) = cs.gamma_crossings[0]
        assert abs(r) < 1e-10
        lo, hi = cs.cuts[0]
        for x, sheet in ((0.5 * (lo + r), 1), (0.5 * (r + hi), 2)):
            plus = xi_branch(merged, x, sheet, side=1)
            assert abs(plus - xi0(merged, x, -1)) < 1e-10

    def test_side_must_match_half_plane(self, two_cut):
        with pytest.raises(ValueError):
            xi_sheets(two_cut, 1.0 - 1.0j, side=1)

    def test_resolve_sheet(self, two_cut, merged):
        assert resolve_sheet(two_cut, (0, 0)) == 0
        assert resolve_sheet(two_cut, (2, 0)) == 2
        assert resolve_sheet(merged, (1, 1)) == 2
        with pytest.raises(ValueError):
            resolve_sheet(two_cut, (1, 1))


class TestPrimitive:
    @pytest.mark.parametrize("half", [1, -1])
    def test_derivative_is_y_dx(self, three_cut, half):
        y0 = 0.7 + 0.4j * half
        y1 = -2.3 + 1.1j * half
        mpmath.mp.dps = 20

        def f(u):
            y = complex(y0 + (y1 - y0) * u)
            return y * complex(dx_dz(three_cut, y)) * (y1 - y0)

        ref = complex(mpmath.quad(lambda u: mpmath.mpc(f(float(u))), [0, 1]))
        got = primitive(three_cut, y1, half) - primitive(three_cut, y0, half)
        assert abs(got - ref) < 1e-9


class TestLambda:
    def test_vanishes_at_right_edge(self, three_cut):
        z = branch_points(three_cut).x_real
        assert abs(lambda0(three_cut, z[-1])) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_gap_jumps(self, seed):
        spec = random_spec(np.random.default_rng(seed))
        cs = cut_structure(spec)
        z = branch_points(spec).x_real
        for i in range(cs.l - 1):
            g = 0.5 * (z[2 * i + 1] + z[2 * i + 2])
            jump = lambda0(spec, g, 1) - lambda0(spec, g, -1)
            assert abs(jump + 2j * np.pi * sum(cs.masses[i + 1 :])) < 1e-9

    def test_real_part_continuous_across_cuts(self, two_cut):
        lo, hi = cut_structure(two_cut).cuts[1]
        x = np.linspace(lo, hi, 7)[1:-1]
        assert np.allclose(lambda0(two_cut, x, 1).real, lambda0(two_cut, x, -1).real, atol=1e-12)

    def test_lambda_fn_agrees_with_vector_form(self, merged):
        z = 0.3 + 0.2j
        vals = lambda_values(merged, np.array([z]))[0]
        for s in range(3):
            assert abs(lambda_fn(merged, s, z).value - vals[s]) < 1e-12

    def test_sheet_values_are_primitives(self, three_cut):
        # lambda_s' = xi_s: compare a centered difference with the tracked root.
        z, h = 1.3 + 0.8j, 1e-5
        d = (lambda_values(three_cut, z + h) - lambda_values(three_cut, z - h)) / (2 * h)
        assert np.allclose(d, xi_sheets(three_cut, z), atol=1e-7)

    @pytest.mark.parametrize("seed", range(4))
    def test_ordering_on_lattice(self, seed):
        spec = random_spec(np.random.default_rng(100 + seed))
        report = check_ordering(spec, standard_lattice(spec))
        assert report.passed, report.min_margin

    def test_ordering_for_merged_cut(self, merged):
        assert check_ordering(merged, standard_lattice(merged)).passed

    def test_ordering_in_gap_has_physical_sheet_on_top(self, two_cut):
        report = check_ordering(two_cut, np.array([0.0 + 0j]))
        vals = lambda_values(two_cut, 0.0).real
        assert report.passed
        assert report.points[0].margin == pytest.approx(vals[0] - vals[1:].max())

