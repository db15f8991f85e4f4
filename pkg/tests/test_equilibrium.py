import numpy as np
import pytest
from scipy.optimize import minimize

from freelab.equilibrium import (
    CenteringShift,
    SolverSettings,
    entropy_duality_check,
    find_centering_shift,
    free_pressure,
    moment_map,
    solve_equilibrium,
)
from freelab.errors import InvalidInputError, MultiCutError
from freelab.logpotential import chi_rel
from freelab.measures import (
    from_density_table,
    ks_distance,
    make_arcsine,
    make_marchenko_pastur_family,
    make_semicircular,
    moment,
    translate,
)
from freelab.potentials import (
    Potential,
    abs_potential,
    arcsine_indicator,
    linear_halfline,
    polynomial_even,
    quadratic,
    quartic,
    shift_potential,
    tilt_linear,
)
from freelab.transport import ssfti_functional

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def test_quadratic_gives_semicircle():
    res = solve_equilibrium(quadratic(1.0))
    assert res.method == "soft"
    assert res.converged
    assert abs(res.support_lo + 2.0) < 1e-9
    assert abs(res.support_hi - 2.0) < 1e-9
    assert abs(res.pressure - HALF_LOG_2PI) < 1e-12
    assert abs(res.energy + 0.25) < 1e-12
    assert abs(res.el_constant - 1.0) < 1e-10
    assert res.el_residual < 1e-6
    assert res.sd_residual < 1e-6
    assert ks_distance(res.measure, make_semicircular()) < 1e-7


def test_scaled_quadratic_matches_semicircular_family():
    for v in (0.5, 2.0):
        res = solve_equilibrium(quadratic(1.0 / v))
        assert ks_distance(res.measure, make_semicircular(variance=v)) < 1e-7
        assert abs(res.support_hi - 2.0 * np.sqrt(v)) < 1e-9
        assert abs(res.pressure - 0.5 * np.log(2.0 * np.pi * v)) < 1e-12
        assert abs(res.el_constant - (1.0 - np.log(v))) < 1e-10


def test_quartic_endpoints_and_moments():
    res = solve_equilibrium(quartic(0.25))
    b = (16.0 / 3.0) ** 0.25
    assert abs(res.support_hi - b) < 1e-8
    assert abs(res.support_lo + b) < 1e-8
    eta = HALF_LOG_2PI + 3.0 / 8.0 - np.log(3.0) / 4.0
    assert abs(res.pressure - eta) < 1e-12
    assert abs(moment(res.measure, 2) - 4.0 * np.sqrt(3.0) / 9.0) < 1e-7
    assert abs(moment(res.measure, 4) - 1.0) < 1e-7
    assert res.el_residual < 1e-6


def test_quartic_density_closed_form():
    # hand inversion of u' = x^3: density (r^2 + 2x^2) sqrt(r^2 - x^2) / (4 pi)
    res = solve_equilibrium(quartic(0.25))
    r = res.support_hi
    xs = np.linspace(-0.95 * r, 0.95 * r, 41)
    expected = (r * r + 2.0 * xs * xs) * np.sqrt(r * r - xs * xs) / (4.0 * np.pi)
    got = np.array([res.measure.density_at(x) for x in xs])
    assert np.max(np.abs(got - expected)) < 1e-6


def test_linear_halfline_gives_marchenko_pastur():
    res = solve_equilibrium(linear_halfline())
    assert res.method == "wall-left"
    assert abs(res.support_lo) < 1e-12
    assert abs(res.support_hi - 4.0) < 1e-7
    assert abs(res.pressure - (HALF_LOG_2PI - 0.75)) < 1e-10
    assert abs(res.measure.barycenter() - 1.0) < 1e-8
    assert ks_distance(res.measure, make_marchenko_pastur_family(1.0)) < 5e-5
    assert res.el_residual < 1e-5


def test_flat_well_gives_arcsine():
    res = solve_equilibrium(arcsine_indicator(1.0))
    assert res.method == "wall-both"
    eta = -2.0 * np.log(2.0) + 0.75 + HALF_LOG_2PI
    assert abs(res.pressure - eta) < 1e-12
    assert ks_distance(res.measure, make_arcsine(1.0)) < 1e-6
    assert res.el_residual < 5e-5
    # hard walls add boundary terms the interior moment identities miss
    assert res.sd_residual > 0.5


def test_abs_potential_anchors():
    res = solve_equilibrium(abs_potential())
    assert abs(res.support_hi - np.pi) < 1e-6
    eta = np.log(np.pi / 2.0) + HALF_LOG_2PI - 0.75
    assert abs(res.pressure - eta) < 2e-6
    # doubled resolution tightens the kinked-derivative aliasing
    res2 = solve_equilibrium(abs_potential(), SolverSettings(nodes=16384))
    assert abs(res2.support_hi - np.pi) < 1e-8
    assert abs(res2.pressure - eta) < 1e-7


def test_pressure_shift_invariance():
    p0 = free_pressure(quadratic(1.0))
    p1 = free_pressure(shift_potential(quadratic(1.0), 1.3))
    assert abs(p1 - p0) < 1e-10


def test_pressure_tilt_identity():
    # tilting x^2/2 by lam*x translates sigma and adds lam^2/2
    for lam in (0.7, -1.2):
        p = free_pressure(tilt_linear(quadratic(1.0), lam))
        assert abs(p - (HALF_LOG_2PI + 0.5 * lam * lam)) < 1e-10


def test_pressure_one_lipschitz():
    h1 = quadratic(1.0)
    bump = 0.05
    h2 = Potential(fn=lambda x: 0.5 * x * x + bump * np.sqrt(1.0 + x * x),
                   deriv=lambda x: x + bump * x / np.sqrt(1.0 + x * x),
                   domain_lo=-np.inf, domain_hi=np.inf,
                   is_convex=True, growth_ok=True, label="quadratic+cosh-bump")
    r1, r2 = solve_equilibrium(h1), solve_equilibrium(h2)
    lo = min(r1.support_lo, r2.support_lo)
    hi = max(r1.support_hi, r2.support_hi)
    xs = np.linspace(lo, hi, 2001)
    gap = float(np.max(np.abs(h1.value(xs) - h2.value(xs))))
    assert abs(r1.pressure - r2.pressure) <= gap + 1e-9


def test_pressure_convex_in_potential():
    p1 = free_pressure(quadratic(1.0))
    p2 = free_pressure(quartic(0.25))
    for th in (0.25, 0.5, 0.75):
        mix = polynomial_even(th * 0.5, (1.0 - th) * 0.25)
        pm = free_pressure(mix)
        assert pm <= th * p1 + (1.0 - th) * p2 + 1e-9


def test_variational_optimality_against_probe_family():
    u = quartic(0.25)
    res = solve_equilibrium(u)
    best = chi_rel(res.measure, u).value
    probes = [
        make_semicircular(variance=0.5),
        make_semicircular(variance=0.7698),
        make_semicircular(),
        make_arcsine(1.5),
        translate(make_semicircular(variance=0.5), 0.3),
    ]
    for probe in probes:
        assert best >= chi_rel(probe, u).value - 5e-5


def test_even_potential_symmetric_density():
    res = solve_equilibrium(quartic(0.25))
    xs = np.linspace(0.05, 0.9 * res.support_hi, 17)
    for x in xs:
        assert abs(res.measure.density_at(x) - res.measure.density_at(-x)) < 1e-9


def test_double_well_raises_multicut():
    u = polynomial_even(-1.5, 0.25)
    with pytest.raises(MultiCutError):
        solve_equilibrium(u, SolverSettings(allow_nonconvex=True))


def test_nonconvex_needs_opt_in():
    u = polynomial_even(-1.5, 0.25)
    with pytest.raises(InvalidInputError):
        solve_equilibrium(u)


def test_growth_certificate_required():
    stray = tilt_linear(abs_potential(), -2.0)  # |x| - 2x escapes to +infinity
    assert not stray.growth_ok
    with pytest.raises(InvalidInputError):
        solve_equilibrium(stray)


def test_result_parts_are_consistent():
    for u in (quadratic(1.0), quartic(0.25), linear_halfline()):
        res = solve_equilibrium(u)
        rebuilt = res.energy + 0.75 + HALF_LOG_2PI - res.potential_moment
        assert abs(res.pressure - rebuilt) < 1e-12
        assert abs(res.el_constant - (res.potential_moment - 2.0 * res.energy)) < 1e-12
        # independent quadrature route: chi - int u
        assert abs(res.pressure - chi_rel(res.measure, u).value) < 5e-5
        ps = res.measure.quantile_ps
        assert ps[0] == 0.0 and ps[-1] == 1.0


def test_entropy_duality_gap():
    sig = make_semicircular()
    assert abs(entropy_duality_check(sig, [quadratic(1.0)])) < 5e-4
    assert entropy_duality_check(sig, [quartic(0.25)]) > 0.01
    assert entropy_duality_check(sig, [quartic(0.25), quadratic(1.0)]) < 5e-4
    arc = make_arcsine(1.0)
    assert abs(entropy_duality_check(arc, [arcsine_indicator(1.0)])) < 5e-4


def test_moment_map_sigma_is_fixed_point():
    u, res = moment_map(make_semicircular())
    xs = np.linspace(-1.5, 1.5, 11)
    assert np.max(np.abs(u.value(xs) - 0.5 * xs * xs)) < 2e-5
    assert abs(res.support_hi - 2.0) < 1e-4
    assert abs(res.pressure - HALF_LOG_2PI) < 1e-5


def test_moment_map_scaled_semicircular_pair():
    for c in (4.0, 0.25):
        mu = make_semicircular(variance=c)
        u, res = moment_map(mu)
        assert ks_distance(res.measure, make_semicircular(variance=1.0 / c)) < 5e-5
        xs = np.linspace(-0.8 / np.sqrt(c), 0.8 / np.sqrt(c), 9)
        assert np.max(np.abs(u.d(xs) - c * xs)) < 5e-4


def test_moment_map_arcsine_regression():
    mu = make_arcsine(1.0)
    u, res = moment_map(mu)
    push_xs = u.d(res.measure.quantile_xs)
    from freelab.measures import from_quantile_table
    push = from_quantile_table(res.measure.quantile_ps,
                               np.maximum.accumulate(push_xs))
    assert ks_distance(push, mu) < 1e-3
    assert abs(res.support_hi - 3.30617) < 5e-3  # frozen from this solver
    assert abs(u.value(res.measure.barycenter())) < 1e-9


def test_moment_map_transport_functional_minimum():
    # the solved nu minimizes 0.5 m2(nu) - chi(nu) - 0.5 W2(mu,nu)^2, and for
    # a semicircular input the minimum value is -rel_entropy - half log 2 pi
    c = 0.7
    mu = make_semicircular(variance=c)
    _, res = moment_map(mu)
    val = ssfti_functional(mu, res.measure)
    for v in (0.4, 1.0 / c, 1.4, 2.5):
        assert val <= ssfti_functional(mu, make_semicircular(variance=v)) + 1e-6
    analytic = 0.5 + 0.5 * np.log(c) - 0.5 * c - HALF_LOG_2PI
    assert abs(val - analytic) < 3e-4


def test_moment_map_functional_gap_for_arcsine():
    # away from the semicircular family the minimum sits strictly above the
    # entropy bound; freeze the measured arcsine gap as a regression value
    mu = make_arcsine(1.0)
    _, res = moment_map(mu)
    val = ssfti_functional(mu, res.measure)
    for v in (0.4, 0.7, 1.0, 1.4):
        assert val <= ssfti_functional(mu, make_semicircular(variance=v)) + 1e-6
    h_arc = 0.5 * 0.5 - (-np.log(2.0) + 0.75 + HALF_LOG_2PI) + HALF_LOG_2PI
    gap = val - (-h_arc - HALF_LOG_2PI)
    assert 0.07 < gap < 0.08


def test_moment_map_requires_centered_input():
    with pytest.raises(InvalidInputError):
        moment_map(make_semicircular(mean=0.5))


def test_find_centering_shift_quadratics():
    cs0 = find_centering_shift(quadratic(1.0), search_box=(-2.0, 2.0))
    assert cs0.found and abs(cs0.lam) < 1e-8
    cs1 = find_centering_shift(shift_potential(quadratic(1.0), 1.0),
                               search_box=(-4.0, 4.0))
    assert cs1.found and abs(cs1.lam - 1.0) < 1e-8


def test_find_centering_shift_nonconvex_fixture():
    f = Potential(fn=lambda x: x ** 4 / 4 + x ** 3 / 10,
                  deriv=lambda x: x ** 3 + 0.3 * x * x,
                  domain_lo=-np.inf, domain_hi=np.inf,
                  is_convex=False, growth_ok=True, label="quartic-cubic")
    cfg = SolverSettings(allow_nonconvex=True)
    cs = find_centering_shift(f, search_box=(-2.0, 2.0), cfg=cfg)
    assert cs.found
    assert abs(cs.lam + 0.17383375) < 1e-6
    res = solve_equilibrium(tilt_linear(f, cs.lam), cfg)
    assert abs(res.measure.barycenter()) < 1e-8
    assert len(cs.curve) >= 9


def test_find_centering_shift_not_found_reports_curve():
    cs = find_centering_shift(shift_potential(quadratic(1.0), 1.0),
                              search_box=(-4.0, -2.0))
    assert isinstance(cs, CenteringShift)
    assert not cs.found and cs.lam is None
    assert len(cs.curve) == 9
    assert all(bar > 2.9 for _, bar in cs.curve)


def _fekete_endpoint(u, n, lo, hi):
    """Largest point of the discrete energy minimizer with n particles."""
    x0 = lo + (hi - lo) * (np.arange(n) + 0.5) / n

    def objective(x):
        d = x[:, None] - x[None, :]
        np.fill_diagonal(d, 1.0)
        pot = np.sum(u.value(x)) / n
        inter = np.log(np.maximum(np.abs(d), 1e-300))
        np.fill_diagonal(inter, 0.0)
        f = pot - np.sum(inter) / (n * n)
        # the unit diagonal adds a spurious 1 to each row sum of 1/d
        grad = u.d(x) / n - 2.0 * (np.sum(1.0 / d, axis=1) - 1.0) / (n * n)
        return f, grad

    res = minimize(objective, x0, jac=True, method="L-BFGS-B",
                   options=dict(maxiter=30000, maxfun=60000, ftol=0.0,
                                gtol=1e-11, maxcor=25))
    assert res.status == 0
    return float(np.max(res.x))


def _extrapolated_edge(u, lo, hi):
    """Three-point fit b(n) = b - g n^(-2/3) - d/n of the Fekete edge."""
    ns = np.array([100, 200, 400])
    tops = np.array([_fekete_endpoint(u, n, lo, hi) for n in ns])
    design = np.column_stack([np.ones(3), -ns ** (-2.0 / 3.0), -1.0 / ns])
    coef = np.linalg.solve(design, tops)
    return float(coef[0])


def test_particle_oracle_validates_then_checks_quartic():
    # oracle calibration on the quadratic, where the edge is known exactly
    b_quad = _extrapolated_edge(quadratic(1.0), -1.8, 1.8)
    assert abs(b_quad - 2.0) < 5e-4
    b_quartic = _extrapolated_edge(quartic(0.25), -1.4, 1.4)
    res = solve_equilibrium(quartic(0.25))
    assert abs(b_quartic - res.support_hi) < 1e-3
