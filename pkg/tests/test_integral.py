import math

import numpy as np
import pytest

from isrsgn import kernels
from isrsgn.core import ChannelPlan
from isrsgn.integral import (eta_spm_integral, eta_total_integral, eta_xpm_integral,
                             evaluate_plan, link_function, phase_coefficient)
from isrsgn.quadrature import QuadratureError, QuadratureSpec, graded_half, split_rule

from conftest import grid_plan
from oracles import lossy_kernel, mc_spm, mc_xpm


@pytest.fixture(scope="module")
def linear_fiber(ssmf):
    return ssmf.with_(cr=0.0)


def test_link_function_matches_analytic_kernel(c_band, linear_fiber):
    rng = np.random.default_rng(3)
    half = c_band.total_bandwidth / 2
    f1, f2, fi = rng.uniform(-half, half, (3, 200))
    got = link_function(f1, f2, fi, c_band, linear_fiber)
    omega = phase_coefficient(f1, f2, fi, linear_fiber)
    ref = lossy_kernel(omega, linear_fiber.alpha, linear_fiber.length)
    np.testing.assert_allclose(got, ref, rtol=1e-9)


def test_link_function_phase_convention(linear_fiber):
    # the phase vanishes on the ridge and the kernel peaks at L_eff^2
    plan = grid_plan(3)
    leff = -math.expm1(-linear_fiber.alpha * linear_fiber.length) / linear_fiber.alpha
    assert link_function(0.0, 1e9, 0.0, plan, linear_fiber) == pytest.approx(leff ** 2, rel=1e-12)
    assert phase_coefficient(1e9, 2e9, 0.0, linear_fiber.with_(beta3=0.0)) == pytest.approx(
        -4 * math.pi ** 2 * 2e18 * linear_fiber.beta2)


def test_link_function_rejects_out_of_band(c_band, ssmf):
    with pytest.raises(ValueError, match="outside"):
        link_function(c_band.total_bandwidth, 0.0, 0.0, c_band, ssmf)


def test_tilt_favours_low_frequencies(c_band, ssmf):
    lo = link_function(-2e12, -2e12, -2e12, c_band, ssmf)
    hi = link_function(2e12, 2e12, 2e12, c_band, ssmf)
    assert lo > hi


def test_spm_matches_monte_carlo(toy_plan, linear_fiber):
    coi = toy_plan.channels[2]
    ref, se = mc_spm(coi, linear_fiber, samples=2_000_000)
    assert se / ref < 2e-3
    got = eta_spm_integral(coi, toy_plan, linear_fiber)
    assert got == pytest.approx(ref, rel=0.01)


def test_xpm_matches_monte_carlo(toy_plan, linear_fiber):
    fib = linear_fiber.with_(beta3=0.0)
    coi, intf = toy_plan.channels[2], toy_plan.channels[3]
    ref, se = mc_xpm(coi, intf, fib, samples=2_000_000)
    assert se / ref < 2e-3
    assert eta_xpm_integral(coi, intf, toy_plan, fib) == pytest.approx(ref, rel=0.01)


def test_gamma_zero_and_quadratic_law(toy_plan, ssmf):
    coi, intf = toy_plan.channels[1], toy_plan.channels[4]
    assert eta_spm_integral(coi, toy_plan, ssmf.with_(gamma=0.0)) == 0.0
    assert eta_xpm_integral(coi, intf, toy_plan, ssmf.with_(gamma=0.0)) == 0.0
    one = eta_total_integral(coi, toy_plan, ssmf).eta_total
    two = eta_total_integral(coi, toy_plan, ssmf.with_(gamma=2 * ssmf.gamma)).eta_total
    assert two == pytest.approx(4 * one, rel=1e-13)


def test_single_channel_total_is_spm(ssmf):
    plan = grid_plan(1)
    r = eta_total_integral(plan.channels[0], plan, ssmf)
    assert r.eta_xpm_by_interferer == ()
    assert r.eta_total == r.eta_spm == eta_spm_integral(plan.channels[0], plan, ssmf)
    assert r.model_tag == "integral"


def test_identical_channels_rejected(toy_plan, ssmf):
    ch = toy_plan.channels[0]
    with pytest.raises(ValueError):
        eta_xpm_integral(ch, ch, toy_plan, ssmf)


def test_neighbour_dominates_distant_interferer(ssmf):
    plan = grid_plan(12)
    coi = plan.channels[0]
    near = eta_xpm_integral(coi, plan.channels[1], plan, ssmf)
    far = eta_xpm_integral(coi, plan.channels[11], plan, ssmf)
    assert near > 5 * far


def test_silent_interferer_scales_out(linear_fiber):
    # launch powers must be positive, so "P_k = 0" is approached through the exact (P_k/P_i)^2 law
    base = grid_plan(4)
    coi = base.channels[0]
    ref = eta_xpm_integral(coi, base.channels[2], base, linear_fiber)
    for p_k in (1e-6, 1e-9, 1e-12):
        plan = base.with_powers([1e-3, 1e-3, p_k, 1e-3])
        got = eta_xpm_integral(plan.channels[0], plan.channels[2], plan, linear_fiber)
        assert got == pytest.approx(ref * (p_k / 1e-3) ** 2, rel=1e-12)


def test_power_scaling_without_isrs(linear_fiber, toy_plan):
    coi = toy_plan.channels[1]
    a = eta_total_integral(coi, toy_plan, linear_fiber)
    scaled = toy_plan.with_powers(7.0 * toy_plan.powers)
    b = eta_total_integral(scaled.channels[1], scaled, linear_fiber)
    assert b.eta_total == pytest.approx(a.eta_total, rel=1e-12)


def test_isrs_depends_on_total_power(ssmf, c_band):
    coi = c_band.channels[0]
    low = eta_spm_integral(coi, c_band, ssmf)
    high = eta_spm_integral(c_band.with_powers(5e-3).channels[0], c_band.with_powers(5e-3), ssmf)
    assert high > low  # low-frequency edge gains power from ISRS


def test_mirror_symmetry_without_isrs_or_slope(linear_fiber):
    fib = linear_fiber.with_(beta3=0.0)
    plan = grid_plan(6)
    res = evaluate_plan(plan, fib)
    etas = [r.eta_total for r in res]
    np.testing.assert_allclose(etas, etas[::-1], rtol=2e-3)


def test_self_convergence_on_grid_doubling(c_band, ssmf):
    coi = c_band.channels[24]
    for n in (64,):
        q1 = QuadratureSpec(f_grid_points=n, adaptive=False)
        q2 = QuadratureSpec(f_grid_points=2 * n, adaptive=False)
        for fn, args in ((eta_spm_integral, (coi,)),
                         (eta_xpm_integral, (coi, c_band.channels[25])),
                         (eta_xpm_integral, (coi, c_band.channels[40]))):
            a = fn(*args, c_band, ssmf, q1)
            b = fn(*args, c_band, ssmf, q2)
            assert abs(a - b) <= 1e-3 * b


def test_hyperbolic_and_uniform_grids_agree(c_band, ssmf):
    coi = c_band.channels[10]
    hyp = eta_spm_integral(coi, c_band, ssmf)
    uni = eta_spm_integral(coi, c_band, ssmf,
                           QuadratureSpec(f_grid_points=256, grid_strategy="uniform", adaptive=False))
    assert uni == pytest.approx(hyp, rel=5e-3)


def test_zeta_rules_agree_for_slow_phase(toy_plan, ssmf):
    coi = toy_plan.channels[2]
    filon = eta_spm_integral(coi, toy_plan, ssmf)
    gl = eta_spm_integral(coi, toy_plan, ssmf, QuadratureSpec(zeta_points=256, zeta_rule="gauss-legendre"))
    assert gl == pytest.approx(filon, rel=1e-3)


def test_zeta_resolution(c_band, ssmf):
    coi = c_band.channels[0]
    a = eta_spm_integral(coi, c_band, ssmf, QuadratureSpec(zeta_points=128))
    b = eta_spm_integral(coi, c_band, ssmf, QuadratureSpec(zeta_points=512))
    assert a == pytest.approx(b, rel=1e-4)


def test_quadrature_error_when_budget_exhausted(c_band, ssmf):
    quad = QuadratureSpec(f_grid_points=32, max_f_grid_points=32, rel_tol=1e-9)
    with pytest.raises(QuadratureError):
        eta_spm_integral(c_band.channels[0], c_band, ssmf, quad)


@pytest.mark.parametrize("bad", [dict(zeta_points=15), dict(zeta_points=8), dict(f_grid_points=31),
                                 dict(grid_strategy="spiral"), dict(rel_tol=0.0),
                                 dict(max_f_grid_points=16), dict(zeta_rule="simpson")])
def test_quadrature_spec_validation(bad):
    with pytest.raises(ValueError):
        QuadratureSpec(**bad)


def test_graded_rules_integrate_exactly_known_functions():
    w = 1e8
    x, wt = graded_half(5e9, w, 64, "tan")
    assert np.sum(wt) == pytest.approx(5e9, rel=1e-10)
    # the tan map turns a Lorentzian into a constant
    assert np.sum(wt * w ** 2 / (w ** 2 + x ** 2)) == pytest.approx(w * math.atan(5e9 / w), rel=1e-12)
    x, wt = split_rule(-2e9, 5e9, w, 64, "sinh")
    assert np.sum(wt) == pytest.approx(7e9, rel=1e-10)
    assert np.all(np.diff(x) > 0)
    with pytest.raises(ValueError):
        split_rule(1.0, 2.0, w, 32, "tan")


def test_results_do_not_depend_on_worker_count(ssmf):
    plan = grid_plan(6)
    serial = evaluate_plan(plan, ssmf, workers=1)
    parallel = evaluate_plan(plan, ssmf, workers=3)
    assert serial == parallel


@pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")
def test_backends_give_same_eta(toy_plan, ssmf):
    coi, intf = toy_plan.channels[0], toy_plan.channels[3]
    a = eta_xpm_integral(coi, intf, toy_plan, ssmf, backend="python")
    b = eta_xpm_integral(coi, intf, toy_plan, ssmf, backend="cython")
    assert a == pytest.approx(b, rel=1e-10)


def test_non_uniform_plan_uses_exact_normaliser(ssmf):
    # sparse occupancy: the oracle must still produce finite, positive values
    plan = ChannelPlan.from_absolute([186.1e12, 186.3e12, 195.9e12, 196.1e12], 64e9, 3e-3)
    res = evaluate_plan(plan, ssmf)
    assert all(r.eta_total > 0 and math.isfinite(r.eta_total) for r in res)
    # without dispersion slope only ISRS breaks the symmetry, in favour of the low edge
    flat = evaluate_plan(plan, ssmf.with_(beta3=0.0))
    assert flat[0].eta_spm > flat[-1].eta_spm
