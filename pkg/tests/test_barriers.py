import dataclasses
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from necklab.barriers import (BarrierParams, TildeParams, certify_sign,
                              dn_barrier_2d, dn_phi_case1, dn_phi_case2,
                              feasibility_margin, grad_phi_2d,
                              grad_tilde_phi_2d, L_phi_case1, L_phi_case2,
                              L_tilde_phi, phi_2d, phi_case1, phi_case2,
                              tilde_phi, tilde_phi_2d)
from necklab.errors import ConfigError
from necklab.geometry import BoundaryProfile, DomainSpec, Side, alpha_k
from necklab.modesolver import ModeProblem, solve_mode
from necklab.numerics import Stretch, build_grid

QUAD_DOMAIN = DomainSpec(n=3, epsilon=1e-3, R=0.1,
                         profile=BoundaryProfile.quadratic(0.5, -0.5))
CASE2_DOMAIN = DomainSpec(n=3, epsilon=1e-3, R=0.1,
                          profile=BoundaryProfile.quadratic(1.0, 0.25))


def fd_operator(fn, n, k, r, xn, h):
    """5-point finite-difference image of the mode operator."""
    urr = (fn(r + h, xn) - 2 * fn(r, xn) + fn(r - h, xn)) / h**2
    ur = (fn(r + h, xn) - fn(r - h, xn)) / (2 * h)
    unn = (fn(r, xn + h) - 2 * fn(r, xn) + fn(r, xn - h)) / h**2
    return urr + (n - 2) / r * ur - k * (k + n - 3) / r**2 * fn(r, xn) + unn


# ---------------------------------------------------------------------------
# feasibility margin and the corner identity


def test_feasibility_margin_arithmetic():
    assert_allclose(feasibility_margin(3, 1, 0.1, 0.32, 8.5), 0.0264,
                    atol=1e-12)
    assert_allclose(feasibility_margin(3, 1, 0.1, 0.30, 8.0), -0.04,
                    atol=1e-12)


@pytest.mark.parametrize("n", range(3, 9))
@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("xi", [0.05, 0.1, 0.2])
def test_corner_identity(n, k, xi):
    a = alpha_k(n, k)
    beta = a - xi
    b = 2.0 + 2.0 * beta / xi
    assert abs(feasibility_margin(n, k, xi, beta, b)) <= 1e-11


def test_corner_params_record_margin():
    p = BarrierParams.corner(3, 1, xi=0.1)
    assert abs(p.feasibility) <= 1e-11
    assert_allclose(p.beta, alpha_k(3, 1) - 0.1)
    assert_allclose(p.b, 2.0 + 2.0 * p.beta / 0.1)
    # moving off the corner flips the margin positive
    p_off = BarrierParams.corner(3, 1, xi=0.1, corner_delta=0.01)
    assert p_off.feasibility > 1e-4


def test_barrier_params_validation():
    with pytest.raises(ValueError):
        BarrierParams.corner(3, 0)        # k = 0 has no upper barrier
    with pytest.raises(ValueError):
        BarrierParams(n=3, k=1, alpha_k=0.4, xi=-0.1, beta=0.3, b=8.0)
    with pytest.raises(ValueError):
        BarrierParams.corner(3, 1, xi=0.9)  # beta would be negative


# ---------------------------------------------------------------------------
# case-1 barrier


def test_L_phi_on_the_midline_is_margin_times_power():
    # all x_n^2 terms vanish at x_n = 0, leaving f * r^(beta+xi-2)
    p = dataclasses.replace(BarrierParams.corner(3, 1), b=8.5, beta=0.32)
    f = feasibility_margin(3, 1, p.xi, p.beta, p.b)
    for r in (0.01, 0.05, 0.09):
        assert_allclose(L_phi_case1(p, r, 0.0),
                        f * r ** (p.beta + p.xi - 2.0), rtol=1e-12)


def test_L_phi_corner_zero_on_midline_negative_off():
    p = BarrierParams.corner(3, 1)
    assert abs(L_phi_case1(p, 0.05, 0.0)) <= 1e-8
    r = np.linspace(1e-3, 0.1, 64)[:, None]
    xn = np.linspace(-5e-4, 5e-4, 21)[None, :]
    vals = L_phi_case1(p, r, np.broadcast_to(xn, (64, 21)))
    off = np.broadcast_to(xn, (64, 21)) != 0.0
    assert np.all(vals[off] < 0.0)


@pytest.mark.parametrize("point", [(0.02, 1e-4), (0.04, -3e-4), (0.07, 2e-4)])
def test_L_phi_case1_matches_finite_differences(point):
    p = BarrierParams.corner(3, 1)
    r, xn = point
    exact = L_phi_case1(p, r, xn)
    # step pair large enough that truncation dominates rounding at every point
    err = [abs(fd_operator(lambda R, X: phi_case1(p, R, X), 3, 1, r, xn, h)
               - exact) for h in (4e-5, 2e-5)]
    assert err[1] <= 5e-3 * max(1.0, abs(exact))
    assert 3.0 <= err[0] / err[1] <= 5.0  # second-order shrinkage


def test_phi_case1_needs_positive_radius():
    p = BarrierParams.corner(3, 1)
    with pytest.raises(ValueError):
        phi_case1(p, 0.0, 1e-4)
    with pytest.raises(ValueError):
        L_phi_case1(p, -0.01, 1e-4)


def test_dn_phi_case1_matches_directional_difference():
    p = BarrierParams.corner(3, 1)
    for side in (Side.UPPER, Side.LOWER):
        r = 0.05
        xn = QUAD_DOMAIN.boundary_height(side, r)
        nu = QUAD_DOMAIN.outward_normal(side, r)
        h = 1e-7
        fd = (phi_case1(p, r + h * nu[0], xn + h * nu[1])
              - phi_case1(p, r - h * nu[0], xn - h * nu[1])) / (2 * h)
        assert_allclose(dn_phi_case1(p, QUAD_DOMAIN, side, r), fd, rtol=1e-6)


# ---------------------------------------------------------------------------
# case-2 barrier


def test_case2_weights_and_profile_guard():
    p = BarrierParams.corner(3, 1).with_case2(CASE2_DOMAIN)
    kappa = CASE2_DOMAIN.profile.kappa
    assert p.b1 > 2 * (p.beta + p.xi) * 1.0 / (p.xi * kappa)
    assert p.b2 > 2 * (p.beta + p.xi) * 0.25 / (p.xi * kappa)
    with pytest.raises(ValueError):
        BarrierParams.corner(3, 1).with_case2(QUAD_DOMAIN)  # kappa2 < 0


def test_case2_zero_kappa2_bound_degenerates():
    dom = DomainSpec(n=3, epsilon=1e-3, R=0.1,
                     profile=BoundaryProfile.quadratic(1.0, 0.0))
    p = BarrierParams.corner(3, 1).with_case2(dom)
    assert p.b2 == 1.0  # printed bound is 0, any positive value works


def test_case2_upper_boundary_b1_independent():
    # the b1 distance term vanishes on the upper boundary
    p = BarrierParams.corner(3, 1).with_case2(CASE2_DOMAIN)
    r = np.array([0.03, 0.06])
    xn = CASE2_DOMAIN.boundary_height(Side.UPPER, r)
    v1 = phi_case2(p, CASE2_DOMAIN, r, xn)
    v2 = phi_case2(dataclasses.replace(p, b1=1e6), CASE2_DOMAIN, r, xn)
    assert_allclose(v1, v2, rtol=0, atol=0)


@pytest.mark.parametrize("point", [(0.03, 2e-4), (0.06, -1e-4)])
def test_L_phi_case2_matches_finite_differences(point):
    p = BarrierParams.corner(3, 1).with_case2(CASE2_DOMAIN)
    r, xn = point
    exact = L_phi_case2(p, CASE2_DOMAIN, r, xn)
    err = [abs(fd_operator(lambda R, X: phi_case2(p, CASE2_DOMAIN, R, X),
                           3, 1, r, xn, h) - exact) for h in (2e-5, 1e-5)]
    assert 3.0 <= err[0] / err[1] <= 5.0


def test_dn_phi_case2_matches_directional_difference():
    p = BarrierParams.corner(3, 1).with_case2(CASE2_DOMAIN)
    for side in (Side.UPPER, Side.LOWER):
        r = 0.04
        xn = CASE2_DOMAIN.boundary_height(side, r)
        nu = CASE2_DOMAIN.outward_normal(side, r)
        h = 1e-7
        fd = (phi_case2(p, CASE2_DOMAIN, r + h * nu[0], xn + h * nu[1])
              - phi_case2(p, CASE2_DOMAIN, r - h * nu[0], xn - h * nu[1])) \
            / (2 * h)
        assert_allclose(dn_phi_case2(p, CASE2_DOMAIN, side, r), fd, rtol=1e-6)


def test_case2_printed_bounds_record_violations_swapped_bounds_certify():
    # as printed, the upper-boundary sign condition fails (the weight that
    # is active there carries the other curvature's bound); swapping the
    # two bounds certifies both boundaries: strong evidence for a
    # subscript typo in the source constraints.  Violations are recorded
    # as data either way.
    p = BarrierParams.corner(3, 1).with_case2(CASE2_DOMAIN)
    printed = certify_sign("dnu_phi_ge_0_upper", CASE2_DOMAIN, params=p)
    assert printed.n_violations > 0
    kappa = CASE2_DOMAIN.profile.kappa
    scale = 2 * (p.beta + p.xi) / (p.xi * kappa)
    swapped = dataclasses.replace(p, b1=1.25 * scale * 0.25,
                                  b2=1.25 * scale * 1.0)
    for q in ("dnu_phi_ge_0_upper", "dnu_phi_ge_0_lower"):
        rep = certify_sign(q, CASE2_DOMAIN, params=swapped)
        assert rep.n_violations == 0, q


# ---------------------------------------------------------------------------
# lower barrier


def test_tilde_params_validation():
    with pytest.raises(ValueError):
        TildeParams(n=3, k=1, beta1=0.1, beta2=0.2)  # sum != alpha_k
    with pytest.raises(ValueError):
        TildeParams.split(3, 1, beta1=0.3)  # beta1 >= beta2


def test_tilde_bracket_identity():
    # beta2^2 + (n+1+2 beta1) beta2 - k(k+n-3) + (n-3+beta1) beta1 equals
    # 2 (beta2 - beta1) on the constraint surface
    n, k, b1 = 3, 1, 0.1
    b2 = alpha_k(n, k) - b1
    lhs = b2**2 + (n + 1 + 2 * b1) * b2 - k * (k + n - 3) + (n - 3 + b1) * b1
    assert_allclose(lhs, 2 * (b2 - b1), atol=1e-12)
    assert_allclose(lhs, 0.4284271, atol=1e-7)


def test_L_tilde_positive_on_midline():
    tp = TildeParams.split(3, 1)
    for r in (0.01, 0.05):
        expected = 2 * (tp.beta2 - tp.beta1) * r ** (tp.beta1 + tp.beta2 - 2)
        assert_allclose(L_tilde_phi(tp, r, 0.0), expected, rtol=1e-10)
        assert L_tilde_phi(tp, r, 0.0) > 0.0


def test_L_tilde_matches_finite_differences():
    tp = TildeParams.split(3, 1)
    r, xn = 0.04, 2e-4
    exact = L_tilde_phi(tp, r, xn)
    fd = fd_operator(lambda R, X: tilde_phi(tp, R, X), 3, 1, r, xn, 1e-5)
    assert_allclose(fd, exact, rtol=1e-5)


def test_tilde_monotone_in_r_and_height():
    tp = TildeParams.split(3, 1)
    r = np.linspace(1e-4, 0.1, 200)
    for xn in (0.0, 2e-4, -3e-4):
        vals = tilde_phi(tp, r, xn)
        assert np.all(np.diff(vals) > 0)
    xn = np.linspace(0, 5e-4, 100)
    vals = tilde_phi(tp, 0.05, xn)
    assert np.all(np.diff(vals) > 0)
    assert_allclose(tilde_phi(tp, 0.05, -2e-4), tilde_phi(tp, 0.05, 2e-4))


# ---------------------------------------------------------------------------
# two-dimensional barriers


def test_2d_barriers_harmonic():
    # analytic identity, so it is checked at order-one scale where the
    # fourth derivatives cannot swamp the 5-point stencil
    eps, k1, h = 1.0, 0.5, 1e-4
    for fn in (phi_2d, tilde_phi_2d):
        for x1 in (0.1, 0.25, -0.2):
            for x2 in (0.0, 0.15, -0.1):
                lap = (fn(eps, k1, x1 + h, x2) + fn(eps, k1, x1 - h, x2)
                       + fn(eps, k1, x1, x2 + h) + fn(eps, k1, x1, x2 - h)
                       - 4 * fn(eps, k1, x1, x2)) / h**2
                assert abs(lap) <= 1e-6, fn.__name__


def test_2d_barrier_pointwise_values():
    assert phi_2d(1e-3, 0.5, 0.0, 3e-4) == 0.0          # odd in x1
    assert tilde_phi_2d(1e-3, 0.5, 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_2d_barrier_gradients_match_differences():
    eps, k1 = 1e-3, 0.5
    h = 1e-9
    for grad, fn in ((grad_phi_2d, phi_2d), (grad_tilde_phi_2d, tilde_phi_2d)):
        g1, g2 = grad(eps, k1, 0.012, 3e-4)
        fd1 = (fn(eps, k1, 0.012 + h, 3e-4) - fn(eps, k1, 0.012 - h, 3e-4)) / (2 * h)
        fd2 = (fn(eps, k1, 0.012, 3e-4 + h) - fn(eps, k1, 0.012, 3e-4 - h)) / (2 * h)
        assert_allclose([g1, g2], [fd1, fd2], rtol=1e-5)


@pytest.mark.parametrize("profile", [
    BoundaryProfile.quadratic(0.5, -0.5),   # symmetric: as printed
    BoundaryProfile.quadratic(0.7, -0.3),   # general: midline shift
])
def test_dnu_2d_certifies_on_the_half_strip(profile):
    dom = DomainSpec(n=2, epsilon=1e-3, R=0.1, profile=profile)
    rep = certify_sign("dnu_2d", dom)
    assert rep.n_violations == 0
    assert rep.n_points == 4 * 2048


def test_dn_barrier_2d_requires_quadratic():
    dom = DomainSpec(n=2, epsilon=1e-3, R=0.1, profile=BoundaryProfile.flat())
    with pytest.raises(ValueError):
        dn_barrier_2d(dom, Side.UPPER, 0.01)


# ---------------------------------------------------------------------------
# certification reports


def test_corner_interior_certifies_clean():
    p = BarrierParams.corner(3, 1)
    rep = certify_sign("L_phi_le_0", QUAD_DOMAIN, params=p)
    assert rep.n_points >= 32000
    assert rep.n_violations == 0
    assert rep.worst_margin <= 0.0


def test_flat_boundary_certificate_reduces_to_positive_term():
    # h' = 0 kills every negative boundary term; the exact value on the
    # upper flat boundary is alpha_k eps (r^2+2 x_n^2)^(a/2-1) + the
    # correction's positive flux
    flat = DomainSpec(n=3, epsilon=1e-3, R=0.1, profile=BoundaryProfile.flat())
    p = BarrierParams.corner(3, 1)
    rep = certify_sign("dnu_phi_ge_0_upper", flat, params=p)
    assert rep.n_violations == 0
    r = np.array([0.03])
    xn = flat.boundary_height(Side.UPPER, r)
    phi1_term = p.alpha_k * flat.epsilon * (r**2 + 2 * xn**2) ** (p.alpha_k / 2 - 1)
    assert dn_phi_case1(p, flat, Side.UPPER, r)[0] >= phi1_term[0] > 0.0


def test_tilde_certificate_reports_positive_band():
    rep = certify_sign("L_tilde_le_0", QUAD_DOMAIN,
                       tilde=TildeParams.split(3, 1))
    # the image is positive wherever |x_n| << r, which is most of a thin
    # neck; the report quantifies rather than hides it
    assert rep.n_violations > 0.5 * rep.n_points
    assert rep.worst_margin > 0.0


def test_certification_deterministic_and_json_round_trip():
    p = BarrierParams.corner(3, 1)
    rep1 = certify_sign("L_phi_le_0", QUAD_DOMAIN, params=p,
                        interior_shape=(64, 16))
    rep2 = certify_sign("L_phi_le_0", QUAD_DOMAIN, params=p,
                        interior_shape=(64, 16))
    assert rep1 == rep2
    payload = json.loads(rep1.to_json())
    assert payload["quantity"] == "L_phi_le_0"
    assert set(payload) == {"quantity", "params", "n_points", "n_violations",
                            "worst_margin", "worst_location"}
    assert payload["params"]["b"] == pytest.approx(p.b)


def test_certify_sign_unknown_quantity():
    with pytest.raises(ConfigError):
        certify_sign("no_such_condition", QUAD_DOMAIN)


# ---------------------------------------------------------------------------
# comparison against solver output


@pytest.fixture(scope="module")
def neck_fields():
    fields = {}
    for eps in (1e-2, 1e-3, 1e-4):
        dom = DomainSpec(n=3, epsilon=eps, R=0.1,
                         profile=BoundaryProfile.quadratic(0.5, -0.5))
        grid = build_grid(dom, 256, 32, Stretch.NECK_REFINED)
        fields[eps] = solve_mode(
            ModeProblem(domain=dom, grid=grid, k=1, dirichlet_outer=1.0))
    return fields


def test_upper_comparison_envelope_full_grid(neck_fields):
    p = BarrierParams.corner(3, 1)
    for eps, field in neck_fields.items():
        grid = field.grid
        s = grid.s_coords
        X = grid.x_n_grid()
        S = np.broadcast_to(s[:, None], X.shape)
        off = s > 0.0
        phi = phi_case1(p, S[off, :], X[off, :])
        A = field.values[-1, :].max() / phi[-1, :].min()
        slack = A * phi + 10.0 * eps - field.values[off, :]
        assert slack.min() >= -1e-10, eps


def test_lower_comparison_envelope_neck_region_only(neck_fields):
    # u >= B tilde(phi) holds up to a modest constant at neck scale and
    # genuinely fails near the axis, where tilde(phi) decays only like
    # r^beta1 while the mode amplitude is linear in r
    tp = TildeParams.split(3, 1)
    for eps, field in neck_fields.items():
        grid = field.grid
        s = grid.s_coords
        X = grid.x_n_grid()
        S = np.broadcast_to(s[:, None], X.shape)
        til_R = tilde_phi(tp, np.full_like(X[-1, :], s[-1]), X[-1, :])
        B = field.values[-1, :].min() / til_R.max()
        neck = s >= np.sqrt(eps)
        ratio_neck = (field.values[neck, :]
                      / (B * tilde_phi(tp, S[neck, :], X[neck, :]))).min()
        assert ratio_neck >= 0.5, eps
        first = int(np.argmax(s > 0.0))
        ratio_axis = (field.values[first, :]
                      / (B * tilde_phi(tp, S[first, :], X[first, :]))).min()
        assert ratio_axis < 0.1, eps  # the counterexample, kept visible
