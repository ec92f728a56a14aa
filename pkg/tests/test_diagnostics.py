import numpy as np
import pytest

from necklab.diagnostics import (check_boundary_identity, check_dn_bound,
                                 check_flat_gradient,
                                 check_local_gradient_lemma, check_q_maximum,
                                 default_q_params, neck_region_mask,
                                 outcomes_to_json)
from necklab.errors import ConfigError
from necklab.geometry import BoundaryProfile, DomainSpec
from necklab.modesolver import ModeProblem, solve_2d, solve_mode
from necklab.numerics import Stretch, build_grid


def solve_quad(eps, n=3, R=1.0, k1=0.5, k2=-0.5, ns=256, nt=32):
    dom = DomainSpec(n=n, epsilon=eps, R=R,
                     profile=BoundaryProfile.quadratic(k1, k2))
    grid = build_grid(dom, ns, nt, Stretch.NECK_REFINED)
    if n == 2:
        return solve_2d(dom, grid)
    return solve_mode(ModeProblem(domain=dom, grid=grid, k=1))


def solve_flat(eps, data=None, ns=256, nt=32, R=1.0):
    dom = DomainSpec(n=3, epsilon=eps, R=R, profile=BoundaryProfile.flat())
    grid = build_grid(dom, ns, nt, Stretch.NECK_REFINED)
    return solve_mode(ModeProblem(domain=dom, grid=grid, k=1,
                                  dirichlet_outer=data or R))


EPS_SWEEP = (1e-2, 1e-3, 1e-4)


# ---------------------------------------------------------------------------
# d_n boundedness


def test_dn_bound_flat_trivial():
    fields = [solve_flat(e) for e in EPS_SWEEP]
    out = check_dn_bound(fields)
    assert out.passed and out.measured == pytest.approx(1.0)


def test_dn_bound_quadratic_sweep_and_negative_control():
    fields = [solve_quad(e) for e in EPS_SWEEP]
    out = check_dn_bound(fields)
    assert out.passed and out.measured <= 3.0
    # negative control: the radial derivative spreads like a power of eps
    control = check_dn_bound(fields, measure="d_r")
    assert control.measured > out.measured
    assert control.measured > 3.0


def test_dn_bound_validation():
    fields = [solve_quad(e) for e in EPS_SWEEP[:2]]
    with pytest.raises(ConfigError):
        check_dn_bound(fields)  # needs >= 3
    mixed = [solve_quad(e) for e in EPS_SWEEP[:2]] + [solve_flat(1e-4)]
    with pytest.raises(ConfigError):
        check_dn_bound(mixed)


# ---------------------------------------------------------------------------
# local gradient lemma


def test_local_lemma_flat_small_ratio():
    out = check_local_gradient_lemma(solve_flat(1e-3))
    assert out.passed
    assert out.measured <= 4.0  # closed-form solution keeps it near 0.7


def test_local_lemma_constant_field_zero():
    dom = DomainSpec(n=3, epsilon=1e-3, R=0.1, profile=BoundaryProfile.flat())
    grid = build_grid(dom, 64, 8, Stretch.NECK_REFINED)
    field = solve_mode(ModeProblem(domain=dom, grid=grid, k=0,
                                   dirichlet_outer=1.0))
    out = check_local_gradient_lemma(field)
    assert out.measured <= 1e-6


def test_pointwise_form_fails_for_odd_solutions():
    field = solve_quad(1e-3, n=2)
    sup_form = check_local_gradient_lemma(field)
    pointwise = check_local_gradient_lemma(field, form="pointwise")
    assert sup_form.passed
    # u vanishes on the center column while its gradient does not
    assert pointwise.measured > 1e3
    assert not pointwise.passed


# ---------------------------------------------------------------------------
# boundary identity (n = 2)


def test_boundary_identity_flat_both_sides_zero():
    dom = DomainSpec(n=2, epsilon=1e-3, R=1.0, profile=BoundaryProfile.flat())
    grid = build_grid(dom, 256, 32, Stretch.NECK_REFINED)
    out = check_boundary_identity(solve_2d(dom, grid))
    assert out.passed and out.measured <= 1e-2


def test_boundary_identity_quadratic():
    out = check_boundary_identity(solve_quad(1e-2, n=2, ns=512, nt=64))
    assert out.passed
    assert out.measured <= 0.1


def test_boundary_identity_refines():
    coarse = check_boundary_identity(solve_quad(1e-2, n=2, ns=256, nt=32))
    fine = check_boundary_identity(solve_quad(1e-2, n=2, ns=512, nt=64))
    assert coarse.measured / fine.measured >= 1.5


def test_boundary_identity_rhs_instantiation():
    # with kappa1 = 0.5 the exact right side on the upper boundary is
    # (2 / sqrt(1 + r^2)) * 1 * (d_1 u)^2: h' = r and h'' = 1
    dom = DomainSpec(n=2, epsilon=1e-3, R=1.0,
                     profile=BoundaryProfile.quadratic(0.5, -0.5))
    r = np.array([0.0, 0.3, 0.8])
    np.testing.assert_allclose(dom.profile.dh1(r), r)
    np.testing.assert_allclose(dom.profile.d2h1(r), 1.0)


def test_boundary_identity_guards():
    with pytest.raises(ConfigError):
        check_boundary_identity(solve_quad(1e-3, n=3))
    from necklab.geometry import Perturbation
    dom = DomainSpec(n=2, epsilon=1e-3, R=1.0,
                     profile=BoundaryProfile.quadratic(
                         0.5, -0.5, perturbation=Perturbation(0.1, 0.5)))
    grid = build_grid(dom, 64, 8, Stretch.NECK_REFINED)
    with pytest.raises(ConfigError):
        check_boundary_identity(solve_2d(dom, grid))


# ---------------------------------------------------------------------------
# Q-function maximum


def test_q_default_params_match_inequalities():
    dom = DomainSpec(n=3, epsilon=1e-3, R=1.0,
                     profile=BoundaryProfile.quadratic(0.5, -0.5))
    q = default_q_params(dom)
    assert q["A"] == pytest.approx(5.0)  # 1.25 * 8 max(k1, -k2)
    assert q["B"] == pytest.approx(5.0)
    assert q["A"] > 8 * max(0.5, 0.5) and q["B"] > q["A"] - 3 + 2


def test_q_flat_monotone_argmax_outer():
    out = check_q_maximum(solve_flat(1e-3))
    assert out.passed and out.measured <= 1.0


def test_q_quadratic_sweep_argmax_outer():
    for eps in EPS_SWEEP:
        out = check_q_maximum(solve_quad(eps))
        assert out.passed, eps
    for eps in EPS_SWEEP:
        out = check_q_maximum(solve_quad(eps, n=2))
        assert out.passed, eps


def test_q_invariant_under_solution_scaling():
    dom = DomainSpec(n=3, epsilon=1e-3, R=1.0,
                     profile=BoundaryProfile.quadratic(0.5, -0.5))
    grid = build_grid(dom, 256, 32, Stretch.NECK_REFINED)
    f1 = solve_mode(ModeProblem(domain=dom, grid=grid, k=1, dirichlet_outer=1.0))
    f2 = solve_mode(ModeProblem(domain=dom, grid=grid, k=1, dirichlet_outer=3.0))
    o1, o2 = check_q_maximum(f1), check_q_maximum(f2)
    assert o1.location == o2.location and o1.measured == o2.measured


def test_q_rejects_invalid_weights():
    field = solve_quad(1e-3)
    with pytest.raises(ConfigError):
        check_q_maximum(field, A=3.0, B=10.0)   # A below 8 max(k1,-k2)
    with pytest.raises(ConfigError):
        check_q_maximum(field, A=5.0, B=3.0)    # B below A - n + 2


def test_q_case2_variant():
    dom = DomainSpec(n=3, epsilon=1e-3, R=1.0,
                     profile=BoundaryProfile.quadratic(1.0, 0.25))
    grid = build_grid(dom, 256, 32, Stretch.NECK_REFINED)
    field = solve_mode(ModeProblem(domain=dom, grid=grid, k=1))
    out = check_q_maximum(field, variant="case2")
    assert out.passed
    with pytest.raises(ConfigError):
        default_q_params(solve_quad(1e-3).domain, variant="case2")


# ---------------------------------------------------------------------------
# flat gradient boundedness


def test_flat_gradient_drift_and_envelope():
    fields = [solve_flat(e) for e in EPS_SWEEP]
    drift, env = check_flat_gradient(fields)
    assert drift.passed and drift.measured <= 0.1
    assert env.passed and env.measured <= 10.0
    # the exact solution needs barely more than C = 1
    assert env.measured <= 1.5


def test_flat_gradient_rejects_curved():
    fields = [solve_quad(e) for e in EPS_SWEEP]
    with pytest.raises(ConfigError):
        check_flat_gradient(fields)


def test_outcomes_json_and_mask():
    fields = [solve_flat(e) for e in EPS_SWEEP]
    out = check_dn_bound(fields)
    payload = outcomes_to_json([out])
    assert '"d_n_uniform_bound"' in payload
    grid = fields[0].grid
    mask = neck_region_mask(grid)
    assert np.all(np.abs(grid.s_coords[mask]) <= 0.5 * grid.domain.R)
