"""Checkable intermediate facts about computed neck solutions.

Each check measures one quantity the analysis predicts should be bounded,
located, or identically satisfied, and returns a CheckOutcome with the
measured value against a loose documented threshold.  The thresholds are
artifact choices: the theory proves constants exist but never names them,
so every check is a stability or boundedness statement, not a value match.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import ProfileKind, Side
from .modesolver import Field, gradient

__all__ = [
    "CheckOutcome",
    "neck_region_mask",
    "default_q_params",
    "check_dn_bound",
    "check_local_gradient_lemma",
    "check_boundary_identity",
    "check_q_maximum",
    "check_flat_gradient",
]


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    measured: float
    threshold: float
    location: tuple | None = None

    def to_dict(self):
        # plain builtins: numpy scalars are not JSON-serializable
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "threshold": float(self.threshold),
            "location": ([float(c) for c in self.location]
                         if self.location is not None else None),
        }


def outcomes_to_json(outcomes) -> str:
    return json.dumps([o.to_dict() for o in outcomes], sort_keys=True, indent=2)


def neck_region_mask(grid, fraction: float = 0.5,
                     exclude_outer_fraction: float = 0.1) -> np.ndarray:
    """Column mask |s| <= fraction * R, also clipped away from the outer
    Dirichlet layer (outermost 10 percent of the s-range by default)."""
    s = grid.s_coords
    R = grid.domain.R
    return (np.abs(s) <= fraction * R) & (np.abs(s) <= (1.0 - exclude_outer_fraction) * R)


def _require_same_sweep(fields):
    if len(fields) < 3:
        raise ConfigError("sweep checks need at least 3 fields")
    ref = fields[0]
    for f in fields[1:]:
        same = (f.domain.n == ref.domain.n
                and f.domain.R == ref.domain.R
                and f.domain.profile == ref.domain.profile
                and f.k == ref.k
                and f.grid.shape == ref.grid.shape)
        if not same:
            raise ConfigError("sweep fields differ in more than epsilon")


def check_dn_bound(fields: list[Field], threshold: float = 3.0,
                   measure: str = "d_n") -> CheckOutcome:
    """Uniform-in-eps boundedness of the x_n derivative.

    Measures M(eps) = max |d_n| over the neck for each field and passes when
    max M / min M <= threshold.  Maxima below 1e-6 of the gradient scale
    are floored before taking the spread: for flat boundaries d_n vanishes
    identically and the raw maxima are rounding noise.  ``measure='d_r'``
    is the negative control: the radial derivative genuinely blows up, so
    its spread grows like a power of the eps range.
    """
    _require_same_sweep(fields)
    maxima, grad_scale = [], 0.0
    for f in fields:
        g = gradient(f)
        comp = g.d_n if measure == "d_n" else g.d_r
        mask = neck_region_mask(f.grid)
        maxima.append(float(np.abs(comp[mask, :]).max()))
        grad_scale = max(grad_scale, float(g.mode_mag[mask, :].max()))
    floor = 1e-6 * grad_scale
    maxima = [max(m, floor) for m in maxima]
    spread = max(maxima) / min(maxima) if min(maxima) > 0.0 else 1.0
    return CheckOutcome(name=f"{measure}_uniform_bound", passed=spread <= threshold,
                        measured=spread, threshold=threshold)


def check_local_gradient_lemma(field: Field, form: str = "local_sup",
                               threshold: float = 50.0) -> CheckOutcome:
    """Interior gradient bound with rho = sqrt(eps + r^2).

    form='local_sup' measures |grad u| rho / (sup |u| over the s-window of
    half-width 2 rho, + eps + rho^2), the form the Q-function argument
    actually yields.  form='pointwise' measures |grad u| rho / |u|, which
    fails at interior zeros of u (odd solutions): it is kept as a recorded
    diagnostic, not a certified bound.
    """
    grid = field.grid
    eps = field.domain.epsilon
    g = gradient(field)
    s = grid.s_coords
    rho = np.sqrt(eps + s**2)
    mask = neck_region_mask(grid)
    if form == "pointwise":
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = g.mode_mag * rho[:, None] / np.abs(field.values)
        measured = float(np.nanmax(ratio[mask, :]))
        return CheckOutcome(name="local_gradient_pointwise",
                            passed=measured <= threshold,
                            measured=measured, threshold=threshold)
    col_sup = np.abs(field.values).max(axis=1)
    lo = np.searchsorted(s, s - 2.0 * rho, side="left")
    hi = np.searchsorted(s, s + 2.0 * rho, side="right")
    window_sup = np.array([col_sup[a:b].max() for a, b in zip(lo, hi)])
    denom = window_sup + eps + rho**2
    ratio = g.mode_mag * (rho / denom)[:, None]
    measured = float(ratio[mask, :].max())
    return CheckOutcome(name="local_gradient_lemma", passed=measured <= threshold,
                        measured=measured, threshold=threshold)


def check_boundary_identity(field: Field, threshold: float = 0.1) -> CheckOutcome:
    """Boundary identity for the normal derivative of |grad u|^2 (n = 2).

    On a pure quadratic boundary with zero flux, differentiating the
    boundary condition d_2 u = h' d_1 u tangentially and using harmonicity
    gives d_nu(|grad u|^2) = +- (2 / sqrt(1 + h'^2)) h'' (d_1 u)^2 with the
    plus sign on the upper boundary and the minus sign on the lower one
    (the outward normal flips its x_2 orientation while the flux relation
    keeps the same form; the closed-form field around one insulated disk
    confirms the signs).  Both sides are evaluated on each boundary and
    compared relatively at points carrying at least 1 percent of the
    boundary maximum of |grad u|^2; one-sided differencing of the left
    side limits the achievable agreement, hence the loose default
    tolerance.
    """
    dom = field.domain
    if dom.n != 2:
        raise ConfigError("boundary identity check is for n = 2 fields")
    if dom.profile.perturbation is not None:
        raise ConfigError("boundary identity needs a pure quadratic profile")
    grid = field.grid
    s, t = grid.s_coords, grid.t_coords
    grad = gradient(field)
    G = grad.d_r**2 + grad.d_n**2
    gp = np.asarray(dom.gap(s), dtype=float)
    dg = np.asarray(dom.dgap(s), dtype=float)
    h2p = np.asarray(dom.profile.dh2(s), dtype=float)
    G_s = np.gradient(G, s, axis=0)
    G_t = np.gradient(G, t, axis=1)
    worst = 0.0
    worst_loc = None
    for side, row, sign in ((Side.LOWER, 0, -1.0), (Side.UPPER, -1, 1.0)):
        tv = t[0] if row == 0 else t[-1]
        t_r = -(h2p + tv * dg) / gp
        d1G = G_s[:, row] + t_r * G_t[:, row]
        d2G = G_t[:, row] / gp
        nu = dom.outward_normal(side, s)
        lhs = nu[:, 0] * d1G + nu[:, 1] * d2G
        hp = np.asarray(dom.boundary_slope(side, s), dtype=float)
        hpp = np.asarray(dom.boundary_curvature(side, s), dtype=float)
        rhs = sign * 2.0 / np.sqrt(1.0 + hp**2) * hpp * grad.d_r[:, row] ** 2
        strong = G[:, row] >= 0.01 * G[:, row].max()
        # scale floor keeps the flat case (both sides identically zero)
        # from dividing rounding noise by zero
        floor = 1e-6 * max(G[:, row].max() / dom.R, 1e-30)
        mism = np.abs(lhs - rhs) / np.maximum(np.abs(rhs), floor)
        i = int(np.argmax(np.where(strong, mism, -np.inf)))
        if mism[i] > worst:
            worst = float(mism[i])
            worst_loc = (float(s[i]), float(dom.boundary_height(side, s[i])))
    return CheckOutcome(name="boundary_identity", passed=worst <= threshold,
                        measured=worst, threshold=threshold, location=worst_loc)


def default_q_params(domain, variant: str = "case1"):
    """Admissible auxiliary-function weights for the given profile.

    case1: A > 8 max(kappa1, -kappa2) and B > A - n + 2 (A = 1 when the
    bound degenerates to 0 on flat profiles).  case2: A1 > 8 kappa2/kappa,
    A2 > 4 kappa1, B > A1 + A2 - n + 2.
    """
    prof = domain.profile
    if variant == "case1":
        bound = 8.0 * max(prof.kappa1, -prof.kappa2)
        A = 1.25 * bound if bound > 0.0 else 1.0
        return {"A": A, "B": A - domain.n + 3.0}
    if variant == "case2":
        if prof.kappa <= 0.0 or prof.kappa2 < 0.0:
            raise ConfigError("case-2 weights need kappa2 >= 0 and kappa > 0")
        b1 = 8.0 * prof.kappa2 / prof.kappa
        A1 = 1.25 * b1 if b1 > 0.0 else 1.0
        A2 = 1.25 * 4.0 * prof.kappa1
        return {"A1": A1, "A2": A2, "B": A1 + A2 - domain.n + 3.0}
    raise ConfigError(f"unknown q-function variant {variant!r}")


def check_q_maximum(field: Field, A: float | None = None, B: float | None = None,
                    variant: str = "case1", A2: float | None = None,
                    column_slack: int = 1, min_s: float = 0.0) -> CheckOutcome:
    """Location of the maximum of the auxiliary function Q.

    case1: Q = (eps + r^2 - A x_n^2) |grad u|^2 + B u^2, admissible for
    A > 8 max(kappa1, -kappa2), B > A - n + 2.  case2 replaces the x_n^2
    block by weighted squared distances to the two boundary graphs with
    A1 > 8 kappa2/kappa, A2 > 4 kappa1.  The argument driving the local
    gradient bound forces the maximum to the outer boundary; the check
    passes when the discrete argmax sits in the outer two grid columns
    (either end for n = 2).  ``min_s`` excludes columns below a radius,
    used for fields of the rotated anisotropic reduction whose axis
    singularity is an artifact of the single-eigenvalue potential.
    """
    dom = field.domain
    prof = dom.profile
    defaults = default_q_params(dom, variant)
    if variant == "case1":
        A = defaults["A"] if A is None else A
        B = defaults["B"] if B is None else B
        bound = 8.0 * max(prof.kappa1, -prof.kappa2)
        if not (A > bound and B > A - dom.n + 2.0):
            raise ConfigError(
                f"(A, B) = ({A}, {B}) violate A > {bound}, B > A - n + 2")
    else:
        A = defaults["A1"] if A is None else A
        A2 = defaults["A2"] if A2 is None else A2
        B = defaults["B"] if B is None else B
        if not (A > 8.0 * prof.kappa2 / prof.kappa and A2 > 4.0 * prof.kappa1
                and B > A + A2 - dom.n + 2.0):
            raise ConfigError("case-2 weights violate the required inequalities")

    grid = field.grid
    s = grid.s_coords
    X = grid.x_n_grid()
    S = np.broadcast_to(s[:, None], X.shape)
    grad = gradient(field)
    G = grad.mode_mag**2
    if variant == "case1":
        quad = dom.epsilon + S**2 - A * X**2
    else:
        P = X - 0.5 * dom.epsilon - prof.h1(S)
        Qd = X + 0.5 * dom.epsilon - prof.h2(S)
        quad = dom.epsilon + S**2 - A * P**2 - A2 * Qd**2
    Q = quad * G + B * field.values**2
    if min_s > 0.0:
        Q = np.where(np.abs(S) >= min_s, Q, -np.inf)
    i, j = np.unravel_index(int(np.argmax(Q)), Q.shape)
    ns = grid.ns
    distance = ns - i if dom.n != 2 else min(i, ns - i)
    return CheckOutcome(
        name="q_maximum_on_outer_boundary",
        passed=distance <= column_slack,
        measured=float(distance),
        threshold=float(column_slack),
        location=(float(s[i]), float(X[i, j])),
    )


def check_flat_gradient(fields: list[Field], drift_threshold: float = 0.1,
                        envelope_constant: float = 10.0):
    """Flat-boundary behavior across an eps sweep: the gradient maximum may
    drift by at most 10 percent, and a single constant C <= 10 must close
    both envelope bounds |u| <= C sqrt(eps + r^2 + x_n^2) and
    |u| >= (1/C) sqrt(r^2 + x_n^2) (the latter on the neck-scale band
    |s| >= sqrt(eps), middle half of the gap, where it is meaningful).

    Returns (drift outcome, envelope outcome).
    """
    _require_same_sweep(fields)
    if fields[0].domain.profile.kind is not ProfileKind.FLAT:
        raise ConfigError("flat gradient check needs a flat profile")
    maxima, consts = [], []
    for f in fields:
        eps = f.domain.epsilon
        grid = f.grid
        g = gradient(f)
        mask2 = np.broadcast_to(neck_region_mask(grid)[:, None], f.values.shape)
        maxima.append(float(g.mode_mag[mask2].max()))
        s, t = grid.s_coords, grid.t_coords
        X = grid.x_n_grid()
        S = np.broadcast_to(s[:, None], X.shape)
        U = np.abs(f.values)
        c_up = float((U / np.sqrt(eps + S**2 + X**2))[mask2].max())
        band = (mask2 & (np.abs(s)[:, None] >= np.sqrt(eps))
                & ((t >= 0.25) & (t <= 0.75))[None, :])
        c_lo = float((U[band] / np.sqrt(S[band] ** 2 + X[band] ** 2)).min())
        consts.append(max(c_up, 1.0 / c_lo))
    drift = max(maxima) / min(maxima) - 1.0
    drift_out = CheckOutcome(name="flat_gradient_drift",
                             passed=drift <= drift_threshold,
                             measured=drift, threshold=drift_threshold)
    c_all = max(consts)
    env_out = CheckOutcome(name="flat_envelope_constant",
                           passed=c_all <= envelope_constant,
                           measured=c_all, threshold=envelope_constant)
    return drift_out, env_out
