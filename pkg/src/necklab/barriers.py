"""Closed-form comparison functions for the neck problem.

The upper barriers combine the leading growth term (r^2 + 2 x_n^2)^(a/2)
with a correction r^beta (r^2 + b x_n^2)^(xi/2); the lower barrier is
r^beta1 (r^2 + 4 x_n^2)^(beta2/2).  For each one this module evaluates the
value, the exact image under the mode operator

    L u = u_rr + (n-2)/r u_r - k(k+n-3)/r^2 u + u_nn,

and the exact normal derivative on the neck boundaries, all analytically.
``certify_sign`` then samples the required sign condition on a
deterministic grid and reports violations instead of assuming them away.

Parameter feasibility: the printed strict constraint set on (xi, beta, b)
is degenerate.  With beta = alpha_k - xi and b = 2 + 2 beta / xi the
leading bracket of L phi_2 vanishes identically (the corner identity),
and it strictly increases when beta or b move past the corner.  Default
parameters therefore sit at the corner, where every surviving term of
L phi is nonpositive on its own; ``corner_delta > 0`` probes the strict
regime and exposes the sign flip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import DomainSpec, ProfileKind, Side, alpha_k

__all__ = [
    "BarrierParams",
    "TildeParams",
    "SignReport",
    "feasibility_margin",
    "phi_case1",
    "L_phi_case1",
    "dn_phi_case1",
    "phi_case2",
    "L_phi_case2",
    "dn_phi_case2",
    "tilde_phi",
    "L_tilde_phi",
    "phi_2d",
    "grad_phi_2d",
    "tilde_phi_2d",
    "grad_tilde_phi_2d",
    "dn_barrier_2d",
    "certify_sign",
    "QUANTITIES",
]


def feasibility_margin(n: int, k: int, xi: float, beta: float, b: float) -> float:
    """Leading bracket of L phi_2:

    xi^2 + (n-3+b+2 beta) xi - k(k+n-3) + (n-3+beta) beta.

    Negative values make the bracket term of the upper barrier strictly
    negative; zero is the corner where the printed constraints degenerate.
    """
    return xi * xi + (n - 3 + b + 2 * beta) * xi - k * (k + n - 3) + (n - 3 + beta) * beta


@dataclass(frozen=True)
class BarrierParams:
    """Parameters (alpha_k, xi, beta, b) for the upper barriers.

    ``b1``/``b2`` are only used by the case-2 variant (both curvatures
    nonnegative).  The feasibility margin is recorded at construction.
    """

    n: int
    k: int
    alpha_k: float
    xi: float
    beta: float
    b: float
    b1: float | None = None
    b2: float | None = None
    corner_delta: float = 0.0
    feasibility: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.n < 3 or self.k < 1:
            raise ValueError("upper barriers need n >= 3 and k >= 1")
        if min(self.xi, self.beta, self.b) <= 0.0:
            raise ValueError("xi, beta and b must be positive")
        if self.corner_delta < 0.0:
            raise ValueError("corner_delta must be >= 0")
        object.__setattr__(
            self, "feasibility",
            feasibility_margin(self.n, self.k, self.xi, self.beta, self.b))

    @classmethod
    def corner(cls, n: int, k: int, xi: float = 0.1, corner_delta: float = 0.0):
        """Corner parameterization beta = alpha_k - xi, b = 2 + 2 beta/xi,
        shifted outward by corner_delta to probe the strict regime."""
        a = alpha_k(n, k)
        beta = a - xi + corner_delta
        if beta <= 0.0:
            raise ValueError(f"xi = {xi} leaves no room for beta at n={n}, k={k}")
        return cls(n=n, k=k, alpha_k=a, xi=xi, beta=beta,
                   b=2.0 + 2.0 * beta / xi + corner_delta,
                   corner_delta=corner_delta)

    def with_case2(self, domain: DomainSpec, margin: float = 1.25):
        """Attach case-2 weights b1 > 2(beta+xi) kappa1/(xi kappa) and
        b2 > 2(beta+xi) kappa2/(xi kappa) (b2 > 0 suffices if kappa2 = 0)."""
        prof = domain.profile
        if prof.kappa1 <= 0.0 or prof.kappa2 < 0.0:
            raise ValueError(
                "case-2 barriers need kappa1 > 0 and kappa2 >= 0; "
                "use the case-1 barrier for kappa2 < 0")
        kappa = prof.kappa
        b1 = margin * 2.0 * (self.beta + self.xi) * prof.kappa1 / (self.xi * kappa)
        bound2 = 2.0 * (self.beta + self.xi) * prof.kappa2 / (self.xi * kappa)
        b2 = margin * bound2 if bound2 > 0.0 else 1.0
        return BarrierParams(n=self.n, k=self.k, alpha_k=self.alpha_k,
                             xi=self.xi, beta=self.beta, b=self.b,
                             b1=b1, b2=b2, corner_delta=self.corner_delta)

    def to_dict(self):
        d = {"n": self.n, "k": self.k, "alpha_k": self.alpha_k, "xi": self.xi,
             "beta": self.beta, "b": self.b, "corner_delta": self.corner_delta,
             "feasibility": self.feasibility}
        if self.b1 is not None:
            d["b1"] = self.b1
            d["b2"] = self.b2
        return d


@dataclass(frozen=True)
class TildeParams:
    """Split beta1 + beta2 = alpha_k with beta2 > beta1 > 0 for the lower
    barrier r^beta1 (r^2 + 4 x_n^2)^(beta2/2)."""

    n: int
    k: int
    beta1: float
    beta2: float

    def __post_init__(self):
        a = alpha_k(self.n, self.k)
        if abs(self.beta1 + self.beta2 - a) > 1e-12:
            raise ValueError(
                f"beta1 + beta2 = {self.beta1 + self.beta2} must equal "
                f"alpha_k = {a}")
        if not self.beta2 > self.beta1 > 0.0:
            raise ValueError("need beta2 > beta1 > 0")

    @classmethod
    def split(cls, n: int, k: int, beta1: float = 0.1):
        a = alpha_k(n, k)
        return cls(n=n, k=k, beta1=beta1, beta2=a - beta1)


# ---------------------------------------------------------------------------
# case-1 barrier: phi = (r^2 + 2 x_n^2)^(a/2) + r^beta (r^2 + b x_n^2)^(xi/2)


def _check_positive_r(r):
    if np.any(np.asarray(r) <= 0.0):
        raise ValueError("barrier images are singular on the axis; need r > 0")


def _phi1(a, r, xn):
    return (r**2 + 2.0 * xn**2) ** (a / 2.0)


def _L_phi1(n, k, a, r, xn):
    # bracket a^2 + (n-1) a - k(k+n-3) vanishes by the definition of a
    w = r**2 + 2.0 * xn**2
    ck = k * (k + n - 3.0)
    return (2.0 * a * (a - 2.0) * w ** (a / 2.0 - 2.0) * xn**2
            - 2.0 * ck / r**2 * w ** (a / 2.0 - 1.0) * xn**2)


def _phi2(beta, xi, b, r, xn):
    return r**beta * (r**2 + b * xn**2) ** (xi / 2.0)


def _L_phi2(n, k, beta, xi, b, f, r, xn):
    # exact image; the last term carries r^(beta-2) x_n^2
    w = r**2 + b * xn**2
    ck = k * (k + n - 3.0)
    return (f * r**beta * w ** (xi / 2.0 - 1.0)
            + b * (b - 1.0) * xi * (xi - 2.0) * r**beta * w ** (xi / 2.0 - 2.0) * xn**2
            + ((n - 3.0 + beta) * beta - ck) * b * r ** (beta - 2.0)
            * w ** (xi / 2.0 - 1.0) * xn**2)


def phi_case1(params: BarrierParams, r, x_n):
    """Upper barrier for kappa1 > 0 > kappa2."""
    _check_positive_r(r)
    return (_phi1(params.alpha_k, r, x_n)
            + _phi2(params.beta, params.xi, params.b, r, x_n))


def L_phi_case1(params: BarrierParams, r, x_n):
    """Exact operator image of the case-1 barrier (no truncation)."""
    _check_positive_r(r)
    p = params
    return (_L_phi1(p.n, p.k, p.alpha_k, r, x_n)
            + _L_phi2(p.n, p.k, p.beta, p.xi, p.b, p.feasibility, r, x_n))


def _grad_phi_case1(params: BarrierParams, r, xn):
    p = params
    w1 = r**2 + 2.0 * xn**2
    w2 = r**2 + p.b * xn**2
    dr = (p.alpha_k * r * w1 ** (p.alpha_k / 2.0 - 1.0)
          + p.beta * r ** (p.beta - 1.0) * w2 ** (p.xi / 2.0)
          + p.xi * r ** (p.beta + 1.0) * w2 ** (p.xi / 2.0 - 1.0))
    dn = (2.0 * p.alpha_k * xn * w1 ** (p.alpha_k / 2.0 - 1.0)
          + p.b * p.xi * r**p.beta * xn * w2 ** (p.xi / 2.0 - 1.0))
    return dr, dn


def dn_phi_case1(params: BarrierParams, domain: DomainSpec, side: Side, r):
    """Exact normal derivative of the case-1 barrier on a neck boundary."""
    _check_positive_r(r)
    xn = domain.boundary_height(side, r)
    dr, dn = _grad_phi_case1(params, np.asarray(r, dtype=float), xn)
    nu = domain.outward_normal(side, r)
    return nu[..., 0] * dr + nu[..., 1] * dn


# ---------------------------------------------------------------------------
# case-2 barrier (kappa1 > 0, kappa2 >= 0): the x_n^2 core is replaced by
# squared distances to the two boundary graphs


def _case2_core(params: BarrierParams, domain: DomainSpec, r, xn):
    if params.b1 is None or params.b2 is None:
        raise ValueError("case-2 weights b1, b2 are not set; "
                         "build them with BarrierParams.with_case2")
    prof = domain.profile
    if prof.kind is not ProfileKind.QUADRATIC or prof.kappa1 <= 0.0 \
            or prof.kappa2 < 0.0:
        raise ValueError("case-2 barrier needs a quadratic profile with "
                         "kappa1 > 0 and kappa2 >= 0; use case 1 otherwise")
    P = xn - 0.5 * domain.epsilon - prof.h1(r)
    Q = xn + 0.5 * domain.epsilon - prof.h2(r)
    return P, Q


def phi_case2(params: BarrierParams, domain: DomainSpec, r, x_n):
    """Upper barrier for kappa1 > 0, kappa2 >= 0."""
    _check_positive_r(r)
    p = params
    P, Q = _case2_core(p, domain, r, x_n)
    W = r**2 + p.b1 * P**2 + p.b2 * Q**2
    return _phi1(p.alpha_k, r, x_n) + r**p.beta * W ** (p.xi / 2.0)


def L_phi_case2(params: BarrierParams, domain: DomainSpec, r, x_n):
    """Exact operator image of the case-2 barrier: the composite is
    differentiated symbolically using the closed-form h1, h2."""
    _check_positive_r(r)
    p = params
    prof = domain.profile
    P, Q = _case2_core(p, domain, r, x_n)
    r = np.asarray(r, dtype=float)
    h1p, h2p = prof.dh1(r), prof.dh2(r)
    h1pp, h2pp = prof.d2h1(r), prof.d2h2(r)
    ck = p.k * (p.k + p.n - 3.0)

    W = r**2 + p.b1 * P**2 + p.b2 * Q**2
    W_r = 2.0 * r - 2.0 * p.b1 * P * h1p - 2.0 * p.b2 * Q * h2p
    W_n = 2.0 * p.b1 * P + 2.0 * p.b2 * Q
    W_rr = (2.0 + 2.0 * p.b1 * (h1p**2 - P * h1pp)
            + 2.0 * p.b2 * (h2p**2 - Q * h2pp))
    W_nn = 2.0 * p.b1 + 2.0 * p.b2

    xim = p.xi / 2.0
    val_r = p.beta * r ** (p.beta - 1.0) * W**xim \
        + xim * r**p.beta * W ** (xim - 1.0) * W_r
    val_rr = (p.beta * (p.beta - 1.0) * r ** (p.beta - 2.0) * W**xim
              + 2.0 * p.beta * xim * r ** (p.beta - 1.0) * W ** (xim - 1.0) * W_r
              + xim * (xim - 1.0) * r**p.beta * W ** (xim - 2.0) * W_r**2
              + xim * r**p.beta * W ** (xim - 1.0) * W_rr)
    val_nn = (xim * (xim - 1.0) * r**p.beta * W ** (xim - 2.0) * W_n**2
              + xim * r**p.beta * W ** (xim - 1.0) * W_nn)
    val = r**p.beta * W**xim
    L2 = val_rr + (p.n - 2.0) / r * val_r - ck / r**2 * val + val_nn
    return _L_phi1(p.n, p.k, p.alpha_k, r, x_n) + L2


def dn_phi_case2(params: BarrierParams, domain: DomainSpec, side: Side, r):
    """Exact normal derivative of the case-2 barrier on a neck boundary.

    On the upper boundary the b1 distance term vanishes, on the lower one
    the b2 term does."""
    _check_positive_r(r)
    p = params
    r = np.asarray(r, dtype=float)
    xn = domain.boundary_height(side, r)
    P, Q = _case2_core(p, domain, r, xn)
    prof = domain.profile
    h1p, h2p = prof.dh1(r), prof.dh2(r)
    W = r**2 + p.b1 * P**2 + p.b2 * Q**2
    W_r = 2.0 * r - 2.0 * p.b1 * P * h1p - 2.0 * p.b2 * Q * h2p
    W_n = 2.0 * p.b1 * P + 2.0 * p.b2 * Q
    xim = p.xi / 2.0
    dr2 = p.beta * r ** (p.beta - 1.0) * W**xim \
        + xim * r**p.beta * W ** (xim - 1.0) * W_r
    dn2 = xim * r**p.beta * W ** (xim - 1.0) * W_n
    w1 = r**2 + 2.0 * xn**2
    dr1 = p.alpha_k * r * w1 ** (p.alpha_k / 2.0 - 1.0)
    dn1 = 2.0 * p.alpha_k * xn * w1 ** (p.alpha_k / 2.0 - 1.0)
    nu = domain.outward_normal(side, r)
    return nu[..., 0] * (dr1 + dr2) + nu[..., 1] * (dn1 + dn2)


# ---------------------------------------------------------------------------
# lower barrier: tilde = r^beta1 (r^2 + 4 x_n^2)^(beta2/2)


def tilde_phi(params: TildeParams, r, x_n):
    return r**params.beta1 * (r**2 + 4.0 * x_n**2) ** (params.beta2 / 2.0)


def L_tilde_phi(params: TildeParams, r, x_n):
    """Exact operator image of the lower barrier, all three terms.

    Under beta1 + beta2 = alpha_k the leading bracket simplifies to
    2 (beta2 - beta1) > 0, so the image is positive on the x_n = 0 line;
    the sign condition for a subsolution genuinely fails there and the
    certification reports it.
    """
    _check_positive_r(r)
    p = params
    ck = p.k * (p.k + p.n - 3.0)
    bracket = (p.beta2**2 + (p.n + 1.0 + 2.0 * p.beta1) * p.beta2 - ck
               + (p.n - 3.0 + p.beta1) * p.beta1)
    w = r**2 + 4.0 * x_n**2
    return (bracket * r**p.beta1 * w ** (p.beta2 / 2.0 - 1.0)
            + 12.0 * p.beta2 * (p.beta2 - 2.0) * r**p.beta1
            * w ** (p.beta2 / 2.0 - 2.0) * x_n**2
            + 4.0 * ((p.n - 3.0 + p.beta1) * p.beta1 - ck)
            * r ** (p.beta1 - 2.0) * w ** (p.beta2 / 2.0 - 1.0) * x_n**2)


def dn_tilde_phi(params: TildeParams, domain: DomainSpec, side: Side, r):
    p = params
    r = np.asarray(r, dtype=float)
    xn = domain.boundary_height(side, r)
    w = r**2 + 4.0 * xn**2
    dr = (p.beta1 * r ** (p.beta1 - 1.0) * w ** (p.beta2 / 2.0)
          + p.beta2 * r ** (p.beta1 + 1.0) * w ** (p.beta2 / 2.0 - 1.0))
    dn = 4.0 * p.beta2 * r**p.beta1 * xn * w ** (p.beta2 / 2.0 - 1.0)
    nu = domain.outward_normal(side, r)
    return nu[..., 0] * dr + nu[..., 1] * dn


# ---------------------------------------------------------------------------
# two-dimensional barriers (n = 2): a dipole pair and a log pair with poles
# at (0, +-sqrt(sigma)) just outside the strip, sigma = eps / (2 kappa1)


def phi_2d(eps: float, kappa1: float, x1, x2):
    """Harmonic upper barrier sqrt(sigma) x1 / D1 + sqrt(sigma) x1 / D2."""
    sig = eps / (2.0 * kappa1)
    rs = np.sqrt(sig)
    d1 = x1**2 + (x2 + rs) ** 2
    d2 = x1**2 + (x2 - rs) ** 2
    return rs * x1 / d1 + rs * x1 / d2


def grad_phi_2d(eps: float, kappa1: float, x1, x2):
    sig = eps / (2.0 * kappa1)
    rs = np.sqrt(sig)
    d1 = x1**2 + (x2 + rs) ** 2
    d2 = x1**2 + (x2 - rs) ** 2
    g1 = rs * (((x2 + rs) ** 2 - x1**2) / d1**2 + ((x2 - rs) ** 2 - x1**2) / d2**2)
    g2 = rs * (-2.0 * x1 * (x2 + rs) / d1**2 - 2.0 * x1 * (x2 - rs) / d2**2)
    return g1, g2


def tilde_phi_2d(eps: float, kappa1: float, x1, x2):
    """Harmonic lower barrier ln D1 + ln D2 - 2 ln sigma; zero at the origin."""
    sig = eps / (2.0 * kappa1)
    rs = np.sqrt(sig)
    d1 = x1**2 + (x2 + rs) ** 2
    d2 = x1**2 + (x2 - rs) ** 2
    return np.log(d1) + np.log(d2) - 2.0 * np.log(sig)


def grad_tilde_phi_2d(eps: float, kappa1: float, x1, x2):
    sig = eps / (2.0 * kappa1)
    rs = np.sqrt(sig)
    d1 = x1**2 + (x2 + rs) ** 2
    d2 = x1**2 + (x2 - rs) ** 2
    g1 = 2.0 * x1 / d1 + 2.0 * x1 / d2
    g2 = 2.0 * (x2 + rs) / d1 + 2.0 * (x2 - rs) / d2
    return g1, g2


def dn_barrier_2d(domain: DomainSpec, side: Side, x1, which: str = "upper"):
    """Normal derivative of a 2d barrier on a boundary of a quadratic neck.

    For a symmetric neck (kappa1 = -kappa2) the barriers are used as
    printed with sigma = eps/(2 kappa1).  For general quadratic profiles
    the evaluation point is shifted to the midline, y2 = x2 - (h1+h2)/2,
    and sigma = eps/kappa; the chain rule accounts for the shift."""
    if domain.n != 2 or domain.profile.kind is not ProfileKind.QUADRATIC:
        raise ValueError("2d barriers need an n = 2 quadratic profile")
    prof = domain.profile
    x1 = np.asarray(x1, dtype=float)
    x2 = domain.boundary_height(side, x1)
    symmetric = abs(prof.kappa1 + prof.kappa2) <= 1e-14 * abs(prof.kappa1)
    if symmetric:
        kap_eff, y2, mslope = prof.kappa1, x2, np.zeros_like(x1)
    else:
        # midline shift; sigma = eps/kappa corresponds to kappa1 -> kappa/2
        kap_eff = 0.5 * prof.kappa
        y2 = x2 - 0.5 * (prof.h1(x1) + prof.h2(x1))
        mslope = 0.5 * (prof.dh1(x1) + prof.dh2(x1))
    grad = grad_phi_2d if which == "upper" else grad_tilde_phi_2d
    gy1, gy2 = grad(domain.epsilon, kap_eff, x1, y2)
    g1 = gy1 - mslope * gy2
    g2 = gy2
    nu = domain.outward_normal(side, x1)
    return nu[..., 0] * g1 + nu[..., 1] * g2


# ---------------------------------------------------------------------------
# sign certification


QUANTITIES = (
    "L_phi_le_0",
    "dnu_phi_ge_0_upper",
    "dnu_phi_ge_0_lower",
    "L_tilde_le_0",
    "dnu_2d",
)


@dataclass(frozen=True)
class SignReport:
    """Outcome of sampling a signed quantity over a region."""

    quantity: str
    n_points: int
    n_violations: int
    worst_margin: float
    worst_location: tuple[float, float]
    params: dict | None = None

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "params": self.params,
            "n_points": self.n_points,
            "n_violations": self.n_violations,
            "worst_margin": self.worst_margin,
            "worst_location": list(self.worst_location),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _interior_samples(domain: DomainSpec, nr: int, nx: int):
    """Deterministic tensor sampling of the open strip, axis excluded."""
    r = domain.R * (np.arange(1, nr + 1) / nr)
    lower = domain.boundary_height(Side.LOWER, r)
    g = domain.gap(r)
    frac = (np.arange(1, nx + 1) / (nx + 1))[None, :]
    R2 = np.broadcast_to(r[:, None], (nr, nx))
    X2 = lower[:, None] + frac * g[:, None]
    return R2, X2


def _report(quantity, values, R2, X2, sense: str, params) -> SignReport:
    """Count sign violations with a scale-relative slack of 1e-12, so the
    exactly-zero corner margins do not flip on rounding noise."""
    vals = np.asarray(values, dtype=float)
    scale = max(1.0, float(np.max(np.abs(vals))))
    tol = 1e-12 * scale
    signed = vals if sense == "le" else -vals  # violation when signed > 0
    bad = signed > tol
    worst_flat = int(np.argmax(signed))
    loc = (float(np.asarray(R2).ravel()[worst_flat]),
           float(np.asarray(X2).ravel()[worst_flat]))
    worst = float(vals.ravel()[worst_flat])
    return SignReport(
        quantity=quantity, n_points=int(vals.size),
        n_violations=int(np.count_nonzero(bad)),
        worst_margin=worst, worst_location=loc,
        params=params.to_dict() if isinstance(params, BarrierParams) else None,
    )


def certify_sign(quantity: str, domain: DomainSpec,
                 params: BarrierParams | None = None,
                 tilde: TildeParams | None = None,
                 interior_shape: tuple[int, int] = (512, 64),
                 boundary_points: int = 2048) -> SignReport:
    """Sample one of the required sign conditions and report violations.

    Violations are data, not errors: the report carries their count, the
    most adverse margin, and where it occurred.  Sampling is deterministic
    so reports reproduce bit for bit.
    """
    if quantity not in QUANTITIES:
        raise ConfigError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")

    if quantity == "L_phi_le_0":
        if params is None:
            raise ConfigError("L_phi_le_0 needs barrier params")
        R2, X2 = _interior_samples(domain, *interior_shape)
        if params.b1 is not None:
            vals = L_phi_case2(params, domain, R2, X2)
        else:
            vals = L_phi_case1(params, R2, X2)
        return _report(quantity, vals, R2, X2, "le", params)

    if quantity == "L_tilde_le_0":
        if tilde is None:
            raise ConfigError("L_tilde_le_0 needs tilde params")
        R2, X2 = _interior_samples(domain, *interior_shape)
        vals = L_tilde_phi(tilde, R2, X2)
        return _report(quantity, vals, R2, X2, "le", None)

    if quantity in ("dnu_phi_ge_0_upper", "dnu_phi_ge_0_lower"):
        if params is None:
            raise ConfigError(f"{quantity} needs barrier params")
        side = Side.UPPER if quantity.endswith("upper") else Side.LOWER
        r = domain.R * (np.arange(1, boundary_points + 1) / boundary_points)
        if params.b1 is not None:
            vals = dn_phi_case2(params, domain, side, r)
        else:
            vals = dn_phi_case1(params, domain, side, r)
        return _report(quantity, vals, r, domain.boundary_height(side, r),
                       "ge", params)

    # dnu_2d: joint certificate for the two-dimensional pair on the half
    # strip 0 < x1 <= sqrt(eps): the upper barrier needs d_nu phi >= 0 and
    # the lower one d_nu tilde <= 0 on both boundaries
    d = min(np.sqrt(domain.epsilon), domain.R)
    x1 = d * (np.arange(1, boundary_points + 1) / boundary_points)
    margins, locs_r, locs_x = [], [], []
    for side in (Side.UPPER, Side.LOWER):
        up = dn_barrier_2d(domain, side, x1, which="upper")
        lo = -dn_barrier_2d(domain, side, x1, which="lower")
        margins.extend([up, lo])
        xb = domain.boundary_height(side, x1)
        locs_r.extend([x1, x1])
        locs_x.extend([xb, xb])
    vals = np.concatenate([np.asarray(m) for m in margins])
    R2 = np.concatenate(locs_r)
    X2 = np.concatenate(locs_x)
    return _report(quantity, vals, R2, X2, "ge", None)
