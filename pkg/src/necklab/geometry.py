"""Narrow-neck geometry and closed-form growth exponents.

The neck is the region trapped between an upper surface x_n = eps/2 + h1(r)
and a lower surface x_n = -eps/2 + h2(r), with the two surfaces nearly
touching at r = 0.  Three boundary profiles are supported: quadratic
(h_i = kappa_i r^2, optionally with a Hoelder bump c |r|^(2+gamma) on the
upper side), anisotropic (different curvatures per axis, radialized to
their mean for the strip solver), and flat (h1 = h2 = 0).

All profile evaluators accept scalars or numpy arrays and return exact
closed-form values; derivatives are analytic, never finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ProfileKind",
    "Side",
    "Perturbation",
    "BoundaryProfile",
    "DomainSpec",
    "alpha_exponent",
    "alpha_k",
    "blowup_exponent",
    "weinkove_gamma",
]


class ProfileKind(Enum):
    QUADRATIC = "quadratic"
    ANISOTROPIC = "anisotropic"
    FLAT = "flat"


class Side(Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class Perturbation:
    """Bump c * |r|^(2+gamma) added to the upper profile, gamma in (0, 1)."""

    amplitude: float
    exponent: float

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(
                f"perturbation exponent must lie in (0, 1), got {self.exponent}"
            )

    def value(self, r):
        return self.amplitude * np.abs(r) ** (2.0 + self.exponent)

    def slope(self, r):
        g = self.exponent
        return self.amplitude * (2.0 + g) * np.abs(r) ** (1.0 + g) * np.sign(r)

    def curvature(self, r):
        # continuous at r = 0 for gamma > 0 even though h''' is unbounded there
        g = self.exponent
        return self.amplitude * (2.0 + g) * (1.0 + g) * np.abs(r) ** g


@dataclass(frozen=True)
class BoundaryProfile:
    """Pair of boundary graphs h1 (upper) and h2 (lower).

    For ANISOTROPIC profiles the per-axis curvatures ``mus`` are radialized:
    the strip solver sees kappa1 = +mean(mus)/2 and kappa2 = -mean(mus)/2, so
    the gap grows like mean(mus) * r^2; the angular content of the anisotropy
    is carried separately by the spectral module.
    """

    kind: ProfileKind
    kappa1: float = 0.0
    kappa2: float = 0.0
    mus: tuple[float, ...] | None = None
    perturbation: Perturbation | None = None

    def __post_init__(self):
        if self.kind is ProfileKind.QUADRATIC:
            if not self.kappa1 - self.kappa2 > 0.0:
                raise ValueError(
                    f"quadratic profile needs kappa1 - kappa2 > 0, got "
                    f"{self.kappa1} - {self.kappa2}"
                )
        elif self.kind is ProfileKind.ANISOTROPIC:
            if not self.mus or any(mu <= 0.0 for mu in self.mus):
                raise ValueError("anisotropic profile needs all mus > 0")
            kappa_eff = sum(self.mus) / len(self.mus)
            object.__setattr__(self, "kappa1", 0.5 * kappa_eff)
            object.__setattr__(self, "kappa2", -0.5 * kappa_eff)
        elif self.kind is ProfileKind.FLAT:
            if self.kappa1 != 0.0 or self.kappa2 != 0.0:
                raise ValueError("flat profile must have kappa1 = kappa2 = 0")
            if self.perturbation is not None:
                raise ValueError("flat profile does not take a perturbation")

    @classmethod
    def quadratic(cls, kappa1, kappa2, perturbation=None):
        return cls(ProfileKind.QUADRATIC, kappa1, kappa2, perturbation=perturbation)

    @classmethod
    def anisotropic(cls, mus):
        return cls(ProfileKind.ANISOTROPIC, mus=tuple(float(m) for m in mus))

    @classmethod
    def flat(cls):
        return cls(ProfileKind.FLAT)

    @property
    def kappa(self) -> float:
        """Curvature of the gap: kappa1 - kappa2 (0 for flat)."""
        return self.kappa1 - self.kappa2

    # -- closed-form evaluators (valid for signed r, used by the 2d solver) --

    def h1(self, r):
        v = self.kappa1 * np.square(r)
        if self.perturbation is not None:
            v = v + self.perturbation.value(r)
        return v

    def h2(self, r):
        return self.kappa2 * np.square(r)

    def dh1(self, r):
        v = 2.0 * self.kappa1 * np.asarray(r, dtype=float)
        if self.perturbation is not None:
            v = v + self.perturbation.slope(r)
        return v

    def dh2(self, r):
        return 2.0 * self.kappa2 * np.asarray(r, dtype=float)

    def d2h1(self, r):
        v = 2.0 * self.kappa1 * np.ones_like(np.asarray(r, dtype=float))
        if self.perturbation is not None:
            v = v + self.perturbation.curvature(r)
        return v

    def d2h2(self, r):
        return 2.0 * self.kappa2 * np.ones_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class DomainSpec:
    """Neck of gap eps and radius R in ambient dimension n."""

    n: int
    epsilon: float
    R: float
    profile: BoundaryProfile

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"ambient dimension must be >= 2, got {self.n}")
        if self.epsilon <= 0.0:
            raise ValueError(f"gap must be positive, got {self.epsilon}")
        if self.R <= 0.0:
            raise ValueError(f"neck radius must be positive, got {self.R}")
        # neck positivity, checked on a fine sample (closed-form critical
        # points are awkward once a perturbation is present)
        r = np.linspace(0.0, self.R, 1025)
        if np.min(self.epsilon + self.profile.h1(r) - self.profile.h2(r)) <= 0.0:
            raise ValueError("profile closes the neck: eps + h1 - h2 <= 0 somewhere")

    def _check_range(self, r):
        r = np.asarray(r, dtype=float)
        lo = -self.R if self.n == 2 else 0.0
        if np.any(r < lo) or np.any(r > self.R):
            raise ValueError(f"radius out of range [{lo}, {self.R}]")

    def gap(self, r):
        """eps + h1(r) - h2(r), the local neck width."""
        self._check_range(r)
        g = self.epsilon + self.profile.h1(r) - self.profile.h2(r)
        if np.any(np.asarray(g) <= 0.0):
            raise ValueError("nonpositive gap: malformed profile")
        return g

    def dgap(self, r):
        return self.profile.dh1(r) - self.profile.dh2(r)

    def d2gap(self, r):
        return self.profile.d2h1(r) - self.profile.d2h2(r)

    def boundary_height(self, side: Side, r):
        self._check_range(r)
        if side is Side.UPPER:
            return 0.5 * self.epsilon + self.profile.h1(r)
        return -0.5 * self.epsilon + self.profile.h2(r)

    def boundary_slope(self, side: Side, r):
        self._check_range(r)
        return self.profile.dh1(r) if side is Side.UPPER else self.profile.dh2(r)

    def boundary_curvature(self, side: Side, r):
        self._check_range(r)
        return self.profile.d2h1(r) if side is Side.UPPER else self.profile.d2h2(r)

    def outward_normal(self, side: Side, r):
        """Unit outward normal in (r, x_n) coordinates; x_n component is
        positive on the upper boundary and negative on the lower one."""
        hp = self.boundary_slope(side, r)
        norm = np.sqrt(1.0 + np.square(hp))
        if side is Side.UPPER:
            return np.stack([-hp / norm, 1.0 / norm], axis=-1)
        return np.stack([hp / norm, -1.0 / norm], axis=-1)


def alpha_exponent(n: int) -> float:
    """Growth exponent alpha(n) = [-(n-1) + sqrt((n-1)^2 + 4(n-2))]/2."""
    if n < 2:
        raise ValueError(f"alpha is defined for n >= 2, got {n}")
    return 0.5 * (-(n - 1) + math.sqrt((n - 1) ** 2 + 4 * (n - 2)))


def alpha_k(n: int, k: int) -> float:
    """Mode-k growth exponent; alpha_1 equals alpha_exponent(n)."""
    if n < 3:
        raise ValueError(f"mode exponents are defined for n >= 3, got n={n}")
    if k < 0:
        raise ValueError(f"mode degree must be >= 0, got {k}")
    return 0.5 * (-(n - 1) + math.sqrt((n - 1) ** 2 + 4 * k * (k + n - 3)))


def blowup_exponent(n: int) -> float:
    """Gradient blow-up exponent (alpha(n) - 1)/2; equals -1/2 for n = 2."""
    return 0.5 * (alpha_exponent(n) - 1.0)


def weinkove_gamma(n: int) -> float:
    """Positive root of (n-2) g^2 + (n^2-4n+5) g - (n^2-5n+5) = 0.

    Reference comparator for n >= 4; not the optimal blow-up rate.
    """
    if n < 4:
        raise ValueError(f"comparator rate is defined for n >= 4, got {n}")
    a = n - 2
    b = n * n - 4 * n + 5
    c = -(n * n - 5 * n + 5)
    return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
