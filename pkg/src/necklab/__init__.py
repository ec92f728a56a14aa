"""Numerical laboratory for the insulated conductivity problem in narrow
necks: mode-reduced elliptic solves, barrier certification, weighted
spherical eigenvalues, and empirical gradient blow-up rates."""

from .errors import ConfigError, SolverError
from .geometry import (BoundaryProfile, DomainSpec, Perturbation, ProfileKind,
                       Side, alpha_exponent, alpha_k, blowup_exponent,
                       weinkove_gamma)
from .numerics import (FitResult, Grid, SparseSystem, Stretch, build_grid,
                       fit_loglog, generalized_symmetric_eig_smallest,
                       solve_sparse)
from .modesolver import (Field, GradientField, ManufacturedSolution,
                         ModeProblem, assemble, gradient,
                         manufactured_convergence, solve_2d, solve_mode)
from .barriers import (BarrierParams, SignReport, TildeParams, certify_sign,
                       feasibility_margin)
from .spectral import (EigenResult, Weight, WeightKind,
                       first_nonzero_eigenvalue, tilde_alpha, weight_from_mus)
from .diagnostics import CheckOutcome
from .sweep import (SweepConfig, SweepReport, SweepRow, check_2d_envelopes,
                    emit_report, run_anisotropic_sweep, run_sweep)

__version__ = "0.1.0"
