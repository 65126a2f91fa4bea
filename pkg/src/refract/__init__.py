"""Refracted jump-diffusion toolkit: exact resolvent laws, occupation times,
first-passage transforms and variable-annuity pricing, with a Monte Carlo
oracle cross-validating every analytic output."""

from .charroots import RootSet, characteristic_polynomial, kappa, psi, psi_hat, solve_roots
from .distribution import (
    FirstPassageTransform,
    PropositionCoefficients,
    cdf_lower,
    cdf_upper,
    first_passage_down,
    first_passage_up,
    occupation_transform,
    pdf,
    proposition21_cdf,
)
from .kernels import F1, F2, KernelSet, Kq_cdf, Kq_density, build_kernels
from .laplace import InversionConfig, invert
from .mc_oracle import McEstimate, SimConfig
from .model import (
    JumpMixture,
    MixtureTerm,
    ModelSpec,
    QuerySpec,
    ValidationReport,
    density_minus,
    density_plus,
    load_model,
    save_model,
    validate_model,
)
from .pricing import PricingSpec, cumulant, esscher_calibrate, expected_payoff, price_gmdb, price_gmmb
from .wiener_hopf import (
    PoleResidueForm,
    extreme_density,
    factor_inf_X,
    factor_inf_Y,
    factor_sup_X,
    factor_sup_Y,
)

__version__ = "0.1.0"
