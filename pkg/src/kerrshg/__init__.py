"""Squeezing and stability of a second-harmonic cavity with a Kerr nonlinearity."""

from .errors import ConfigTooCoarse, DomainError, SingularMatrix, UnstableSystem
from .materials import MaterialParams, estimate_lambda
from .model import (
    CavityParams,
    EigenSet,
    FixedPoint,
    Stability,
    classify_stability,
    critical_photon_number,
    drive_for_photon_number,
    efficiencies,
    eigenvalues_closed_form,
    fixed_point,
    jacobian,
    steady_states,
)
from .oracle import OracleConfig, simulate_linear_ou, steady_state_oracle
from .spectra import (
    LinearizedSystem,
    Mode,
    SqueezePoint,
    diffusion_matrix,
    optimal_frequency,
    quadrature_spectra,
    spectrum_matrix,
    sweep,
)

__version__ = "0.1.0"
