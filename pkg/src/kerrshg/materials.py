"""Kerr strength of a single crystal from bulk material constants."""

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class MaterialParams:
    """Plane-wave resonator with one nonlinear crystal.

    ``t_b`` and ``lambda_b`` are the output-mirror transmission and the
    wavelength (m) of the harmonic mode, ``length`` the crystal length (m);
    ``chi2`` and ``chi3`` are in m/V and m^2/V^2.
    """

    t_b: float
    lambda_b: float
    length: float
    chi2: float
    chi3: float

    def __post_init__(self):
        for name in ("t_b", "lambda_b", "length", "chi2", "chi3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value!r}")
        if self.t_b > 1:
            raise DomainError(f"t_b is a transmission and must be <= 1, got {self.t_b!r}")


def estimate_lambda(m):
    """Scaled Kerr strength ``(T_b / 4 pi) (lambda_b / l) chi3 / chi2^2``."""
    return (m.t_b / (4.0 * math.pi)) * (m.lambda_b / m.length) * (m.chi3 / m.chi2**2)
