"""Deterministic dynamics of the doubly resonant SHG cavity with a Kerr term.

All quantities are in scaled units: time in units of the fundamental loss
rate, ``r`` is the harmonic/fundamental loss ratio, ``lambda_kerr`` the
scaled Kerr strength and ``drive`` the scaled pump amplitude.  The
deterministic equations are

    d(alpha)/dt = -alpha + beta*conj(alpha) - i*L*conj(alpha)*alpha**2 + drive
    d(beta)/dt  = r * (-beta - alpha**2)

Fluctuations are ordered as ``(d_alpha, d_alpha_plus, d_beta, d_beta_plus)``
throughout the package.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: default half-width of the marginal band around Re k = 0
STABILITY_EPS = 1e-9


class Stability(enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class CavityParams:
    """Scaled parameters of one operating point."""

    r: float
    lambda_kerr: float = 0.0
    drive: complex = 0.0

    def __post_init__(self):
        _check_r_lambda(self.r, self.lambda_kerr)
        if not np.isfinite(complex(self.drive)):
            raise DomainError(f"drive must be finite, got {self.drive!r}")

    def steady_state(self, eps=STABILITY_EPS):
        return steady_states(self.drive, self.r, self.lambda_kerr, eps=eps)[0]


@dataclass(frozen=True)
class EigenSet:
    k1: complex
    k2: complex
    k3: complex
    k4: complex
    g: complex

    def as_array(self):
        return np.array([self.k1, self.k2, self.k3, self.k4], dtype=complex)

    @property
    def max_real(self):
        return float(self.as_array().real.max())


@dataclass(frozen=True)
class FixedPoint:
    alpha_f: complex
    beta_f: complex
    n: float
    eigenvalues: tuple
    stability: Stability

    @property
    def max_real(self):
        return max(k.real for k in self.eigenvalues)


def _check_r_lambda(r, lambda_kerr):
    if not (np.isfinite(r) and r > 0):
        raise DomainError(f"loss ratio r must be positive, got {r!r}")
    if not (np.isfinite(lambda_kerr) and lambda_kerr >= 0):
        raise DomainError(f"Kerr strength must be non-negative, got {lambda_kerr!r}")


def _check_n(n):
    if not (np.isfinite(n) and n >= 0):
        raise DomainError(f"photon number must be non-negative, got {n!r}")


def critical_photon_number(r, lambda_kerr):
    """Photon number of the Hopf bifurcation, ``math.inf`` if there is none.

    The bifurcation moves to infinity as ``lambda_kerr`` approaches
    ``1/sqrt(3)``; beyond that the steady state is stable at any intensity.
    """
    _check_r_lambda(r, lambda_kerr)
    s = 1.0 - 3.0 * lambda_kerr**2
    if s <= 0.0:
        return math.inf
    return (r + 1.0) / math.sqrt(s)


def drive_for_photon_number(n, lambda_kerr):
    """Real non-negative pump amplitude that sustains ``n`` photons."""
    _check_n(n)
    if lambda_kerr < 0:
        raise DomainError(f"Kerr strength must be non-negative, got {lambda_kerr!r}")
    return math.sqrt(n * ((1.0 + n) ** 2 + lambda_kerr**2 * n**2))


def _cubic_residual(n, drive_sq, lambda_kerr):
    return n * ((1.0 + n) ** 2 + lambda_kerr**2 * n**2) - drive_sq


def _solve_photon_number(drive_sq, lambda_kerr):
    # (1 + L^2) n^3 + 2 n^2 + n - |drive|^2 = 0, strictly increasing on n >= 0
    if drive_sq == 0.0:
        return 0.0
    c3 = 1.0 + lambda_kerr**2
    roots = np.roots([1.0, 2.0 / c3, 1.0 / c3, -drive_sq / c3])
    real = roots[np.abs(roots.imag) <= 1e-6 * np.maximum(1.0, np.abs(roots))].real
    n = float(real.max()) if real.size else float(np.abs(roots).max())
    n = max(n, 0.0)
    for _ in range(50):
        f = _cubic_residual(n, drive_sq, lambda_kerr)
        df = 3.0 * c3 * n**2 + 4.0 * n + 1.0
        step = f / df
        n = max(n - step, 0.0)
        if abs(step) <= 4e-16 * max(1.0, n):
            break
    return n


def steady_states(drive, r, lambda_kerr, eps=STABILITY_EPS):
    """All fixed points of the deterministic equations for a given pump.

    Returns a list; the photon-number relation is monotone so it always has
    exactly one element.
    """
    _check_r_lambda(r, lambda_kerr)
    drive = complex(drive)
    if not np.isfinite(drive):
        raise DomainError(f"drive must be finite, got {drive!r}")
    n = _solve_photon_number(abs(drive) ** 2, lambda_kerr)
    alpha = drive / (1.0 + n + 1j * lambda_kerr * n)
    # report n from alpha itself so that n == |alpha|^2 holds to rounding
    return [_make_fixed_point(alpha, r, lambda_kerr, eps)]


def fixed_point(n, r, lambda_kerr, eps=STABILITY_EPS):
    """Fixed point carrying ``n`` photons, pumped with a real positive drive."""
    _check_n(n)
    _check_r_lambda(r, lambda_kerr)
    drive = drive_for_photon_number(n, lambda_kerr)
    alpha = drive / (1.0 + n + 1j * lambda_kerr * n)
    return _make_fixed_point(alpha, r, lambda_kerr, eps, n=n)


def _make_fixed_point(alpha, r, lambda_kerr, eps, n=None):
    if n is None:
        n = abs(alpha) ** 2
    eig = eigenvalues_closed_form(n, r, lambda_kerr)
    ks = tuple(complex(k) for k in eig.as_array())
    return FixedPoint(
        alpha_f=complex(alpha),
        beta_f=complex(-alpha * alpha),
        n=float(n),
        eigenvalues=ks,
        stability=_classify(eig.max_real, eps),
    )


def steady_state_residual(fp, drive, r, lambda_kerr):
    """Max absolute residual of the deterministic equations at ``fp``."""
    a, b = fp.alpha_f, fp.beta_f
    da = -a + b * np.conj(a) - 1j * lambda_kerr * np.conj(a) * a * a + drive
    db = r * (-b - a * a)
    return max(abs(da), abs(db))


def jacobian(fp, r, lambda_kerr):
    """Drift matrix of the linearized fluctuations around ``fp``.

    ``alpha_plus`` is treated as an independent variable (doubled phase space).
    """
    a = fp.alpha_f
    ac = np.conj(a)
    b = fp.beta_f
    n = fp.n
    L = lambda_kerr
    return np.array(
        [
            [-1 - 2j * L * n, b - 1j * L * a * a, ac, 0],
            [np.conj(b) + 1j * L * ac * ac, -1 + 2j * L * n, 0, a],
            [-2 * r * a, 0, -r, 0],
            [0, -2 * r * ac, 0, -r],
        ],
        dtype=complex,
    )


def eigenvalues_closed_form(n, r, lambda_kerr):
    """Closed-form eigenvalues of :func:`jacobian` at photon number ``n``.

    ``g = n*sqrt(1 - 3 L^2)`` is kept complex so the same expression covers
    the always-stable regime ``3 L^2 > 1``.
    """
    _check_n(n)
    g = n * np.sqrt(complex(1.0 - 3.0 * lambda_kerr**2))
    s12 = np.sqrt((-r + 1 - g) ** 2 - 8 * r * n + 0j)
    s34 = np.sqrt((-r + 1 + g) ** 2 - 8 * r * n + 0j)
    return EigenSet(
        k1=(-r - 1 + g - s12) / 2,
        k2=(-r - 1 + g + s12) / 2,
        k3=(-r - 1 - g - s34) / 2,
        k4=(-r - 1 - g + s34) / 2,
        g=g,
    )


def max_growth_rate(n, r, lambda_kerr):
    return eigenvalues_closed_form(n, r, lambda_kerr).max_real


def _classify(max_real, eps):
    if max_real < -eps:
        return Stability.STABLE
    if max_real > eps:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def classify_stability(fp, r, lambda_kerr, eps=STABILITY_EPS):
    if eps <= 0:
        raise DomainError("eps must be positive")
    return _classify(max_growth_rate(fp.n, r, lambda_kerr), eps)


def efficiencies(n, lambda_kerr):
    """Output/input power ratios ``(eta_a, eta_b)`` of the two modes."""
    _check_n(n)
    kerr = (lambda_kerr * n) ** 2
    den = (1.0 + n) ** 2 + kerr
    return ((1.0 - n) ** 2 + kerr) / den, 4.0 * n / den
