"""Linearized quantum-noise spectra of the cavity output.

Fluctuations obey ``dv = A v dt + B dW`` in the doubled phase space of the
positive-P representation, with ``B B^T = D``.  Their stationary spectrum
matrix is

    F(w) = (i w - A)^-1  D  (-i w - A^T)^-1

and the output quadrature ``X = a exp(i theta) + h.c.`` of either mode has
the noise spectrum (vacuum = 1)

    S(theta, w) = 1 + c_mode * (Re U(w) + Re(exp(2 i theta) V(w)))

where ``U`` is the symmetrized normally ordered cross spectrum
``(F[a, a+] + F[a+, a]) / 2`` and ``V = F[a, a]``.  The optimized pair is
``S_-/+ = 1 + c_mode * (Re U -/+ |V|)``.
"""

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import model
from .errors import SingularMatrix, UnstableSystem
from .model import Stability


class Mode(enum.Enum):
    FUNDAMENTAL = "fundamental"
    HARMONIC = "harmonic"


# Output-field gain of the normally ordered intracavity spectrum, in units
# where D = beta_f - i L alpha_f^2.  Fundamental: 2 (mirror coupling 2*gamma_a)
# x 2 (quadrature cross terms).  Harmonic: the scaling b = beta*gamma_a/kappa
# and the mirror coupling 2*gamma_b cancel the factor 2*r, leaving 2.
MODE_GAIN = {Mode.FUNDAMENTAL: 4.0, Mode.HARMONIC: 2.0}

_MODE_INDEX = {Mode.FUNDAMENTAL: (0, 1), Mode.HARMONIC: (2, 3)}

#: frequency step of the coarse scan in :func:`optimal_frequency`
SCAN_STEP = 0.05
#: absolute frequency tolerance of the golden-section refinement
OMEGA_TOL = 1e-6


@dataclass(frozen=True)
class LinearizedSystem:
    A: np.ndarray
    D: np.ndarray

    @classmethod
    def from_fixed_point(cls, fp, r, lambda_kerr):
        return cls(model.jacobian(fp, r, lambda_kerr), diffusion_matrix(fp, lambda_kerr))

    def max_real_eigenvalue(self):
        return float(np.linalg.eigvals(self.A).real.max())

    def is_stable(self):
        return self.max_real_eigenvalue() < 0.0


@dataclass(frozen=True)
class SqueezePoint:
    omega: float
    s_minus: float
    s_plus: float
    theta_opt: float
    mode: Mode

    @property
    def s_minus_db(self):
        return to_db(self.s_minus)

    @property
    def s_plus_db(self):
        return to_db(self.s_plus)


@dataclass(frozen=True)
class SweepRow:
    n: float
    omega_m: float | None
    s_minus: float | None
    s_plus: float | None
    eta_a: float
    eta_b: float
    stability: Stability

    @property
    def stable(self):
        return self.stability is Stability.STABLE


def to_db(s):
    return 10.0 * np.log10(s)


def linearize(fp, r, lambda_kerr):
    return LinearizedSystem.from_fixed_point(fp, r, lambda_kerr)


def diffusion_matrix(fp, lambda_kerr):
    """Noise matrix of the linearized fluctuations.

    Only the ``(a, a)`` and ``(a+, a+)`` entries are nonzero: the parametric
    term ``beta_f`` and the Kerr term ``-i L alpha_f^2``.
    """
    d = fp.beta_f - 1j * lambda_kerr * fp.alpha_f**2
    D = np.zeros((4, 4), dtype=complex)
    D[0, 0] = d
    D[1, 1] = np.conj(d)
    return D


def spectrum_matrix(sys, omega):
    """Stationary spectrum matrix ``F(omega)``.

    ``omega`` may be a scalar or an array; the result has shape
    ``omega.shape + (4, 4)``.
    """
    eig = np.linalg.eigvals(sys.A)
    if eig.real.max() >= 0.0:
        raise UnstableSystem(
            f"drift matrix is not Hurwitz (max Re eigenvalue {eig.real.max():.3g})"
        )
    w = np.asarray(omega, dtype=float)
    eye = np.eye(4)
    left = 1j * w[..., None, None] * eye - sys.A
    right = -1j * w[..., None, None] * eye - sys.A.T
    try:
        # (i w - A)^-1 D (-i w - A^T)^-1 = (i w - A)^-1 [ (-i w - A) ^-1 D^T ]^T
        inner = np.linalg.solve(np.swapaxes(right, -1, -2), np.broadcast_to(sys.D.T, left.shape))
        return np.linalg.solve(left, np.swapaxes(inner, -1, -2))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc


def _uv(sys, omega, mode):
    i, j = _MODE_INDEX[mode]
    F = spectrum_matrix(sys, omega)
    U = 0.5 * (F[..., i, j] + F[..., j, i])
    V = F[..., i, i]
    scale = np.maximum(1.0, np.abs(U) + np.abs(V))
    if np.any(np.abs(U.imag) > 1e-8 * scale):
        raise ArithmeticError("symmetrized normal-order spectrum is not real")
    return U.real, V


def squeezing_curves(sys, omega, mode=Mode.FUNDAMENTAL):
    """Vectorized ``(s_minus, s_plus, theta_opt)`` over a frequency array."""
    U, V = _uv(sys, omega, mode)
    c = MODE_GAIN[mode]
    absV = np.abs(V)
    theta = np.mod((np.pi - np.angle(V)) / 2.0, np.pi)
    return 1.0 + c * (U - absV), 1.0 + c * (U + absV), theta


def quadrature_spectrum(sys, omega, theta, mode=Mode.FUNDAMENTAL):
    """Noise spectrum of the quadrature at a fixed phase ``theta``."""
    U, V = _uv(sys, omega, mode)
    return 1.0 + MODE_GAIN[mode] * (U + np.real(np.exp(2j * theta) * V))


def quadrature_spectra(fp, r, lambda_kerr, omega, mode=Mode.FUNDAMENTAL):
    sys = linearize(fp, r, lambda_kerr)
    s_minus, s_plus, theta = squeezing_curves(sys, float(omega), mode)
    return SqueezePoint(float(omega), float(s_minus), float(s_plus), float(theta), mode)


def scan_upper_bound(fp, lambda_kerr):
    # the Kerr detuning L*n sets the squeezing frequency for the fundamental;
    # for r >> 1 the harmonic optimum sits near the fast eigenfrequencies
    kmax = max(abs(k) for k in fp.eigenvalues)
    return max(10.0, 3.0 * lambda_kerr * fp.n, 2.0 * kmax)


def _golden_min(f, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def optimal_frequency(fp, r, lambda_kerr, mode=Mode.FUNDAMENTAL):
    """Frequency of maximum squeezing and the spectrum point there.

    Coarse scan on ``[0, scan_upper_bound]`` followed by golden-section
    refinement inside the bracketing scan cell.
    """
    sys = linearize(fp, r, lambda_kerr)
    hi = scan_upper_bound(fp, lambda_kerr)
    grid = np.arange(0.0, hi + SCAN_STEP, SCAN_STEP)
    s_minus, _, _ = squeezing_curves(sys, grid, mode)
    k = int(np.argmin(s_minus))
    lo_w = grid[max(k - 1, 0)]
    hi_w = grid[min(k + 1, grid.size - 1)]

    def f(w):
        return float(squeezing_curves(sys, w, mode)[0])

    w = _golden_min(f, lo_w, hi_w, OMEGA_TOL)
    candidates = [(f(w), w), (float(s_minus[k]), float(grid[k]))]
    if lo_w == 0.0:
        candidates.append((f(0.0), 0.0))
    w_m = min(candidates)[1]
    s_m, s_p, theta = squeezing_curves(sys, w_m, mode)
    return w_m, SqueezePoint(float(w_m), float(s_m), float(s_p), float(theta), mode)


def sweep_point(n, r, lambda_kerr, mode=Mode.FUNDAMENTAL):
    fp = model.fixed_point(n, r, lambda_kerr)
    eta_a, eta_b = model.efficiencies(n, lambda_kerr)
    if fp.stability is not Stability.STABLE:
        return SweepRow(float(n), None, None, None, eta_a, eta_b, fp.stability)
    w_m, pt = optimal_frequency(fp, r, lambda_kerr, mode)
    return SweepRow(float(n), w_m, pt.s_minus, pt.s_plus, eta_a, eta_b, fp.stability)


def sweep(n_grid, r, lambda_kerr, mode=Mode.FUNDAMENTAL, workers=1):
    """One :class:`SweepRow` per photon number, in grid order.

    Points that are not stable carry only efficiencies and the stability flag.
    """
    n_grid = [float(n) for n in n_grid]
    if not n_grid:
        raise ValueError("n_grid must not be empty")
    fn = partial(sweep_point, r=r, lambda_kerr=lambda_kerr, mode=mode)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, n_grid))
    return [fn(n) for n in n_grid]


def surface(n_grid, omega_grid, r, lambda_kerr, mode=Mode.FUNDAMENTAL):
    """``s_minus`` on an ``(n, omega)`` grid; NaN rows above the Hopf point."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    out = np.full((len(n_grid), omega_grid.size), np.nan)
    for i, n in enumerate(n_grid):
        fp = model.fixed_point(float(n), r, lambda_kerr)
        if fp.stability is Stability.STABLE:
            out[i] = squeezing_curves(linearize(fp, r, lambda_kerr), omega_grid, mode)[0]
    return out
