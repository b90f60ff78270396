"""Linear (Rayleigh-Plateau) stability of the cylinder ``eta = R``.

Linearizing at ``(R, 0)`` gives ``eta_t = m(D) psi`` and
``psi_t = kappa (eta_zz/2 + (eta - R)/(2 R^2))`` with ``m`` the flat DN
multiplier, hence

    sigma^2(xi) = kappa m(xi) (1/(2R^2) - xi^2/2).

The half-curvature convention used throughout (``H(R) = -1/(2R)``) puts a
factor 1/2 in front of the classical Rayleigh expression
``(kappa/R^3) x I1(x)/I0(x) (1 - x^2)`` with ``x = xi R``; the maximizer is
the same.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .dno import flat_multiplier
from .errors import WindowTooShort

MIN_WINDOW = 10
NEUTRAL_TOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class DispersionSample:
    xi: float
    sigma2: float

    @property
    def sigma(self):
        """Growth rate (real) for unstable modes, ``i * frequency`` otherwise."""
        if self.sigma2 >= 0:
            return complex(np.sqrt(self.sigma2), 0.0)
        return complex(0.0, np.sqrt(-self.sigma2))


def sigma_squared(R, kappa, xi):
    xi = np.asarray(xi, dtype=float)
    return kappa * flat_multiplier(R, xi) * (0.5 / R ** 2 - 0.5 * xi ** 2)


def growth_rate(R, kappa, xi):
    if R <= 0:
        raise ValueError("radius must be positive")
    if kappa < 0:
        raise ValueError("surface tension must be nonnegative")
    xi = float(xi)
    s2 = float(sigma_squared(R, kappa, xi))
    # neutral points: xi = 0 and xi R = 1, up to rounding in xi R
    if xi == 0 or abs(abs(xi) * R - 1.0) <= NEUTRAL_TOL:
        s2 = 0.0
    return DispersionSample(xi, s2)


def most_unstable(R, kappa, xtol=1e-8):
    """``(xi*, sigma*)`` maximizing the growth rate on ``(0, 1/R)``.

    Golden-section search in the dimensionless variable ``x = xi R``.
    """
    if R <= 0 or kappa <= 0:
        raise ValueError("radius and surface tension must be positive")
    res = minimize_scalar(lambda x: -sigma_squared(1.0, 1.0, x), bracket=(0.1, 0.6, 0.99),
                          method="golden", tol=xtol)
    x = float(res.x)
    xi = x / R
    return xi, float(np.sqrt(sigma_squared(R, kappa, xi)))


def measure_growth(traj, k, R=None, a0=None, window="growth"):
    """Least-squares exponential rate of mode ``k`` of ``eta`` along a trajectory.

    ``window="growth"`` fits only samples with ``10 a0 <= amp <= 1e-2 R``
    (``a0`` defaults to the initial amplitude).  ``window="all"`` fits every
    sample, which is what a neutral or oscillating mode needs: its amplitude
    never leaves the initial band.
    """
    states = traj.states
    if not states:
        raise WindowTooShort("empty trajectory")
    R = states[0].R if R is None else R
    grid = states[0].grid
    t = np.array([s.t for s in states])
    amp = np.array([grid.mode_amplitude(s.eta, k) for s in states])
    a0 = amp[0] if a0 is None else a0
    if window == "growth":
        sel = (amp >= 10.0 * a0) & (amp <= 1e-2 * R)
    elif window == "all":
        sel = amp > 0
    else:
        raise ValueError(f"unknown window {window!r}")
    if sel.sum() < MIN_WINDOW:
        raise WindowTooShort(f"only {int(sel.sum())} samples in the fit window")
    slope, _ = np.polyfit(t[sel], np.log(amp[sel]), 1)
    return float(slope)


def dispersion_table(R, kappa, xi_values):
    return [growth_rate(R, kappa, x) for x in xi_values]
