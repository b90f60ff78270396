"""Geometry and energetics of an axisymmetric surface ``r = eta(z)``.

Curvature sign convention: a cylinder of radius ``R`` has ``H = -1/(2R)``
(half the sum of principal curvatures, measured with the outward normal
pointing away from the axis).
"""
from dataclasses import dataclass

import numpy as np

from .dno import check_radius


@dataclass(frozen=True)
class SurfaceGeometry:
    eta: np.ndarray
    eta_z: np.ndarray
    eta_zz: np.ndarray

    @property
    def slope_factor(self):
        """``sqrt(1 + eta_z^2)``."""
        return np.sqrt(1.0 + self.eta_z ** 2)


def surface_geometry(grid, eta, R=None):
    eta = check_radius(grid.check(eta), R)
    return SurfaceGeometry(eta, grid.derivative(eta), grid.derivative(eta, 2))


def mean_curvature(grid, eta, R=None):
    """``d_z(eta_z / (2 s)) - 1/(2 eta s)`` with ``s = sqrt(1 + eta_z^2)``."""
    geo = surface_geometry(grid, eta, R)
    s = geo.slope_factor
    return grid.derivative(geo.eta_z / (2.0 * s)) - 1.0 / (2.0 * geo.eta * s)


def surface_pressure(grid, eta, R, kappa=1.0):
    """Young-Laplace pressure jump, normalized to vanish on the cylinder ``R``."""
    if kappa < 0:
        raise ValueError("surface tension must be nonnegative")
    if kappa == 0:
        return np.zeros(grid.N)
    return -kappa / (2.0 * R) - kappa * mean_curvature(grid, eta, R)


def area_integrand(grid, eta):
    """``eta sqrt(1 + eta_z^2)``: surface area per unit angle and length."""
    eta_z = grid.derivative(eta)
    return eta * np.sqrt(1.0 + eta_z ** 2)


def kinetic_energy(grid, eta, psi, G):
    return np.pi * grid.integrate(psi * eta * G)


def potential_energy(grid, eta, R, kappa=1.0):
    eta_z = grid.derivative(eta)
    # sqrt(1 + x) - 1 written without cancellation
    stretch = eta_z ** 2 / (np.sqrt(1.0 + eta_z ** 2) + 1.0)
    return np.pi * kappa * grid.integrate(eta * stretch - (eta - R) ** 2 / (2.0 * R))


def hamiltonian_energy(grid, state, G):
    """Kinetic plus capillary energy over one period; zero at ``(R, 0)``.

    ``G`` must be the DN operator applied to ``state.psi``.  In gravity mode
    only the periodic part of the potential enters (the linear offset has
    no finite energy on the torus).
    """
    return (kinetic_energy(grid, state.eta, state.psi, G)
            + potential_energy(grid, state.eta, state.R, state.kappa))
