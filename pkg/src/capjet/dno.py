"""Cylindrical Dirichlet-Neumann operator.

The fluid region ``0 < r < eta(z)`` is flattened to the strip
``(z, y) in [0, 2L) x [0, 1]`` with ``r = y eta(z)``; the potential then
solves ``-div(A grad v) = 0`` with

    A = [[ y eta^2,            -y^2 eta eta_z        ],
         [ -y^2 eta eta_z,      y (1 + y^2 eta_z^2)  ]],

``v(z, 1) = psi`` and a natural (zero flux) condition at the axis.

Discretization: piecewise-linear Galerkin elements in ``y`` on ``M + 1``
uniform levels (all ``y`` integrals exact) and Fourier collocation in ``z``.
The assembled operator is symmetric, and the boundary flux
``A21 v_z + A22 v_y = eta G`` is read off the boundary row of the same
operator (the variational flux), which keeps the DN value second order in
``dy``.  The linear system is solved by conjugate gradients preconditioned
with the exact discrete flat-cylinder operator at ``mean(eta)``, which is
diagonal in Fourier modes and tridiagonal in ``y``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .bessel import ratio_i0k, ratio_i1_i0
from .errors import NoConvergence, NonpositiveRadius

DEFAULT_TOL = 1e-10
PINCH_FRACTION = 1e-6


def flat_multiplier(R, xi):
    """Symbol of ``G[R]``: ``xi I1(R xi) / I0(R xi)``."""
    xi = np.asarray(xi, dtype=float)
    out = xi * ratio_i1_i0(R * xi)
    return float(out) if out.ndim == 0 else out


def dn_flat(grid, R, psi):
    return grid.apply_multiplier(psi, lambda xi: flat_multiplier(R, xi))


def y_levels(M):
    return np.linspace(0.0, 1.0, M + 1)


@dataclass(frozen=True)
class StripField:
    grid: object
    y: np.ndarray
    values: np.ndarray          # shape (M + 1, N); row m is the level y[m]
    iterations: int = 0
    residual: float = 0.0

    def trace(self):
        return self.values[-1]


def harmonic_extension_flat(grid, R, psi, y):
    """Exact Poisson-kernel extension ``psi_hat(xi) I0(y R xi)/I0(R xi)``."""
    y = np.asarray(y, dtype=float)
    c = grid.forward(psi)
    kernel = ratio_i0k(0, y[:, None], R * grid.xi[None, :])
    values = grid.inverse(kernel * c[None, :])
    return StripField(grid, y, values)


@dataclass(frozen=True)
class CoefficientMatrixField:
    y: np.ndarray
    A11: np.ndarray
    A12: np.ndarray
    A22: np.ndarray

    @property
    def A21(self):
        return self.A12


def check_radius(eta, R=None):
    eta = np.asarray(eta, dtype=float)
    ref = float(np.mean(np.abs(eta))) if R is None else float(R)
    if not np.all(np.isfinite(eta)):
        raise NonpositiveRadius("radius is not finite")
    if eta.min() <= PINCH_FRACTION * ref:
        raise NonpositiveRadius(
            f"min radius {eta.min():.3e} is below the pinch-off floor "
            f"{PINCH_FRACTION * ref:.3e}")
    return eta


def assemble_coefficients(grid, eta, y):
    eta = check_radius(grid.check(eta))
    y = np.asarray(y, dtype=float)[:, None]
    eta_z = grid.derivative(eta)
    return CoefficientMatrixField(
        y=y[:, 0],
        A11=y * eta ** 2,
        A12=-y ** 2 * eta * eta_z,
        A22=y * (1.0 + y ** 2 * eta_z ** 2),
    )


class _Tridiag:
    """Tridiagonal matrix in ``y`` acting along axis 0 of a strip array."""

    def __init__(self, lower, diag, upper):
        self.lower, self.diag, self.upper = lower, diag, upper

    def __matmul__(self, v):
        out = self.diag[:, None] * v
        out[1:] += self.lower[:, None] * v[:-1]
        out[:-1] += self.upper[:, None] * v[1:]
        return out

    @property
    def T(self):
        return _Tridiag(self.upper, self.diag, self.lower)


def _element_matrices(M):
    """Exact P1 integrals on the uniform mesh ``y_m = m/M``.

    Returns tridiagonals for ``int y h_i h_j``, ``int y h_i' h_j'``,
    ``int y^3 h_i' h_j'`` and ``P_ij = int y^2 h_i' h_j``.
    """
    dy = 1.0 / M
    a = np.arange(M) * dy
    b = a + dy
    n = M + 1

    def sym(d_a, d_b, off):
        diag = np.zeros(n)
        diag[:-1] += d_a
        diag[1:] += d_b
        return _Tridiag(off.copy(), diag, off.copy())

    mass = sym(dy * (3 * a + b) / 12, dy * (a + 3 * b) / 12, dy * (a + b) / 12)
    c1 = (a + b) / (2 * dy)
    stiff1 = sym(c1, c1, -c1)
    c3 = (b ** 4 - a ** 4) / (4 * dy ** 2)
    stiff3 = sym(c3, c3, -c3)

    ia = (3 * a ** 2 + 2 * a * b + b ** 2) / 12   # int y^2 h_a / dy
    ib = (a ** 2 + 2 * a * b + 3 * b ** 2) / 12   # int y^2 h_b / dy
    diag = np.zeros(n)
    diag[:-1] -= ia
    diag[1:] += ib
    cross = _Tridiag(ia.copy(), diag, -ib)        # lower = P[b, a], upper = P[a, b]
    return mass, stiff1, stiff3, cross


class EllipticProblem:
    """Discrete flattened problem for one surface ``eta``.

    Build once per surface, then call :meth:`solve` / :meth:`dn` for any
    number of Dirichlet data.
    """

    def __init__(self, grid, eta, M=None, R=None):
        self.grid = grid
        self.eta = check_radius(grid.check(eta), R)
        self.M = int(M) if M is not None else 2 * grid.N
        if self.M < 2:
            raise ValueError("need at least two y intervals")
        self.y = y_levels(self.M)
        self.dy = 1.0 / self.M
        self.eta_z = grid.derivative(self.eta)
        self.mass, self.stiff1, self.stiff3, self.cross = _element_matrices(self.M)
        self.c_zz = self.eta ** 2
        self.c_zy = self.eta * self.eta_z
        self.c_yy = self.eta_z ** 2
        self.R_bar = float(np.mean(self.eta))
        self._precond = self._flat_factor()

    # operator ---------------------------------------------------------------
    def apply(self, V):
        """Rows of the assembled operator applied to a full strip array."""
        d = self.grid.derivative
        Vz = d(V)
        flux_z = -self.c_zz * (self.mass @ Vz) + self.c_zy * (self.cross.T @ V)
        out = d(flux_z)
        out -= self.c_zy * (self.cross @ Vz)
        out += self.stiff1 @ V
        out += self.c_yy * (self.stiff3 @ V)
        return out

    def _apply_interior(self, X):
        V = np.zeros((self.M + 1, self.grid.N))
        V[:-1] = X
        return self.apply(V)[:-1]

    def _flat_factor(self):
        g = self.grid
        M = self.M
        xi = np.abs(np.fft.rfftfreq(g.N, d=1.0 / g.N)) * np.pi / g.L
        xi[-1] = 0.0  # Nyquist: the spectral derivative drops it
        k2 = (self.R_bar * xi) ** 2
        m_d, m_o = self.mass.diag[:M], self.mass.upper[:M - 1]
        s_d, s_o = self.stiff1.diag[:M], self.stiff1.upper[:M - 1]
        diag = (k2[:, None] * m_d[None, :] + s_d[None, :]).ravel()
        upper = k2[:, None] * m_o[None, :] + s_o[None, :]
        upper = np.concatenate([upper, np.zeros((len(xi), 1))], axis=1).ravel()[:-1]
        ab = np.zeros((2, diag.size))
        ab[0, 1:] = upper
        ab[1] = diag
        return ab, len(xi)

    def precondition(self, R):
        ab, nm = self._precond
        c = np.fft.rfft(R, axis=1).T            # (modes, M)
        rhs = np.stack([c.real.ravel(), c.imag.ravel()], axis=1)
        sol = solveh_banded(ab, rhs, check_finite=False)
        zc = (sol[:, 0] + 1j * sol[:, 1]).reshape(nm, self.M).T
        return np.fft.irfft(zc, n=self.grid.N, axis=1)

    # solves -------------------------------------------------------------
    def solve(self, psi, tol=DEFAULT_TOL, maxiter=None):
        """Preconditioned CG for the interior values; returns a StripField.

        Convergence: ``||dy * r|| <= tol * ||psi||`` in the discrete
        z-weighted 2-norm.
        """
        g = self.grid
        psi = np.asarray(g.check(psi), dtype=float)
        maxiter = 10 * g.N if maxiter is None else maxiter
        V = np.zeros((self.M + 1, g.N))
        V[-1] = psi
        psi_norm = np.sqrt(np.sum(psi ** 2))
        if psi_norm == 0.0:
            return StripField(g, self.y, V, 0, 0.0)
        b = -self.apply(V)[:-1]
        X = self.precondition(b)
        r = b - self._apply_interior(X)
        target = tol * psi_norm / self.dy
        res = np.sqrt(np.sum(r ** 2))
        it = 0
        if res > target:
            z = self.precondition(r)
            p = z.copy()
            rz = np.sum(r * z)
            while res > target:
                if it >= maxiter:
                    raise NoConvergence(it, res * self.dy / psi_norm)
                Ap = self._apply_interior(p)
                alpha = rz / np.sum(p * Ap)
                X += alpha * p
                r -= alpha * Ap
                res = np.sqrt(np.sum(r ** 2))
                it += 1
                z = self.precondition(r)
                rz_new = np.sum(r * z)
                p = z + (rz_new / rz) * p
                rz = rz_new
        V[:-1] = X
        return StripField(g, self.y, V, it + 1, res * self.dy / psi_norm)

    def flux(self, V):
        """Variational conormal flux ``A21 v_z + A22 v_y`` at ``y = 1``."""
        return self.apply(V)[-1]

    def dn(self, psi, tol=DEFAULT_TOL, maxiter=None):
        sol = self.solve(psi, tol, maxiter)
        return self.flux(sol.values) / self.eta

    def energy(self, V, W=None):
        """Discrete ``int int grad W . A grad V dz dy`` (``W = V`` if omitted)."""
        W = V if W is None else W
        return float(np.sum(W * self.apply(V)) * self.grid.dz)


def solve_elliptic(grid, eta, psi, M=None, tol=DEFAULT_TOL):
    return EllipticProblem(grid, eta, M).solve(psi, tol)


def dn_general(grid, eta, psi, M=None, tol=DEFAULT_TOL):
    return EllipticProblem(grid, eta, M).dn(psi, tol)


def bilinear_form(grid, eta, phi, psi, M=None, tol=DEFAULT_TOL):
    prob = EllipticProblem(grid, eta, M)
    V = prob.solve(psi, tol).values
    W = prob.solve(phi, tol).values
    return prob.energy(V, W)


@dataclass(frozen=True)
class TraceVelocities:
    B: np.ndarray
    V: np.ndarray


def trace_velocities(grid, eta, psi, G):
    """Radial (B) and axial (V) fluid velocity on the surface."""
    eta_z = grid.derivative(eta)
    psi_z = grid.derivative(psi)
    B = (eta_z * psi_z + G) / (1.0 + eta_z ** 2)
    return TraceVelocities(B=B, V=psi_z - B * eta_z)


def shape_derivative(grid, eta, psi, h, M=None, tol=DEFAULT_TOL, problem=None):
    """``d_eta G[eta](psi) . h = -G(h B) - d_z(h V) - h B / eta``."""
    prob = problem or EllipticProblem(grid, eta, M)
    G = prob.dn(psi, tol)
    tv = trace_velocities(grid, prob.eta, psi, G)
    h = np.asarray(h, dtype=float)
    return -prob.dn(h * tv.B, tol) - grid.derivative(h * tv.V) - h * tv.B / prob.eta


def cancellation_probe(grid, eta, psi, M=None, tol=DEFAULT_TOL):
    """``G[eta](B) + d_z V``: smoother than either term on its own."""
    prob = EllipticProblem(grid, eta, M)
    G = prob.dn(psi, tol)
    tv = trace_velocities(grid, prob.eta, psi, G)
    return prob.dn(tv.B, tol) + grid.derivative(tv.V)
