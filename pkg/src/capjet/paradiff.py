"""Discrete paradifferential calculus on the periodic grid.

A symbol is stored as a short sum ``a(z, xi) = sum_j c_j(z) m_j(xi)`` and
quantized by Bony's rule

    (T_a u)^(xi) = sum_zeta chi(xi - zeta, zeta) a^(xi - zeta, zeta) phi(zeta) u^(zeta)

evaluated as an exact O(N^2) frequency convolution.  Frequency differences
beyond the resolved band are dropped rather than wrapped, and the unpaired
Nyquist mode is excluded everywhere so real symbols give real output.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dno import EllipticProblem, DEFAULT_TOL, check_radius, trace_velocities

REALITY_TOL = 1e-12
MOLLIFIER_RANK = 8
MOLLIFIER_CERT_TOL = 1e-10


def smoothstep(t):
    """C^2 ramp from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@dataclass(frozen=True)
class CutoffPair:
    eps1: float = 0.1
    eps2: float = 0.5

    def __post_init__(self):
        if not 0 < self.eps1 < self.eps2 < 1:
            raise ValueError("cutoffs need 0 < eps1 < eps2 < 1")

    def chi(self, theta, zeta):
        theta, zeta = np.broadcast_arrays(np.abs(theta), np.abs(zeta))
        out = np.zeros(theta.shape)
        nz = zeta > 0
        ratio = theta[nz] / zeta[nz]
        out[nz] = 1.0 - smoothstep((ratio - self.eps1) / (self.eps2 - self.eps1))
        return out

    def phi(self, zeta):
        return smoothstep(2.0 * np.abs(zeta) - 1.0)


DEFAULT_CUT = CutoffPair()


# multipliers used by the symbols ----------------------------------------------

def abs_pow(p):
    def m(xi):
        a = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(a)
        nz = a > 0
        out[nz] = a[nz] ** p
        return out
    return m


def sgn_abs_pow(p):
    """``i sgn(xi) |xi|^p``."""
    base = abs_pow(p)
    return lambda xi: 1j * np.sign(xi) * base(xi)


def one(xi):
    return np.ones(np.shape(xi))


def i_xi(xi):
    return 1j * np.asarray(xi, dtype=float)


@dataclass
class SeparableSymbol:
    """``a(z, xi) = sum c(z) m(xi)`` over ``terms``; ``order`` is declared."""

    terms: list
    order: float
    name: str = ""
    rate: float = 0.0   # declared factor exp(-rate z) not carried by the coefficients
    extra: dict = field(default_factory=dict)

    def evaluate(self, xi):
        """Samples ``a(z_j, xi)`` as an array of shape ``(N, len(xi))``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return sum(np.multiply.outer(np.asarray(c), np.asarray(m(xi), dtype=complex))
                   for c, m in self.terms)

    def __add__(self, other):
        return SeparableSymbol(self.terms + other.terms, max(self.order, other.order))

    def scaled(self, s):
        return SeparableSymbol([(s * c, m) for c, m in self.terms], self.order, self.name)


def coefficient_symbol(c, name=""):
    """Order-zero symbol ``a(z, xi) = c(z)``."""
    return SeparableSymbol([(np.asarray(c, dtype=float), one)], 0.0, name)


# operator application -------------------------------------------------------

@lru_cache(maxsize=16)
def _layout(N, L, cut):
    """Centered mode list, difference indices, cutoffs for one grid."""
    half = N // 2
    k = np.arange(-(half - 1), half)
    d = k[:, None] - k[None, :]
    valid = np.abs(d) <= half - 1
    xi = np.pi * k / L
    chi = cut.chi(np.pi * d / L, xi[None, :]) * valid
    phi = cut.phi(xi)
    idx = np.where(valid, d, 0) % N
    return k, xi, chi, phi, idx


def paraop_apply(grid, a, u, cut=DEFAULT_CUT, real=True):
    """``T_a u`` on the grid.

    With ``real=True`` the imaginary part of the result is checked against
    ``1e-12`` times its size and dropped.
    """
    u = grid.check(u)
    for c, _ in a.terms:
        grid.check(np.broadcast_to(c, (grid.N,)))
    N = grid.N
    k, xi, chi, phi, idx = _layout(N, grid.L, cut)
    u_hat = np.fft.fft(u) / N
    u_c = u_hat[k % N] * phi
    out_c = np.zeros(k.size, dtype=complex)
    for c, m in a.terms:
        c_hat = np.fft.fft(np.broadcast_to(c, (N,))) / N
        c_hat[N // 2] = 0.0
        mv = np.asarray(m(xi), dtype=complex)
        out_c += (chi * c_hat[idx]) @ (mv * u_c)
    out_hat = np.zeros(N, dtype=complex)
    out_hat[k % N] = out_c
    out = np.fft.ifft(out_hat) * N
    if not real:
        return out
    scale = max(1.0, float(np.max(np.abs(out))))
    resid = float(np.max(np.abs(out.imag)))
    if resid > REALITY_TOL * scale:
        raise ValueError(f"paraproduct output has imaginary part {resid:.2e}")
    return out.real


def low_pass(grid, u, cut=DEFAULT_CUT):
    """``(1 - phi(D)) u``: the part that every paraproduct discards."""
    return grid.apply_multiplier(u, lambda xi: 1.0 - cut.phi(xi))


# symbols --------------------------------------------------------------------

def _geometry(grid, eta):
    eta = check_radius(grid.check(eta))
    return eta, grid.derivative(eta), grid.derivative(eta, 2)


def symbol_lambda(grid, eta):
    """``|xi| - (1 + 2 eta_z^2 + i eta_z^3 sgn(xi)) / (2 eta)``."""
    eta, ez, _ = _geometry(grid, eta)
    terms = [
        (np.ones(grid.N), abs_pow(1.0)),
        (-(1.0 + 2.0 * ez ** 2) / (2.0 * eta), one),
        (-ez ** 3 / (2.0 * eta), sgn_abs_pow(0.0)),
    ]
    return SeparableSymbol(terms, 1.0, "lambda")


def lambda_zero_real(grid, eta):
    eta, ez, _ = _geometry(grid, eta)
    return -(1.0 + 2.0 * ez ** 2) / (2.0 * eta)


def ell_first_order_coeff(eta, ez, ezz):
    return ez * (3.0 * eta * ezz - 1.0 - ez ** 2) / (2.0 * eta * (1.0 + ez ** 2) ** 2.5)


def symbol_ell(grid, eta):
    """Curvature symbol of orders 2 and 1, plus the zeroth-order field."""
    eta, ez, ezz = _geometry(grid, eta)
    ell = SeparableSymbol([
        (1.0 / (2.0 * (1.0 + ez ** 2) ** 1.5), abs_pow(2.0)),
        (ell_first_order_coeff(eta, ez, ezz), i_xi),
    ], 2.0, "ell")
    ell0 = 1.0 / (2.0 * eta ** 2 * np.sqrt(1.0 + ez ** 2))
    return ell, ell0


def q_factor(grid, eta, R, reciprocal=False):
    """Periodic part of ``q`` and the declared linear rate of its exponent.

    The antiderivative of ``eta_z^3 / (6 eta)`` starts at ``z = 0``; its
    mean slope ``rate`` is kept out of the periodic coefficient, so the
    full factor is ``q_periodic(z) exp(-rate z)``.

    ``reciprocal=True`` returns ``1/q`` instead (rate negated).  That is the
    factor for which ``T_p T_lambda - T_gamma T_q`` stays bounded on curved
    surfaces; with the default the difference grows like ``|xi|^{1/2}``.
    """
    eta, ez, _ = _geometry(grid, eta)
    f = ez ** 3 / (6.0 * eta)
    rate = float(np.mean(f))
    c = grid.forward(f - rate)
    xi = grid.xi
    with np.errstate(divide="ignore", invalid="ignore"):
        anti = np.where(xi != 0, c / (1j * xi), 0.0)
    anti[grid.nyquist] = 0.0
    F = grid.inverse(anti)
    F = F - F[0]
    q = R ** (1.0 / 3.0) * eta ** (-1.0 / 3.0) * (1.0 + ez ** 2) ** -0.25 * np.exp(-F)
    if reciprocal:
        return 1.0 / q, -rate
    return q, rate


@dataclass
class Symmetrizer:
    p: SeparableSymbol
    q: SeparableSymbol
    gamma: SeparableSymbol
    gamma_principal: np.ndarray     # W(z): gamma^(3/2) = W |xi|^{3/2}
    q_field: np.ndarray


def symmetrizer_symbols(grid, eta, R, reciprocal_q=False):
    """Symbols ``p`` (orders 1/2, -1/2), ``q`` (order 0), ``gamma`` (3/2, 1/2)."""
    eta, ez, ezz = _geometry(grid, eta)
    d = grid.derivative
    W = (1.0 + ez ** 2) ** -0.75 / np.sqrt(2.0)
    W_z = d(W)
    lam0 = -(1.0 + 2.0 * ez ** 2) / (2.0 * eta)
    g_re = W * lam0 / 2.0           # coefficient of |xi|^{1/2}
    g_im = -0.75 * W_z              # coefficient of i sgn(xi) |xi|^{1/2}
    gamma = SeparableSymbol([
        (W, abs_pow(1.5)),
        (g_re, abs_pow(0.5)),
        (g_im, sgn_abs_pow(0.5)),
    ], 1.5, "gamma")

    qf, rate = q_factor(grid, eta, R, reciprocal_q)
    q = SeparableSymbol([(qf, one)], 0.0, "q", rate=rate)

    c1 = ell_first_order_coeff(eta, ez, ezz)
    qW = qf * W
    p = SeparableSymbol([
        (qW, abs_pow(0.5)),
        (-g_re * qf, abs_pow(-0.5)),
        (c1 * qf / W - g_im * qf + 1.5 * d(qW), sgn_abs_pow(-0.5)),
    ], 0.5, "p", rate=rate)
    return Symmetrizer(p, q, gamma, W, qf)


# composite diagnostics ------------------------------------------------------

def good_unknown(grid, eta, psi, B, cut=DEFAULT_CUT):
    """``psi - T_B eta``."""
    return np.asarray(psi, dtype=float) - paraop_apply(grid, coefficient_symbol(B), eta, cut)


def paralin_residual(grid, eta, psi, cut=DEFAULT_CUT, M=None, tol=DEFAULT_TOL):
    """``G psi - T_lambda U + T_V eta_z`` with the good unknown ``U``."""
    prob = EllipticProblem(grid, eta, M)
    G = prob.dn(psi, tol)
    tv = trace_velocities(grid, prob.eta, psi, G)
    U = good_unknown(grid, prob.eta, psi, tv.B, cut)
    lam = symbol_lambda(grid, prob.eta)
    return (G - paraop_apply(grid, lam, U, cut)
            + paraop_apply(grid, coefficient_symbol(tv.V), prob.eta_z, cut))


def wave_packet(grid, K, width=2.0, center=None):
    """Gaussian-windowed carrier ``cos(K z)`` centered in the period."""
    c = grid.L if center is None else center
    return np.exp(-0.5 * ((grid.z - c) / width) ** 2) * np.cos(K * grid.z)


def symmetrizer_residual(grid, eta, R, K, cut=DEFAULT_CUT, width=2.0, reciprocal_q=False):
    """Relative residuals of ``T_p T_lambda ~ T_gamma T_q`` and ``T_q T_ell ~ T_gamma T_p``."""
    sym = symmetrizer_symbols(grid, eta, R, reciprocal_q)
    lam = symbol_lambda(grid, eta)
    ell, _ = symbol_ell(grid, eta)
    u = wave_packet(grid, K, width)
    T = lambda a, v: paraop_apply(grid, a, v, cut)
    nu = np.linalg.norm(u)
    r1 = np.linalg.norm(T(sym.p, T(lam, u)) - T(sym.gamma, T(sym.q, u))) / nu
    r2 = np.linalg.norm(T(sym.q, T(ell, u)) - T(sym.gamma, T(sym.p, u))) / nu
    return float(r1), float(r2)


def operator_growth(grid, a, Ks, cut=DEFAULT_CUT, width=2.0):
    """``||T_a u_K|| / ||u_K||`` and the fitted log-log exponent over ``Ks``."""
    ratios = []
    for K in Ks:
        u = wave_packet(grid, K, width)
        ratios.append(np.linalg.norm(paraop_apply(grid, a, u, cut)) / np.linalg.norm(u))
    ratios = np.array(ratios)
    slope = np.polyfit(np.log(Ks), np.log(ratios), 1)[0]
    return ratios, float(slope)


# mollifier --------------------------------------------------------------------

def mollifier_symbol(grid, eta, eps, rank=MOLLIFIER_RANK, cert_tol=MOLLIFIER_CERT_TOL):
    """Rank-``rank`` separable form of ``exp(-eps w(z) |xi|^{3/2} / sqrt 2)``.

    ``w = (1 + eta_z^2)^{-3/4}`` is mapped onto ``[-1, 1]`` and the
    exponential is expanded in Chebyshev polynomials of that variable.
    The expansion is checked pointwise on the grid's ``w`` values and on a
    dense sample of its range; ``ValueError`` if it misses ``cert_tol``.
    """
    eta, ez, _ = _geometry(grid, eta)
    w = (1.0 + ez ** 2) ** -0.75
    lo, hi = float(w.min()), float(w.max())
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    alpha = lambda xi: eps * np.abs(np.asarray(xi, dtype=float)) ** 1.5 / np.sqrt(2.0)
    if half <= 1e-15 * max(1.0, mid):
        return SeparableSymbol([(np.ones(grid.N), lambda xi: np.exp(-alpha(xi) * mid))],
                               0.0, "mollifier")
    nodes = np.cos(np.pi * (np.arange(rank) + 0.5) / rank)
    basis = np.polynomial.chebyshev.chebvander(nodes, rank - 1)   # (rank, rank)

    def coeffs(xi):
        vals = np.exp(-np.multiply.outer(mid + half * nodes, alpha(xi)))
        c = (2.0 / rank) * basis.T @ vals
        c[0] *= 0.5
        return c

    s_grid = (w - mid) / half
    T_grid = np.polynomial.chebyshev.chebvander(s_grid, rank - 1).T   # (rank, N)
    s_dense = np.linspace(-1.0, 1.0, 201)
    xi = grid.xi
    for s in (s_grid, s_dense):
        V = np.polynomial.chebyshev.chebvander(s, rank - 1)
        approx = V @ coeffs(xi)
        exact = np.exp(-np.multiply.outer(mid + half * s, alpha(xi)))
        err = float(np.max(np.abs(approx - exact)))
        if err > cert_tol:
            raise ValueError(f"rank-{rank} mollifier expansion error {err:.2e} exceeds {cert_tol:.0e}")
    terms = [(T_grid[j], (lambda xi, j=j: coeffs(xi)[j])) for j in range(rank)]
    return SeparableSymbol(terms, 0.0, "mollifier")


def apply_mollifier(grid, u, eps, eta, cut=None):
    """``T_J u`` plus the low-frequency part that the paraproduct removes."""
    cut = DEFAULT_CUT if cut is None else cut
    sym = mollifier_symbol(grid, eta, eps)
    return paraop_apply(grid, sym, u, cut) + low_pass(grid, u, cut)
