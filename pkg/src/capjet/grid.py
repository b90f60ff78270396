"""Periodic Fourier collocation grid.

Real fields are plain ``numpy`` arrays of length ``N`` sampled at
``z_j = j*dz``; spectral fields are complex arrays in ``numpy.fft`` order.
The forward transform carries the ``1/N`` factor, so a field ``cos(k z)``
has coefficients ``1/2`` at ``+-k``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, InvalidGrid, NonHermitianMultiplier, OddPointCount

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, 2L)`` with ``N`` points."""

    L: float
    N: int
    z: np.ndarray = field(init=False, repr=False, compare=False)
    xi: np.ndarray = field(init=False, repr=False, compare=False)
    modes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        z = np.arange(self.N) * self.dz
        modes = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)
        xi = np.pi * modes / self.L
        for name, arr in (("z", z), ("modes", modes), ("xi", xi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dz(self):
        return 2.0 * self.L / self.N

    @property
    def period(self):
        return 2.0 * self.L

    @property
    def xi_max(self):
        return np.pi * (self.N // 2) / self.L

    @property
    def nyquist(self):
        """Index of the unpaired mode ``-N/2`` in fft order."""
        return self.N // 2

    def check(self, u):
        u = np.asarray(u)
        if u.shape[-1] != self.N:
            raise GridMismatch(f"field has {u.shape[-1]} samples, grid has {self.N}")
        return u

    # transforms -----------------------------------------------------------
    def forward(self, u):
        return np.fft.fft(self.check(u), axis=-1) / self.N

    def inverse(self, c, real=True):
        u = np.fft.ifft(self.check(c), axis=-1) * self.N
        return u.real if real else u

    def apply_multiplier(self, u, m, real=None):
        """Multiply the Fourier coefficients of ``u`` by ``m(xi)``.

        ``u`` may be a real field or a spectral array (complex input is
        treated as spectral and returned as spectral).  For real input the
        multiplier must satisfy ``m(-xi) = conj(m(xi))``; the unpaired
        Nyquist mode receives ``Re[(m(xi_N) + m(-xi_N))/2]``, which keeps
        even multipliers and zeroes odd ones.
        """
        u = np.asarray(u)
        spectral = np.iscomplexobj(u)
        if real is None:
            real = not spectral
        c = u if spectral else self.forward(u)
        mv = np.broadcast_to(np.asarray(m(self.xi), dtype=complex), (self.N,)).copy()
        if not np.all(np.isfinite(mv)):
            raise ValueError("multiplier is not finite on the grid")
        if real:
            self._check_hermitian(mv)
            nyq = self.nyquist
            m_plus = complex(np.asarray(m(np.array([-self.xi[nyq]])), dtype=complex).ravel()[0])
            mv[nyq] = 0.5 * (mv[nyq] + m_plus).real
        out = c * mv
        if spectral:
            return out
        return self.inverse(out, real=real)

    def _check_hermitian(self, mv):
        k = np.arange(1, self.N // 2)
        a, b = mv[k], mv[-k]
        scale = max(1.0, float(np.max(np.abs(mv))))
        if mv[0].imag != 0 and abs(mv[0].imag) > HERMITIAN_TOL * scale:
            raise NonHermitianMultiplier("m(0) must be real for a real result")
        if np.any(np.abs(a - np.conj(b)) > HERMITIAN_TOL * scale):
            raise NonHermitianMultiplier("m(-xi) != conj(m(xi)) on the grid")

    # derived operations ---------------------------------------------------
    def derivative(self, u, order=1):
        """Spectral derivative with the Nyquist mode zeroed."""
        c = self.forward(u)
        c = c * (1j * self.xi) ** order
        c[..., self.nyquist] = 0.0
        return self.inverse(c)

    def sobolev_norm(self, u, s):
        """Discrete H^s norm, ``sqrt(2L * sum (1+xi^2)^s |c_k|^2)``.

        For ``s = 0`` this equals the trapezoid L2 norm over one period.
        """
        c = self.forward(u)
        w = (1.0 + self.xi ** 2) ** s
        return float(np.sqrt(self.period * np.sum(w * np.abs(c) ** 2, axis=-1)))

    def dealias(self, u):
        """Two-thirds rule: zero every mode with ``|k| > N/3``."""
        c = self.forward(u)
        c[..., np.abs(self.modes) > self.N / 3.0] = 0.0
        return self.inverse(c)

    def shift(self, u, z0):
        """Return ``u(z - z0)`` by a spectral phase shift."""
        return self.apply_multiplier(u, lambda xi: np.exp(-1j * xi * z0))

    def integrate(self, u):
        """Trapezoid (spectrally exact) integral over one period."""
        return float(np.sum(u, axis=-1) * self.dz)

    def mode_amplitude(self, u, k):
        """Cosine amplitude of integer mode ``k``: ``2|c_k|`` (``|c_0|`` for k=0)."""
        c = self.forward(u)
        amp = np.abs(c[..., k % self.N])
        return amp if k == 0 else 2.0 * amp


def make_grid(L, N):
    if int(N) != N:
        raise InvalidGrid("point count must be an integer")
    N = int(N)
    if N % 2:
        raise OddPointCount(f"N must be even, got {N}")
    if N < 8:
        raise InvalidGrid(f"N must be at least 8, got {N}")
    if not (L > 0 and np.isfinite(L)):
        raise InvalidGrid(f"half period must be positive, got {L}")
    return Grid(float(L), N)
