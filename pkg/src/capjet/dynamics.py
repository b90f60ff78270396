"""Time evolution of the jet in the surface variables ``(eta, psi)``.

    eta_t = G[eta] psi
    psi_t = -psi_z^2/2 + (eta_z psi_z + G)^2 / (2 (1 + eta_z^2))
            + kappa (H(eta) + 1/(2R))

Gravity along the axis adds ``g z`` to ``psi_t``.  That term is not periodic,
so in gravity mode the potential is stored as ``psi(z) + slope * z`` with a
periodic ``psi`` and ``d(slope)/dt = g``.  Because ``G[eta](z) = -eta_z``
exactly, the offset enters the equations only through ``psi_z + slope``.
"""
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .dno import DEFAULT_TOL, EllipticProblem
from .errors import NonpositiveRadius, StepRejected
from .grid import make_grid
from .surface import hamiltonian_energy, mean_curvature

CFL_DEFAULT = 0.5
FLOOR_FRACTION = 1e-6


@dataclass(frozen=True)
class JetState:
    grid: object
    t: float
    eta: np.ndarray
    psi: np.ndarray             # periodic part of the potential
    R: float = 1.0
    kappa: float = 1.0
    g: float = 0.0
    slope: float = 0.0          # psi_total = psi + slope * z

    def __post_init__(self):
        for name in ("eta", "psi"):
            arr = np.array(self.grid.check(getattr(self, name)), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.R <= 0:
            raise NonpositiveRadius("reference radius must be positive")

    @property
    def floor(self):
        return FLOOR_FRACTION * self.R

    def with_fields(self, t, eta, psi, slope=None):
        return replace(self, t=t, eta=eta, psi=psi,
                       slope=self.slope if slope is None else slope)


def equilibrium(grid, R=1.0, kappa=1.0, g=0.0):
    return JetState(grid, 0.0, np.full(grid.N, float(R)), np.zeros(grid.N), R, kappa, g)


@dataclass(frozen=True)
class StepOptions:
    M: int = None
    tol: float = DEFAULT_TOL
    dealias: bool = True
    mollify_eps: float = 0.0
    mollify_mode: str = "flat"
    mollify_rhs: bool = False   # also wrap rhs as J F(J u)


def stability_dt(grid, kappa, cfl=CFL_DEFAULT):
    """Largest step allowed by the capillary dispersion ``|w| ~ sqrt(kappa/2) xi^1.5``."""
    if kappa <= 0:
        return np.inf
    return cfl * np.sqrt(2.0 / kappa) * grid.xi_max ** -1.5


# right-hand side -------------------------------------------------------------

@dataclass(frozen=True)
class RhsParts:
    eta_t: np.ndarray
    psi_t: np.ndarray
    G: np.ndarray               # G[eta] applied to the full potential


def rhs_parts(state, options=StepOptions()):
    grid = state.grid
    eta, R = state.eta, state.R
    if eta.min() <= state.floor:
        raise NonpositiveRadius(f"min radius {eta.min():.3e} at t = {state.t}")
    prob = EllipticProblem(grid, eta, options.M, R)
    eta_z = prob.eta_z
    G = prob.dn(state.psi, options.tol) - state.slope * eta_z
    psi_z = grid.derivative(state.psi) + state.slope
    kinetic = -0.5 * psi_z ** 2 + (eta_z * psi_z + G) ** 2 / (2.0 * (1.0 + eta_z ** 2))
    if options.dealias:
        kinetic = grid.dealias(kinetic)
    psi_t = kinetic
    if state.kappa:
        psi_t = psi_t + state.kappa * (mean_curvature(grid, eta, R) + 0.5 / R)
    return RhsParts(G, psi_t, G)


def rhs(state, options=StepOptions()):
    """``(eta_t, psi_t)`` for the periodic fields; the slope obeys ``slope_t = g``.

    With ``options.mollify_rhs`` and a positive ``mollify_eps`` the fields
    are smoothed before evaluation and the result is smoothed again.
    """
    eps = options.mollify_eps
    if not (options.mollify_rhs and eps > 0):
        parts = rhs_parts(state, options)
        return parts.eta_t, parts.psi_t
    grid, mode = state.grid, options.mollify_mode
    J = lambda u: mollify(grid, u, eps, state.eta, mode)
    parts = rhs_parts(state.with_fields(state.t, J(state.eta), J(state.psi)), options)
    return J(parts.eta_t), J(parts.psi_t)


def bernoulli_velocity_form(state, G):
    """``psi_t`` written with the surface velocities: ``-V psi_z + (V^2 + B^2)/2 + ...``."""
    grid = state.grid
    eta_z = grid.derivative(state.eta)
    psi_z = grid.derivative(state.psi) + state.slope
    B = (eta_z * psi_z + G) / (1.0 + eta_z ** 2)
    V = psi_z - B * eta_z
    out = -V * psi_z + 0.5 * (V ** 2 + B ** 2)
    if state.kappa:
        out = out + state.kappa * (mean_curvature(grid, state.eta, state.R) + 0.5 / state.R)
    return out


# mollifier -------------------------------------------------------------------

def mollify(grid, u, eps, eta=None, mode="flat", cut=None):
    """Smooth ``u`` with ``exp(-eps |xi|^1.5 / (sqrt 2 (1 + eta_z^2)^0.75))``.

    ``flat`` drops the slope factor and is a plain Fourier multiplier.
    ``full`` quantizes the variable symbol paradifferentially; modes below
    the paraproduct low-frequency cut pass through unchanged so that
    constants are preserved.
    """
    if eps < 0:
        raise ValueError("mollifier strength must be nonnegative")
    if eps == 0:
        return np.array(u, dtype=float)
    if mode == "flat":
        return grid.apply_multiplier(u, lambda xi: np.exp(-eps * np.abs(xi) ** 1.5 / np.sqrt(2.0)))
    if mode == "full":
        from . import paradiff
        if eta is None:
            raise ValueError("full mollifier needs the surface eta")
        return paradiff.apply_mollifier(grid, u, eps, eta, cut)
    raise ValueError(f"unknown mollifier mode {mode!r}")


# time stepping ---------------------------------------------------------------

def step_rk4(state, dt, options=StepOptions()):
    """One classical Runge-Kutta step of the periodic fields and the slope."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    grid = state.grid

    def stage(eta, psi, slope, t):
        s = state.with_fields(t, eta, psi, slope)
        try:
            return rhs(s, options)
        except NonpositiveRadius as exc:
            raise StepRejected(f"pinch-off inside the step from t = {state.t}: {exc}") from exc

    g = state.g
    e0, p0, s0, t0 = state.eta, state.psi, state.slope, state.t
    k1 = stage(e0, p0, s0, t0)
    k2 = stage(e0 + 0.5 * dt * k1[0], p0 + 0.5 * dt * k1[1], s0 + 0.5 * dt * g, t0 + 0.5 * dt)
    k3 = stage(e0 + 0.5 * dt * k2[0], p0 + 0.5 * dt * k2[1], s0 + 0.5 * dt * g, t0 + 0.5 * dt)
    k4 = stage(e0 + dt * k3[0], p0 + dt * k3[1], s0 + dt * g, t0 + dt)
    eta = e0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    psi = p0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    if options.mollify_eps > 0:
        eta = mollify(grid, eta, options.mollify_eps, eta, options.mollify_mode)
        psi = mollify(grid, psi, options.mollify_eps, eta, options.mollify_mode)
    if eta.min() <= state.floor:
        raise StepRejected(f"min radius {eta.min():.3e} below the floor at t = {t0 + dt}")
    return state.with_fields(t0 + dt, eta, psi, s0 + dt * g)


# diagnostics and trajectories ------------------------------------------------

def diagnostics(state, options=StepOptions(), sobolev_s=3.0, modes=()):
    grid = state.grid
    G = EllipticProblem(grid, state.eta, options.M, state.R).dn(state.psi, options.tol)
    row = {
        "t": state.t,
        "E": hamiltonian_energy(grid, state, G),
        "min_eta": float(state.eta.min()),
        f"H{sobolev_s:g}_eta": grid.sobolev_norm(state.eta - state.R, sobolev_s),
        f"H{sobolev_s:g}_psi": grid.sobolev_norm(state.psi, sobolev_s),
    }
    for k in modes:
        row[f"amp_{k}"] = float(grid.mode_amplitude(state.eta, k))
    return row


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    outcome: str = "completed"
    stop_time: float = None

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    def column(self, name):
        return np.array([r[name] for r in self.records])

    def append_state(self, state):
        if self.states and not state.t > self.states[-1].t:
            raise ValueError("snapshot times must increase strictly")
        self.states.append(state)


def integrate(state, dt, horizon, options=StepOptions(), save_every=None,
              diag_every=1, sobolev_s=3.0, modes=(), callback=None):
    """Advance ``state`` to ``state.t + horizon`` in equal steps no longer than ``dt``.

    Snapshots are kept every ``save_every`` time units (every step when
    ``None``); diagnostics every ``diag_every`` steps.  A pinch-off ends
    the run early with ``outcome = "pinch-off"``.
    """
    traj = Trajectory()
    traj.append_state(state)
    traj.records.append(diagnostics(state, options, sobolev_s, modes))
    if horizon <= 0:
        traj.stop_time = state.t
        return traj
    nsteps = max(1, int(np.ceil(horizon / dt - 1e-9)))
    h = horizon / nsteps
    save_stride = 1 if save_every is None else max(1, int(round(save_every / h)))
    t0 = state.t
    for n in range(1, nsteps + 1):
        try:
            new = step_rk4(state, h, options)
        except (StepRejected, NonpositiveRadius):
            traj.outcome = "pinch-off"
            traj.stop_time = state.t
            if traj.states[-1] is not state:
                traj.append_state(state)
            return traj
        state = replace(new, t=t0 + n * h)
        if n % diag_every == 0 or n == nsteps:
            traj.records.append(diagnostics(state, options, sobolev_s, modes))
        if n % save_stride == 0 or n == nsteps:
            traj.append_state(state)
        if callback is not None:
            callback(state)
    traj.stop_time = state.t
    return traj


def run(config):
    """Integrate a validated simulation config (see ``capjet.config``)."""
    state = config.initial_state()
    dt = config.time_step()
    return integrate(state, dt, config.horizon, config.step_options(),
                     save_every=config.save_every, diag_every=config.diag_every,
                     sobolev_s=config.sobolev_s, modes=config.modes)


# gravity frame ---------------------------------------------------------------

def gravity_state(state, g):
    """Map a ``g = 0`` state to the state of the same flow under gravity ``g``.

    ``eta`` and ``psi`` are shifted by ``g t^2 / 2`` downstream; the
    potential gains ``g t z - g^2 t^3 / 6``, stored as slope and constant.
    """
    if state.g != 0 or state.slope != 0:
        raise ValueError("source state must come from a run without gravity")
    t = state.t
    shift = 0.5 * g * t * t
    grid = state.grid
    if shift == 0.0:
        eta, psi = state.eta, state.psi
    else:
        eta, psi = grid.shift(state.eta, shift), grid.shift(state.psi, shift)
    return replace(state, eta=eta, psi=psi - g * g * t ** 3 / 6.0, g=g, slope=g * t)


def gravity_transform(traj, g, options=StepOptions(), sobolev_s=3.0, modes=()):
    out = Trajectory(outcome=traj.outcome, stop_time=traj.stop_time)
    for s in traj.states:
        gs = gravity_state(s, g)
        out.append_state(gs)
        out.records.append(diagnostics(gs, options, sobolev_s, modes))
    return out


# snapshots -------------------------------------------------------------------

SNAPSHOT_EXT = ".cjsnap"


def save_snapshot(path, state):
    header = {
        "L": state.grid.L, "N": state.grid.N, "t": state.t, "R": state.R,
        "kappa": state.kappa, "g": state.g, "slope": state.slope,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.asarray(state.eta, dtype="<f8").tobytes())
        fh.write(np.asarray(state.psi, dtype="<f8").tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        body = fh.read()
    N = int(header["N"])
    data = np.frombuffer(body, dtype="<f8")
    if data.size != 2 * N:
        raise ValueError(f"snapshot body holds {data.size} values, expected {2 * N}")
    grid = make_grid(header["L"], N)
    return JetState(grid, header["t"], data[:N].copy(), data[N:].copy(), header["R"],
                    header["kappa"], header["g"], header["slope"])
