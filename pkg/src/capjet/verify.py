"""Self-checks run by ``capjet verify``.

Each suite returns a list of :class:`Check` rows (measured value, tolerance,
pass flag).  Sizes are chosen so the whole set runs in a few minutes.
"""
from dataclasses import dataclass

import numpy as np

from . import bessel, dno, linstab, paradiff
from .dynamics import JetState, StepOptions, gravity_transform, integrate, stability_dt
from .grid import make_grid

FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    measured: float
    tolerance: float
    relation: str = "<="

    @property
    def passed(self):
        if not np.isfinite(self.measured):
            return False
        if self.relation == "<=":
            return self.measured <= self.tolerance
        return self.measured >= self.tolerance


BESSEL_K = range(5)
BESSEL_Y = np.round(np.arange(1, 21) * 0.05, 10)
BESSEL_X = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 500.0)


def suite_bessel():
    # pointwise bound in logs: log r^2 + 2 (1 - y) log I0(x) <= 0
    excess = -np.inf
    for k in BESSEL_K:
        for x in BESSEL_X:
            r = np.abs(bessel.ratio_i0k(k, BESSEL_Y, x))
            val = 2.0 * np.log(r) + 2.0 * (1.0 - BESSEL_Y) * bessel.log_i0(x)
            excess = max(excess, float(np.max(val)))
    first = max(bessel.ratio_sq_integral(k, x) for k in BESSEL_K for x in BESSEL_X)
    second = max(bessel.ratio_sq_integral(k, x, weight_x=True) for k in BESSEL_K for x in BESSEL_X)
    return [
        Check("bessel", "pointwise ratio bound (log excess)", excess, FLOAT_SLACK),
        Check("bessel", "max int |ratio|^2 dy", first, 1.0),
        Check("bessel", "max |x| int |ratio|^2 dy", second, 3.0),
    ]


def flat_oracle_errors(N=128, Ms=(256, 512), tol=1e-10, R=1.0):
    g = make_grid(np.pi, N)
    psi = np.sin(g.z) + 0.3 * np.cos(3 * g.z)
    exact = dno.dn_flat(g, R, psi)
    errs = []
    for M in Ms:
        G = dno.dn_general(g, np.full(N, R), psi, M, tol)
        errs.append(float(np.linalg.norm(G - exact) / np.linalg.norm(exact)))
    return errs


def suite_dno():
    e1, e2 = flat_oracle_errors()
    return [
        Check("dno", "flat oracle discrepancy N=128 M=256", e1, 5e-6),
        Check("dno", "error reduction when M doubles", e1 / e2, 3.5, ">="),
    ]


def shape_consistency(N=64, M=1024, tol=1e-13, eps=(1e-2, 1e-3, 1e-4)):
    g = make_grid(np.pi, N)
    eta = 1.0 + 0.1 * np.cos(g.z)
    psi = np.sin(g.z)
    h = np.cos(2 * g.z)
    prob = dno.EllipticProblem(g, eta, M)
    d = dno.shape_derivative(g, eta, psi, h, tol=tol, problem=prob)
    G0 = prob.dn(psi, tol)
    fds = [(dno.dn_general(g, eta + e * h, psi, M, tol) - G0) / e for e in eps]
    errs = [np.linalg.norm(fd - d) / np.linalg.norm(d) for fd in fds]
    order = float(np.polyfit(np.log(eps), np.log(errs), 1)[0])
    # first-order Richardson on the two smallest steps (ratio 10)
    extrap = (10.0 * fds[-1] - fds[-2]) / 9.0
    mismatch = float(np.linalg.norm(extrap - d) / np.linalg.norm(d))
    return order, mismatch, errs


def suite_shape():
    order, mismatch, _ = shape_consistency()
    return [
        Check("shape", "finite-difference order", order, 0.9, ">="),
        Check("shape", "extrapolated relative mismatch", mismatch, 1e-4),
    ]


def energy_drift(N=16, k=2, a=1e-3, periods=10, dt_factor=1.0, tol=1e-13):
    R = 1.0
    g = make_grid(np.pi * R, N)   # mode index k has xi R = k
    omega = np.sqrt(-linstab.growth_rate(R, 1.0, k / R).sigma2)
    horizon = periods * 2 * np.pi / omega
    st = JetState(g, 0.0, R + a * np.cos(k * g.z), np.zeros(N))
    dt = stability_dt(g, 1.0) * dt_factor
    tr = integrate(st, dt, horizon, StepOptions(tol=tol), save_every=horizon, diag_every=10)
    E = tr.column("E")
    return float(np.max(np.abs(E - E[0])) / abs(E[0]))


def suite_energy():
    d1 = energy_drift()
    d2 = energy_drift(dt_factor=0.5)
    return [
        Check("energy", "relative drift over 10 periods", d1, 1e-6),
        Check("energy", "drift reduction when dt halves", d1 / max(d2, 1e-300), 10.0, ">="),
    ]


def gravity_mismatch(N=32, a=1e-2, g_acc=0.5, periods=1.0, tol=1e-12):
    R = 1.0
    g = make_grid(np.pi / 2, N)   # mode 1 has xi R = 2
    omega = np.sqrt(-linstab.growth_rate(R, 1.0, 2.0).sigma2)
    horizon = periods * 2 * np.pi / omega
    st = JetState(g, 0.0, R + a * np.cos(2 * g.z), np.zeros(N))
    dt = stability_dt(g, 1.0)
    opts = StepOptions(tol=tol)
    base = integrate(st, dt, horizon, opts, diag_every=10 ** 9)
    direct = integrate(JetState(g, 0.0, st.eta, st.psi, R, 1.0, g_acc), dt, horizon, opts,
                       diag_every=10 ** 9)
    moved = gravity_transform(base, g_acc, opts)
    return max(float(np.max(np.abs(s.eta - m.eta))) for s, m in zip(direct.states, moved.states))


def suite_gravity():
    return [Check("gravity", "sup |eta_direct - eta_transformed| / R", gravity_mismatch(periods=0.5), 1e-6)]


def suite_paradiff():
    g = make_grid(4 * np.pi, 1024)
    R = 1.0
    rng = np.random.default_rng(1)
    eta = R * (1.0 + 0.1 * np.cos(g.z / 2))
    lam = paradiff.symbol_lambda(g, eta)
    const = float(np.max(np.abs(paradiff.paraop_apply(g, lam, np.full(g.N, 3.7)))))
    f = g.dealias(rng.standard_normal(g.N))
    c = 2.5
    lhs = paradiff.paraop_apply(g, paradiff.coefficient_symbol(np.full(g.N, c)), f)
    rhs = c * g.apply_multiplier(f, paradiff.DEFAULT_CUT.phi)
    const_symbol = float(np.max(np.abs(lhs - rhs)))
    ratios = []
    for K in (8, 16, 32):
        r1, _ = paradiff.symmetrizer_residual(g, np.full(g.N, R), R, K)
        ratios.append(r1 / K ** 1.5)
    drop = min(ratios[i] / ratios[i + 1] for i in range(len(ratios) - 1))
    checks = [
        Check("paradiff", "T_a annihilates constants", const, 1e-12),
        Check("paradiff", "constant symbol equals c phi(D)", const_symbol, 1e-12),
        Check("paradiff", "flat r1/K^1.5 drop per doubling", drop, 2.0, ">="),
    ]
    sym = paradiff.symmetrizer_symbols(g, eta, R)
    ell, _ = paradiff.symbol_ell(g, eta)
    for a in (lam, ell, sym.p, sym.q, sym.gamma):
        _, slope = paradiff.operator_growth(g, a, [4, 8, 16, 32, 64])
        checks.append(Check("paradiff", f"order of {a.name} (fit - declared)",
                            abs(slope - a.order), 0.2))
    return checks


SUITES = {
    "bessel": suite_bessel,
    "dno": suite_dno,
    "shape": suite_shape,
    "energy": suite_energy,
    "gravity": suite_gravity,
    "paradiff": suite_paradiff,
}


def run_suites(names):
    if "all" in names:
        names = list(SUITES)
    checks = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}")
        checks.extend(SUITES[name]())
    return checks


def report_text(checks):
    width = max(len(c.name) for c in checks) if checks else 10
    lines = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{status}  {c.suite:<9} {c.name:<{width}}  {c.measured:.6g} {c.relation} {c.tolerance:.6g}")
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"
