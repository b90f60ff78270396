import numpy as np
import pytest
from dataclasses import replace

from capjet import dynamics as dyn
from capjet.dno import flat_multiplier
from capjet.errors import NonpositiveRadius, StepRejected
from capjet.grid import make_grid
from capjet.linstab import sigma_squared


def test_state_is_read_only(grid32):
    st = dyn.equilibrium(grid32)
    with pytest.raises(ValueError):
        st.eta[0] = 2.0
    st2 = st.with_fields(1.0, st.eta + 0.1, st.psi)
    assert st2.t == 1.0 and st2.R == st.R and st.eta[0] == 1.0


def test_state_rejects_bad_radius(grid32):
    with pytest.raises(NonpositiveRadius):
        dyn.JetState(grid32, 0.0, np.ones(32), np.zeros(32), R=0.0)


@pytest.mark.parametrize("R,kappa", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.0)])
def test_equilibrium_is_steady(grid32, R, kappa):
    eta_t, psi_t = dyn.rhs(dyn.equilibrium(grid32, R, kappa))
    assert np.max(np.abs(eta_t)) == 0.0
    assert np.max(np.abs(psi_t)) < 1e-13


def test_stability_dt():
    g = make_grid(np.pi, 32)
    assert dyn.stability_dt(g, 1.0, 0.5) == pytest.approx(0.5 * np.sqrt(2) * 16.0 ** -1.5)
    assert dyn.stability_dt(g, 0.0) == np.inf


def test_linearization_matches_dispersion(grid32):
    # finite-difference Jacobian of the Fourier block for mode k
    R, kappa, k, a = 1.0, 1.0, 3, 1e-6
    base = dyn.equilibrium(grid32, R, kappa)
    c = np.cos(k * grid32.z)
    opts = dyn.StepOptions(M=512, tol=1e-13)
    eta_t, _ = dyn.rhs(base.with_fields(0.0, base.eta, a * c), opts)
    _, psi_t = dyn.rhs(base.with_fields(0.0, base.eta + a * c, base.psi), opts)
    m = grid32.mode_amplitude(eta_t, k) / a
    p = -grid32.mode_amplitude(psi_t, k) / a     # stable mode: psi_t opposes eta
    assert m == pytest.approx(flat_multiplier(R, k), rel=1e-5)
    assert m * p == pytest.approx(sigma_squared(R, kappa, k), rel=1e-5)


def test_bernoulli_forms_agree(grid32):
    st = dyn.JetState(grid32, 0.0, 1 + 0.2 * np.cos(grid32.z), 0.3 * np.sin(2 * grid32.z))
    parts = dyn.rhs_parts(st, dyn.StepOptions(dealias=False, tol=1e-12))
    alt = dyn.bernoulli_velocity_form(st, parts.G)
    assert np.max(np.abs(parts.psi_t - alt)) < 1e-12


def test_rk4_fourth_order():
    g = make_grid(np.pi, 16)
    st = dyn.JetState(g, 0.0, 1 + 0.05 * np.cos(2 * g.z), 0.02 * np.sin(g.z))
    opts = dyn.StepOptions(M=32, tol=1e-13)
    T = 0.2

    def final(n):
        s = st
        for _ in range(n):
            s = dyn.step_rk4(s, T / n, opts)
        return np.concatenate([s.eta, s.psi])

    ref = final(64)
    e1 = np.max(np.abs(final(8) - ref))
    e2 = np.max(np.abs(final(16) - ref))
    assert np.log2(e1 / e2) > 3.5


def test_step_rejects_nonpositive_dt(grid32):
    with pytest.raises(ValueError):
        dyn.step_rk4(dyn.equilibrium(grid32), 0.0)


def test_mollify_flat_and_full(grid32):
    u = np.cos(grid32.z) + np.cos(12 * grid32.z) + 0.7
    assert np.array_equal(dyn.mollify(grid32, u, 0.0), u)
    out = dyn.mollify(grid32, u, 0.01)
    assert grid32.mode_amplitude(out, 12) == pytest.approx(np.exp(-0.01 * 12 ** 1.5 / np.sqrt(2)))
    assert grid32.forward(out)[0].real == pytest.approx(0.7)
    eta = 1 + 0.1 * np.cos(grid32.z)
    full = dyn.mollify(grid32, np.full(32, 2.5), 0.05, eta, "full")
    assert np.max(np.abs(full - 2.5)) < 1e-12
    full_u = dyn.mollify(grid32, u, 0.05, eta, "full")
    assert grid32.mode_amplitude(full_u, 12) < grid32.mode_amplitude(u, 12)
    with pytest.raises(ValueError):
        dyn.mollify(grid32, u, 0.05, None, "full")
    with pytest.raises(ValueError):
        dyn.mollify(grid32, u, -1.0)


def test_diagnostics_keys(grid32):
    row = dyn.diagnostics(dyn.equilibrium(grid32), modes=(1, 2))
    assert set(row) == {"t", "E", "min_eta", "H3_eta", "H3_psi", "amp_1", "amp_2"}
    assert row["E"] == 0.0


def test_trajectory_times_increase(grid32):
    tr = dyn.Trajectory()
    st = dyn.equilibrium(grid32)
    tr.append_state(st)
    with pytest.raises(ValueError):
        tr.append_state(st)


def test_integrate_saves_and_conserves_energy():
    g = make_grid(np.pi, 16)
    st = dyn.JetState(g, 0.0, 1 + 1e-2 * np.cos(2 * g.z), np.zeros(16))
    dt = dyn.stability_dt(g, 1.0)
    tr = dyn.integrate(st, dt, 1.0, dyn.StepOptions(tol=1e-12), save_every=0.25)
    assert tr.outcome == "completed" and tr.stop_time == pytest.approx(1.0)
    assert np.allclose(np.diff(tr.times), 0.25)
    E = tr.column("E")
    assert np.max(np.abs(E - E[0])) < 1e-6 * abs(E[0])


def test_integrate_zero_horizon(grid32):
    tr = dyn.integrate(dyn.equilibrium(grid32), 0.1, 0.0)
    assert len(tr.states) == 1 and tr.stop_time == 0.0


def test_pinch_off_is_reported():
    g = make_grid(np.pi, 32)
    st = dyn.JetState(g, 0.0, 1 + 0.97 * np.cos(g.z), 5.0 * np.cos(g.z))
    tr = dyn.integrate(st, 1e-3, 1.0, dyn.StepOptions(M=32, tol=1e-8), diag_every=1000)
    assert tr.outcome == "pinch-off"
    assert tr.stop_time < 1.0
    assert tr.states[-1].t == tr.stop_time


def test_step_rejected_below_floor():
    g = make_grid(np.pi, 32)
    st = dyn.JetState(g, 0.0, 1 + 0.97 * np.cos(g.z), 5.0 * np.cos(g.z))
    with pytest.raises(StepRejected):
        dyn.step_rk4(st, 0.5, dyn.StepOptions(M=32, tol=1e-8))


def test_snapshot_round_trip(tmp_path, grid32):
    st = dyn.JetState(grid32, 1.25, 1 + 0.1 * np.cos(grid32.z), np.sin(grid32.z) / 3,
                      R=1.0, kappa=0.7, g=0.2, slope=0.25)
    path = tmp_path / ("a" + dyn.SNAPSHOT_EXT)
    dyn.save_snapshot(path, st)
    back = dyn.load_snapshot(path)
    assert back.grid == st.grid
    assert (back.t, back.R, back.kappa, back.g, back.slope) == (1.25, 1.0, 0.7, 0.2, 0.25)
    assert np.array_equal(back.eta, st.eta) and np.array_equal(back.psi, st.psi)


def test_snapshot_truncated_body(tmp_path, grid32):
    path = tmp_path / "b.cjsnap"
    dyn.save_snapshot(path, dyn.equilibrium(grid32))
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ValueError):
        dyn.load_snapshot(path)


def test_restart_from_snapshot_is_bitwise(tmp_path):
    g = make_grid(np.pi, 16)
    st = dyn.JetState(g, 0.0, 1 + 1e-2 * np.cos(2 * g.z), np.zeros(16))
    opts = dyn.StepOptions(tol=1e-12)
    dt = 0.02
    full = dyn.integrate(st, dt, 0.4, opts, diag_every=100)
    half = dyn.integrate(st, dt, 0.2, opts, diag_every=100)
    dyn.save_snapshot(tmp_path / "mid.cjsnap", half.states[-1])
    rest = dyn.integrate(dyn.load_snapshot(tmp_path / "mid.cjsnap"), dt, 0.2, opts, diag_every=100)
    assert np.array_equal(rest.states[-1].eta, full.states[-1].eta)
    assert np.array_equal(rest.states[-1].psi, full.states[-1].psi)


def test_gravity_state_at_time_zero(grid32):
    st = dyn.JetState(grid32, 0.0, 1 + 0.1 * np.cos(grid32.z), np.sin(grid32.z))
    gs = dyn.gravity_state(st, 0.5)
    assert gs.g == 0.5 and gs.slope == 0.0
    assert np.array_equal(gs.eta, st.eta) and np.array_equal(gs.psi, st.psi)
    with pytest.raises(ValueError):
        dyn.gravity_state(gs, 0.5)


def test_gravity_transform_short_horizon():
    g = make_grid(np.pi / 2, 16)
    st = dyn.JetState(g, 0.0, 1 + 1e-2 * np.cos(2 * g.z), np.zeros(16))
    opts = dyn.StepOptions(tol=1e-12)
    dt = dyn.stability_dt(g, 1.0)
    base = dyn.integrate(st, dt, 0.3, opts, diag_every=1000)
    direct = dyn.integrate(replace(st, g=0.5), dt, 0.3, opts, diag_every=1000)
    moved = dyn.gravity_transform(base, 0.5, opts)
    for a, b in zip(direct.states, moved.states):
        assert np.max(np.abs(a.eta - b.eta)) < 1e-9
        assert np.max(np.abs(a.psi - b.psi)) < 1e-9
        assert a.slope == pytest.approx(b.slope, abs=1e-14)


def test_mollified_rhs_option(grid32):
    st = dyn.JetState(grid32, 0.0, 1 + 0.05 * np.cos(grid32.z) + 1e-3 * np.cos(14 * grid32.z),
                      0.01 * np.sin(grid32.z))
    plain = dyn.rhs(st, dyn.StepOptions(M=64))
    off = dyn.rhs(st, dyn.StepOptions(M=64, mollify_rhs=True))
    assert all(np.array_equal(a, b) for a, b in zip(plain, off))
    on = dyn.rhs(st, dyn.StepOptions(M=64, mollify_eps=0.05, mollify_rhs=True))
    assert grid32.mode_amplitude(on[1], 14) < 0.5 * grid32.mode_amplitude(plain[1], 14)
    eq = dyn.equilibrium(grid32)
    _, psi_t = dyn.rhs(eq, dyn.StepOptions(mollify_eps=0.05, mollify_rhs=True))
    assert np.max(np.abs(psi_t)) < 1e-13
