import io
import math

import numpy as np
import pytest

from stwdiff import (
    ErrorState,
    NoiseLevel,
    Params,
    SimConfig,
    StepScheme,
    contour_grid,
    decay_rate_gamma,
    error_summary,
    error_upper_bound,
    omega_invariance_check,
    parse_pair,
    read_trajectory_csv,
    simulate,
    simulate_error_system,
    write_contour_csv,
    write_trajectory_csv,
)
from stwdiff.signals import SignalPair

P_REF = Params(4.1, 1.1, 1.0, 4.0)
N_REF = NoiseLevel(0.01)


def reference_pair():
    return parse_pair("quadratic:sign=-1", "switching:N=0.01,c1=0.011,c2=0.00149", 1.0, 0.01)


def piecewise_constant(seed, bound, hold, horizon):
    vals = np.random.default_rng(seed).uniform(-bound, bound, size=int(horizon / hold) + 2)
    last = len(vals) - 1
    return lambda t: float(vals[min(int(t / hold), last)])


def discrete_reference(kind, dt, n, g_fn, fdot0=0.0, f0=0.0):
    """Reference (f, fdot) satisfying the scheme's own difference relations.

    Makes the change of variables between the differentiator and the error
    system exact at the discrete level, so the equivalence check compares
    integrator implementations rather than reference-signal discretization.
    """
    fs = np.empty(n + 1)
    fds = np.empty(n + 1)
    fs[0], fds[0] = f0, fdot0
    for k in range(n):
        if kind == "implicit":
            fds[k + 1] = fds[k] + dt * g_fn((k + 1) * dt)
            fs[k + 1] = fs[k] + dt * fds[k + 1]
        else:
            fds[k + 1] = fds[k] + dt * g_fn(k * dt)
            fs[k + 1] = fs[k] + dt * fds[k]
    f = lambda t: float(fs[int(round(t / dt))])
    fdot = lambda t: float(fds[int(round(t / dt))])
    return f, fdot


class TestSimulate:
    def test_zero_signal_zero_noise(self):
        pair = parse_pair("quadratic:L=1,sign=1", "none", 1.0, 0.0)
        zero = SignalPair(
            f=lambda t: 0.0, fdot=lambda t: 0.0, fddot=lambda t: 0.0,
            eta=lambda t: 0.0, L_cert=1.0, N_cert=0.0, description="zero",
        )
        for kind in ("implicit", "explicit"):
            cfg = SimConfig(StepScheme(kind, 1e-3), 0.5, P_REF, NoiseLevel(0.0))
            rec = simulate(cfg, zero)
            assert np.all(rec.y2 == 0.0)
            assert np.all(rec.error == 0.0)
        del pair

    def test_reference_run_respects_bound(self):
        cfg = SimConfig(StepScheme("implicit", 5e-4), 2.0, P_REF, N_REF)
        rec = simulate(cfg, reference_pair())
        bound = error_upper_bound(P_REF, N_REF)
        assert np.max(np.abs(rec.error[rec.t >= 0.5])) <= bound

    def test_bound_sound_for_admissible_pairs(self):
        # The quadratic enters with either sign (the run description and the
        # figure disagree on it; the bound is sign-agnostic), plus constant
        # and zero noises: all admissible pairs must respect the bound.
        bound = error_upper_bound(P_REF, N_REF)
        specs = [
            ("quadratic:sign=-1", "switching"),
            ("quadratic:sign=1", "switching"),
            ("quadratic:sign=-1", "constant:N=0.01"),
            ("quadratic:sign=1", "constant:N=-0.01"),
            ("quadratic:sign=-1", "none"),
        ]
        for sig, noi in specs:
            pair = parse_pair(sig, noi, 1.0, 0.01)
            cfg = SimConfig(StepScheme("implicit", 5e-4), 2.0, P_REF, N_REF)
            rec = simulate(cfg, pair)
            assert np.max(np.abs(rec.error[rec.t >= 0.5])) <= bound, (sig, noi)

    def test_grid_and_columns(self):
        cfg = SimConfig(StepScheme("implicit", 1e-3), 0.1, P_REF, N_REF)
        rec = simulate(cfg, reference_pair())
        assert rec.t.shape == (101,)
        assert np.allclose(np.diff(rec.t), 1e-3, rtol=0, atol=1e-15)
        for name in ("u", "f", "fdot", "y1", "y2", "error", "V"):
            assert np.all(np.isfinite(rec.column(name)))
        assert np.array_equal(rec.error, rec.y2 - rec.fdot)

    def test_horizon_must_cover_one_step(self):
        with pytest.raises(ValueError):
            SimConfig(StepScheme("implicit", 1e-2), 1e-3, P_REF, N_REF)


class TestErrorSystemEquivalence:
    @pytest.mark.parametrize("kind", ["implicit", "explicit"])
    def test_matches_differentiator_per_step(self, kind):
        dt = 1e-4
        n = 10000
        g = piecewise_constant(1234, 1.0, 0.02, (n + 1) * dt)
        f, fdot = discrete_reference(kind, dt, n, g)
        eta = lambda t: float(np.sign(math.sin(90.0 * t))) * 0.01
        pair = SignalPair(f=f, fdot=fdot, fddot=g, eta=eta, L_cert=1.0, N_cert=0.01,
                          description="discrete-consistent reference")
        cfg = SimConfig(StepScheme(kind, dt), n * dt, P_REF, N_REF)
        ry = simulate(cfg, pair)
        rx = simulate_error_system(cfg, eta, g, ErrorState(eta(0.0), -fdot(0.0)))
        assert np.max(np.abs((ry.y1 - ry.f) - rx.y1)) <= 1e-9
        assert np.max(np.abs((ry.y2 - ry.fdot) - rx.y2)) <= 1e-9

    def test_zero_disturbances_zero_state(self):
        cfg = SimConfig(StepScheme("implicit", 1e-3), 0.2, P_REF, NoiseLevel(0.0))
        rec = simulate_error_system(cfg, lambda t: 0.0, lambda t: 0.0, ErrorState(0.0, 0.0))
        assert np.all(rec.y1 == 0.0)
        assert np.all(rec.y2 == 0.0)

    def test_default_start_uses_initial_noise(self):
        cfg = SimConfig(StepScheme("implicit", 1e-3), 0.05, P_REF, N_REF)
        rec = simulate_error_system(cfg, lambda t: 0.01, lambda t: 0.0)
        assert rec.y1[0] == 0.01
        assert rec.y2[0] == 0.0


class TestVDecrease:
    def test_monotone_outside_omega_under_worst_disturbances(self):
        gamma = decay_rate_gamma(P_REF).gamma
        dt = 1e-5
        cfg = SimConfig(StepScheme("implicit", dt), 1.0, P_REF, N_REF)
        rec = simulate_error_system(cfg, lambda t: N_REF.N, lambda t: P_REF.L,
                                    ErrorState(1.5, 1.0))
        V = rec.V
        outside = V[:-1] > N_REF.N + 1e-9
        dV = np.diff(rec.V)
        required = -(gamma / 2.0) * dt * np.sqrt(np.maximum(V[:-1] - N_REF.N, 0.0))
        # One-step overshoot of the discrete flow is O(dt^2).
        allowance = 50.0 * (1.0 + P_REF.lambda1**2 * P_REF.L) * dt * dt
        excess = (dV - required)[outside]
        assert excess.size > 0
        assert np.max(excess) <= allowance


class TestErrorSummary:
    def test_zero_input_run(self):
        zero = SignalPair(f=lambda t: 0.0, fdot=lambda t: 0.0, fddot=lambda t: 0.0,
                          eta=lambda t: 0.0, L_cert=1.0, N_cert=0.0, description="zero")
        cfg = SimConfig(StepScheme("implicit", 1e-3), 0.5, P_REF, NoiseLevel(0.0))
        summ = error_summary(simulate(cfg, zero), P_REF, NoiseLevel(0.0), tau=0.1)
        assert summ.sup_error_after == 0.0
        assert summ.first_entry_time == 0.0

    def test_noise_free_convergence_beats_time_bound(self):
        # Error-system realization of a noise-free start with fdot(0) = 1:
        # x2(0) = -1 under constant curvature -L; the closed-form ceiling
        # for the settling time is |fdot(0)| / ((lambda2 - 1) L) = 10.
        dt = 5e-4
        cfg = SimConfig(StepScheme("implicit", dt), 12.0, P_REF, NoiseLevel(0.0))
        rec = simulate_error_system(cfg, lambda t: 0.0, lambda t: -P_REF.L,
                                    ErrorState(0.0, -1.0))
        band = 2.0 * P_REF.L * dt  # discretization floor for the settled error
        summ = error_summary(rec, P_REF, NoiseLevel(0.0), tau=0.0, band=band)
        assert summ.first_entry_time is not None
        assert summ.first_entry_time <= 10.0

    def test_sup_nonincreasing_in_tau(self):
        cfg = SimConfig(StepScheme("implicit", 5e-4), 2.0, P_REF, N_REF)
        rec = simulate(cfg, reference_pair())
        sups = [error_summary(rec, P_REF, N_REF, tau).sup_error_after
                for tau in (0.0, 0.25, 0.5, 1.0, 1.5)]
        assert all(b <= a + 1e-15 for a, b in zip(sups, sups[1:]))

    def test_tau_outside_horizon(self):
        cfg = SimConfig(StepScheme("implicit", 1e-3), 0.1, P_REF, N_REF)
        rec = simulate(cfg, reference_pair())
        with pytest.raises(ValueError):
            error_summary(rec, P_REF, N_REF, tau=1.0)


class TestOmegaInvariance:
    def test_valid_gains_enter_and_stay(self):
        cfg = SimConfig(StepScheme("implicit", 1e-4), 8.0, P_REF, N_REF)
        rec = simulate_error_system(
            cfg,
            piecewise_constant(70, N_REF.N, 0.013, 8.0),
            piecewise_constant(71, P_REF.L, 0.017, 8.0),
            ErrorState(1.0, 1.0),
        )
        rep = omega_invariance_check(rec, P_REF, N_REF)
        assert rep.entered
        assert rep.ok
        assert bool(rep) is True

    def test_corrupted_lambda1_can_fail(self):
        # Start just inside the invariant set at a point whose V-derivative
        # is positive under a constant disturbance corner once lambda1 drops
        # below the admissible interval; the same run with valid gains stays.
        bad = Params(2.0, 1.1, 1.0, 4.0)
        start = ErrorState(0.08297024808703168, 0.5560712079396631)
        eta = lambda t: N_REF.N
        fddot = lambda t: P_REF.L
        cfg = SimConfig(StepScheme("implicit", 1e-4), 2.0, bad, N_REF)
        rep = omega_invariance_check(
            simulate_error_system(cfg, eta, fddot, start), bad, N_REF
        )
        assert rep.entered
        assert not rep.ok
        cfg_ok = SimConfig(StepScheme("implicit", 1e-4), 2.0, P_REF, N_REF)
        rep_ok = omega_invariance_check(
            simulate_error_system(cfg_ok, eta, fddot, start), P_REF, N_REF
        )
        assert rep_ok.entered
        assert rep_ok.ok

    def test_never_entered_is_vacuous(self):
        cfg = SimConfig(StepScheme("implicit", 1e-4), 0.002, P_REF, N_REF)
        rec = simulate_error_system(cfg, lambda t: 0.0, lambda t: 0.0, ErrorState(2.0, 2.0))
        rep = omega_invariance_check(rec, P_REF, N_REF)
        assert not rep.entered
        assert rep.ok
        assert rep.entry_time is None


class TestContour:
    def test_landmark_values(self):
        p = Params(4.1, 1.1, 1.0, 4.0 / 2.1)
        x1s, x2s, V = contour_grid(p, (-2.0, 2.0, -4.0, 4.0), (5, 5))
        assert V[2, 3] == 0.5  # (0, 2)
        assert V[3, 2] == 1.0  # (1, 0)
        assert V[2, 2] == 0.0  # origin

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            contour_grid(P_REF, (0.0, 0.0, -1.0, 1.0), (5, 5))
        with pytest.raises(ValueError):
            contour_grid(P_REF, (-1.0, 1.0, -1.0, 1.0), (1, 5))


class TestCsv:
    def test_trajectory_round_trip_is_bit_exact(self):
        cfg = SimConfig(StepScheme("implicit", 5e-4), 0.25, P_REF, N_REF)
        rec = simulate(cfg, reference_pair())
        buf = io.StringIO()
        write_trajectory_csv(buf, rec)
        buf.seek(0)
        back = read_trajectory_csv(buf)
        for name in ("t", "u", "f", "fdot", "y1", "y2", "error", "V"):
            assert np.array_equal(rec.column(name), back.column(name)), name
        assert back.dt == rec.dt

    def test_trajectory_header(self):
        cfg = SimConfig(StepScheme("implicit", 1e-3), 0.01, P_REF, N_REF)
        buf = io.StringIO()
        write_trajectory_csv(buf, simulate(cfg, reference_pair()))
        assert buf.getvalue().splitlines()[0] == "t,u,f,fdot,y1,y2,error,V"

    def test_contour_csv(self):
        p = Params(4.1, 1.1, 1.0, 4.0 / 2.1)
        x1s, x2s, V = contour_grid(p, (-1.0, 1.0, -2.0, 2.0), (3, 3))
        buf = io.StringIO()
        write_contour_csv(buf, x1s, x2s, V)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "x1,x2,V"
        assert len(lines) == 1 + 9
        row = lines[1 + 1 * 3 + 1].split(",")  # grid point (0, 0)
        assert [float(v) for v in row] == [0.0, 0.0, 0.0]
