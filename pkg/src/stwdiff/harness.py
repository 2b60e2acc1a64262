"""Closed-loop simulation of the differentiator and of its error system.

Both integrators run on a uniform grid t_k = k dt.  Inputs are sampled
zero-order-hold: the explicit scheme reads them at the step start, the
implicit scheme at the step's target time (backward Euler), so trajectories
are bit-reproducible for a given configuration.

Records carry the Lyapunov value along the error trajectory, which makes
invariant-set and decrease checks a post-processing step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import differentiator as stw
from .lyapunov import ErrorState, evaluate_grid
from .params import NoiseLevel, Params, error_lower_bound, error_upper_bound
from .signals import SignalPair

TimeFn = Callable[[float], float]

TRAJECTORY_COLUMNS = ("t", "u", "f", "fdot", "y1", "y2", "error", "V")


@dataclass(frozen=True)
class SimConfig:
    """Scheme, horizon, gain set, and the noise level used for bound overlays."""

    scheme: stw.StepScheme
    horizon: float
    params: Params
    noise_level: NoiseLevel

    def __post_init__(self):
        if not self.horizon >= self.scheme.dt:
            raise ValueError(
                f"horizon {self.horizon} shorter than one step {self.scheme.dt}"
            )

    @property
    def steps(self) -> int:
        return max(1, int(round(self.horizon / self.scheme.dt)))


@dataclass
class TrajectoryRecord:
    """Uniformly sampled run: per-sample input, reference, state, error, and V."""

    t: np.ndarray
    u: np.ndarray
    f: np.ndarray
    fdot: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    error: np.ndarray
    V: np.ndarray
    dt: float

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass
class ErrorSummary:
    """Empirical error metrics next to the closed-form bounds."""

    tau: float
    band: float
    sup_error_after: float
    first_entry_time: Optional[float]
    bound_upper: float
    bound_lower: float


@dataclass
class InvarianceReport:
    """Outcome of the invariant-set check; truthiness is the pass flag."""

    ok: bool
    entered: bool
    entry_time: Optional[float]
    slack: float
    max_excess: float

    def __bool__(self) -> bool:
        return self.ok


def _finalize(ts, us, fs, fds, y1s, y2s, p: Params, dt: float) -> TrajectoryRecord:
    error = y2s - fds
    V = evaluate_grid(y1s - fs, error, p)
    return TrajectoryRecord(t=ts, u=us, f=fs, fdot=fds, y1=y1s, y2=y2s, error=error, V=V, dt=dt)


def simulate(cfg: SimConfig, pair: SignalPair) -> TrajectoryRecord:
    """Run the differentiator on u = f + eta from the standard initialization."""
    dt = cfg.scheme.dt
    n = cfg.steps
    ts = np.arange(n + 1) * dt

    f, eta, fdot = pair.f, pair.eta, pair.fdot
    fs = np.fromiter((f(t) for t in ts), dtype=float, count=n + 1)
    us = np.fromiter((fs[k] + eta(ts[k]) for k in range(n + 1)), dtype=float, count=n + 1)
    fds = np.fromiter((fdot(t) for t in ts), dtype=float, count=n + 1)

    y1s = np.empty(n + 1)
    y2s = np.empty(n + 1)
    y1, y2 = us[0], 0.0
    y1s[0], y2s[0] = y1, y2

    lam1sL = cfg.params.lambda1 * math.sqrt(cfg.params.L)
    lam2L = cfg.params.lambda2 * cfg.params.L
    if cfg.scheme.kind == stw.IMPLICIT:
        a = dt * lam1sL
        b = dt * dt * lam2L
        solve = stw.solve_sigma
        for k in range(n):
            u_in = us[k + 1]
            r = u_in - y1 - dt * y2
            sigma, xi = solve(r, a, b)
            y2 = y2 + (r / dt if sigma == 0.0 else dt * lam2L * xi)
            y1 = u_in - sigma
            y1s[k + 1], y2s[k + 1] = y1, y2
    else:
        for k in range(n):
            d = us[k] - y1
            sgn = 1.0 if d > 0.0 else (-1.0 if d < 0.0 else 0.0)
            dy1 = lam1sL * sgn * math.sqrt(abs(d)) + y2
            y1 = y1 + dt * dy1
            y2 = y2 + dt * lam2L * sgn
            y1s[k + 1], y2s[k + 1] = y1, y2

    return _finalize(ts, us, fs, fds, y1s, y2s, cfg.params, dt)


def simulate_error_system(
    cfg: SimConfig,
    eta: TimeFn,
    fddot: TimeFn,
    x0: Optional[ErrorState] = None,
) -> TrajectoryRecord:
    """Integrate the error dynamics directly under disturbance evaluators.

    Default initial state is (eta(0), 0), matching the differentiator's own
    initialization when fdot(0) = 0; pass `x0` for Lyapunov studies.  The
    record reuses the trajectory layout with f = fdot = 0, u = eta, and
    (y1, y2) holding the error coordinates.
    """
    dt = cfg.scheme.dt
    n = cfg.steps
    ts = np.arange(n + 1) * dt

    ets = np.fromiter((eta(t) for t in ts), dtype=float, count=n + 1)
    gts = np.fromiter((fddot(t) for t in ts), dtype=float, count=n + 1)

    x1s = np.empty(n + 1)
    x2s = np.empty(n + 1)
    if x0 is None:
        x1, x2 = ets[0], 0.0
    else:
        x1, x2 = x0.x1, x0.x2
    x1s[0], x2s[0] = x1, x2

    lam1sL = cfg.params.lambda1 * math.sqrt(cfg.params.L)
    lam2L = cfg.params.lambda2 * cfg.params.L
    if cfg.scheme.kind == stw.IMPLICIT:
        a = dt * lam1sL
        b = dt * dt * lam2L
        solve = stw.solve_sigma
        for k in range(n):
            e = ets[k + 1]
            g = gts[k + 1]
            r = x1 - e + dt * x2 - dt * dt * g
            sigma, xi = solve(r, a, b)
            if sigma == 0.0:
                x2 = x2 - r / dt - dt * g
            else:
                x2 = x2 - dt * lam2L * xi - dt * g
            x1 = e + sigma
            x1s[k + 1], x2s[k + 1] = x1, x2
    else:
        for k in range(n):
            d = x1 - ets[k]
            sgn = 1.0 if d > 0.0 else (-1.0 if d < 0.0 else 0.0)
            x1 = x1 + dt * (-lam1sL * sgn * math.sqrt(abs(d)) + x2)
            x2 = x2 + dt * (-lam2L * sgn - gts[k])
            x1s[k + 1], x2s[k + 1] = x1, x2

    zeros = np.zeros(n + 1)
    return _finalize(ts, ets, zeros, zeros, x1s, x2s, cfg.params, dt)


def error_summary(
    rec: TrajectoryRecord,
    p: Params,
    n: NoiseLevel,
    tau: float,
    band: Optional[float] = None,
) -> ErrorSummary:
    """Sup of |error| on [tau, T] and the settling time into the error band.

    The settling time is the earliest grid time after which |error| never
    leaves the band again (robust to transient crossings); None if the run
    ends outside the band.  `band` defaults to the closed-form upper bound.
    """
    if not 0.0 <= tau <= rec.t[-1]:
        raise ValueError(f"tau={tau} outside the record horizon {rec.t[-1]}")
    upper = error_upper_bound(p, n)
    lower = error_lower_bound(p.lambda2, n, p.L)
    if band is None:
        band = upper
    tail = rec.t >= tau
    sup_after = float(np.max(np.abs(rec.error[tail])))
    outside = np.abs(rec.error) > band
    if outside[-1]:
        entry = None
    else:
        beyond = np.nonzero(outside)[0]
        entry = float(rec.t[beyond[-1] + 1]) if beyond.size else float(rec.t[0])
    return ErrorSummary(
        tau=tau,
        band=band,
        sup_error_after=sup_after,
        first_entry_time=entry,
        bound_upper=upper,
        bound_lower=lower,
    )


def omega_invariance_check(rec: TrajectoryRecord, p: Params, n: NoiseLevel) -> InvarianceReport:
    """Check that once V <= N the trajectory stays there up to discretization slack.

    The slack 2 dt (lambda2 + 1) L max|x2| accounts for one-step overshoot
    of the discrete flow; exact forward invariance holds only in continuous
    time.  A run that never enters the set passes vacuously with
    entered = False.
    """
    slack = 2.0 * rec.dt * (p.lambda2 + 1.0) * p.L * float(np.max(np.abs(rec.error)))
    inside = rec.V <= n.N
    if not np.any(inside):
        return InvarianceReport(ok=True, entered=False, entry_time=None, slack=slack, max_excess=0.0)
    i0 = int(np.argmax(inside))
    excess = float(np.max(rec.V[i0:] - n.N))
    return InvarianceReport(
        ok=excess <= slack,
        entered=True,
        entry_time=float(rec.t[i0]),
        slack=slack,
        max_excess=max(0.0, excess),
    )


def contour_grid(
    p: Params,
    box: tuple[float, float, float, float],
    resolution: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lyapunov values on a uniform grid over the box; returns (x1s, x2s, V).

    V has shape (len(x1s), len(x2s)).
    """
    x1_min, x1_max, x2_min, x2_max = box
    n1, n2 = resolution
    if n1 < 2 or n2 < 2:
        raise ValueError(f"resolution must be at least 2x2, got {n1}x{n2}")
    if not (x1_min < x1_max and x2_min < x2_max):
        raise ValueError(f"degenerate box {box}")
    x1s = np.linspace(x1_min, x1_max, n1)
    x2s = np.linspace(x2_min, x2_max, n2)
    g1, g2 = np.meshgrid(x1s, x2s, indexing="ij")
    return x1s, x2s, evaluate_grid(g1, g2, p)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_trajectory_csv(fileobj, rec: TrajectoryRecord) -> None:
    """Emit the record with 17 significant digits (bit-exact round trip)."""
    fileobj.write(",".join(TRAJECTORY_COLUMNS) + "\n")
    cols = [rec.column(name) for name in TRAJECTORY_COLUMNS]
    for row in zip(*cols):
        fileobj.write(",".join(_fmt(v) for v in row) + "\n")


def read_trajectory_csv(fileobj) -> TrajectoryRecord:
    """Parse a trajectory CSV back into a record; inverse of the writer."""
    header = fileobj.readline().strip()
    if tuple(header.split(",")) != TRAJECTORY_COLUMNS:
        raise ValueError(f"unexpected trajectory header {header!r}")
    data = [[float(v) for v in line.strip().split(",")] for line in fileobj if line.strip()]
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(TRAJECTORY_COLUMNS):
        raise ValueError("malformed trajectory CSV")
    cols = {name: arr[:, i] for i, name in enumerate(TRAJECTORY_COLUMNS)}
    dt = float(cols["t"][1] - cols["t"][0]) if cols["t"].size > 1 else 0.0
    return TrajectoryRecord(dt=dt, **cols)


def write_contour_csv(fileobj, x1s: np.ndarray, x2s: np.ndarray, V: np.ndarray) -> None:
    """Emit the contour grid as x1,x2,V rows in x1-major order."""
    fileobj.write("x1,x2,V\n")
    for i, x1 in enumerate(x1s):
        for j, x2 in enumerate(x2s):
            fileobj.write(f"{_fmt(x1)},{_fmt(x2)},{_fmt(V[i, j])}\n")
