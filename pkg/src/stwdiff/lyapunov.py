"""Piecewise Lyapunov function for the super-twisting error system.

The function V is built from a half-plane template W applied to the state
(mirrored through the origin when x2 < 0) and split into three parabolic
regions W1 / W2 / W3.  Outside the invariant sublevel set {V <= N} it
decreases along every admissible error trajectory at rate at least
gamma * sqrt(V - N), where gamma is the minimum of five per-case rates.

`verify_decrease` certifies the decrease inequality numerically on a grid:
the directional derivative of V is evaluated analytically per region (a
finite-difference estimate across the discontinuous sign term would
produce spurious violations) against extreme admissible disturbances.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

from .params import NoiseLevel, Params

W1, W2, W3 = "W1", "W2", "W3"


@dataclass(frozen=True)
class ErrorState:
    """Error coordinates: x1 = y1 - f (signal units), x2 = y2 - fdot (signal/time)."""

    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError(f"error state must be finite, got ({self.x1}, {self.x2})")


@dataclass(frozen=True)
class Region:
    """Branch of the piecewise definition; `mirrored` marks the x2 < 0 half-plane."""

    index: str
    mirrored: bool


@dataclass(frozen=True)
class GammaReport:
    """Per-case decrease rates and their minimum gamma.

    The first region contributes three rates: with the sign argument
    x1 - eta nonpositive, `r_region1_neg` covers small |x2| and
    `r_region1_pos` large |x2|; `r_region1_eta` covers x1 - eta > 0 and
    carries the gain margin epsilon1.  `r_region3` carries the margin
    epsilon2 = lambda1 - 2 sqrt(2 (lambda2 + 1)).  Both margins are
    positive exactly when the gain condition holds.
    """

    r_region1_neg: float
    r_region1_pos: float
    epsilon1: float
    r_region1_eta: float
    r_region2: float
    epsilon2: float
    r_region3: float
    gamma: float


@dataclass(frozen=True)
class DecreaseViolation:
    """Sampled state and disturbance at which the decrease check failed."""

    state: ErrorState
    eta: float
    fddot: float
    observed_rate: float
    required_rate: float


@dataclass(frozen=True)
class GridSpec:
    """Uniform sampling grid over the box [x1_min, x1_max] x [x2_min, x2_max]."""

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1 or self.x1_min >= self.x1_max or self.x2_min >= self.x2_max:
            raise ValueError("grid must span a nonempty box with at least one point per axis")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.x1_min, self.x1_max, self.n1),
            np.linspace(self.x2_min, self.x2_max, self.n2),
        )


def _mirror(x1, x2):
    """Map onto the x2 >= 0 half plane where the template W is defined."""
    flip = x2 < 0
    return np.where(flip, -x1, x1), np.where(flip, -x2, x2), flip


def region(x: ErrorState, p: Params) -> Region:
    """Classify the state into W1 / W2 / W3 after the x2-sign mirror.

    Boundaries follow the closed/half-open pattern of the definition:
    W1 for z1 <= t1, W2 for t1 < z1 <= t2, W3 beyond, with
    t1 = z2^2 / (4 alpha (lambda2+1) L) and t2 = (2 alpha + 1) t1.
    """
    mirrored = x.x2 < 0
    z1 = -x.x1 if mirrored else x.x1
    z2 = -x.x2 if mirrored else x.x2
    t1 = z2 * z2 / (4.0 * p.alpha * (p.lambda2 + 1.0) * p.L)
    if z1 <= t1:
        idx = W1
    elif z1 <= (2.0 * p.alpha + 1.0) * t1:
        idx = W2
    else:
        idx = W3
    return Region(index=idx, mirrored=mirrored)


def evaluate(x: ErrorState, p: Params) -> float:
    """Value of the piecewise Lyapunov function; nonnegative, zero only at 0."""
    z1 = x.x1 if x.x2 >= 0 else -x.x1
    z2 = x.x2 if x.x2 >= 0 else -x.x2
    lam2p1L = (p.lambda2 + 1.0) * p.L
    q = z2 * z2 / (4.0 * p.alpha * lam2p1L)
    if z1 <= q:
        return 2.0 * q - z1
    if z1 <= (2.0 * p.alpha + 1.0) * q:
        return q
    return z1 - z2 * z2 / (2.0 * lam2p1L)


def evaluate_grid(x1, x2, p: Params) -> np.ndarray:
    """Vectorized `evaluate` over arrays of coordinates."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    z1, z2, _ = _mirror(x1, x2)
    lam2p1L = (p.lambda2 + 1.0) * p.L
    q = z2 * z2 / (4.0 * p.alpha * lam2p1L)
    v_w1 = 2.0 * q - z1
    v_w2 = q
    v_w3 = z1 - z2 * z2 / (2.0 * lam2p1L)
    return np.where(z1 <= q, v_w1, np.where(z1 <= (2.0 * p.alpha + 1.0) * q, v_w2, v_w3))


def sup_x2_on_omega(p: Params, n: NoiseLevel) -> float:
    """Largest |x2| over the invariant set {V <= N}: 2 sqrt(alpha (lambda2+1) N L)."""
    return 2.0 * math.sqrt(p.alpha * (p.lambda2 + 1.0) * n.N * p.L)


def omega_contains(x: ErrorState, p: Params, n: NoiseLevel) -> bool:
    """True iff the state lies in the invariant set, boundary included."""
    return evaluate(x, p) <= n.N


def decay_rate_gamma(p: Params) -> GammaReport:
    """Assemble the five per-case decrease rates and their minimum.

    The margins epsilon1 and epsilon2 are differences of nearly equal
    quantities and cancel catastrophically near the admissibility boundary,
    so the whole report is evaluated in extended precision and rounded
    once per field.  Raises ValueError when either margin is nonpositive
    (equivalently, when the gain condition fails), since no positive
    decrease rate exists then.
    """
    with localcontext() as ctx:
        ctx.prec = 50
        lam1, lam2, L, alpha = (Decimal(v) for v in (p.lambda1, p.lambda2, p.L, p.alpha))
        lam2p1 = lam2 + 1
        eps1 = ((alpha + 1) * lam2 + alpha - 1) / (alpha * lam2p1) - lam1 / (2 * alpha * lam2p1).sqrt()
        eps2 = lam1 - 2 * (2 * lam2p1).sqrt()
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError(
                "gain condition violated: decrease-rate margins are "
                f"epsilon1={float(eps1):.6g}, epsilon2={float(eps2):.6g} (both must be positive)"
            )
        r1 = lam1 * (L / 2).sqrt()
        r2 = (alpha - 1) / alpha * (alpha * lam2p1 * L).sqrt()
        r3 = eps1 * (2 * alpha * lam2p1 * L).sqrt()
        r4 = (lam2 - 1) * L.sqrt() / (alpha * lam2p1).sqrt()
        r5 = eps2 * L.sqrt()
        gamma = min(r1, r2, r3, r4, r5)
    return GammaReport(
        r_region1_neg=float(r1),
        r_region1_pos=float(r2),
        epsilon1=float(eps1),
        r_region1_eta=float(r3),
        r_region2=float(r4),
        epsilon2=float(eps2),
        r_region3=float(r5),
        gamma=float(gamma),
    )


def _wdot_branch(branch, z1, z2, eta, fddot, p: Params):
    """Directional derivative of one branch of W along the error dynamics.

    Operates in the mirrored frame; `eta` and `fddot` must already be
    mirrored disturbances.  `branch` is 0, 1, 2 for W1, W2, W3.
    """
    lam2p1L = (p.lambda2 + 1.0) * p.L
    arg = z1 - eta
    dz1 = -p.lambda1 * math.sqrt(p.L) * np.sign(arg) * np.sqrt(np.abs(arg)) + z2
    dz2 = -p.lambda2 * p.L * np.sign(arg) - fddot
    if branch == 0:
        return z2 * dz2 / (p.alpha * lam2p1L) - dz1
    if branch == 1:
        return z2 * dz2 / (2.0 * p.alpha * lam2p1L)
    return dz1 - z2 * dz2 / lam2p1L


def vdot_analytic(x: ErrorState, p: Params, eta: float, fddot: float) -> float:
    """Time derivative of V at x under disturbances (eta, fddot), per-region form.

    At x2 < 0 the mirror is applied to both the state and the disturbances,
    which leaves the admissible disturbance box invariant.
    """
    reg = region(x, p)
    if reg.mirrored:
        z1, z2, e, g = -x.x1, -x.x2, -eta, -fddot
    else:
        z1, z2, e, g = x.x1, x.x2, eta, fddot
    branch = {W1: 0, W2: 1, W3: 2}[reg.index]
    return float(_wdot_branch(branch, z1, z2, e, g, p))


def vdot_one_sided(x: ErrorState, p: Params, eta: float, fddot: float, h: float = 1e-8) -> float:
    """One-sided finite-difference estimate of V-dot along the frozen vector field.

    Cross-check only; unreliable within O(h) of the region boundaries and
    of the sign discontinuity x1 = eta.
    """
    arg = x.x1 - eta
    s = math.copysign(1.0, arg) if arg != 0 else 0.0
    dx1 = -p.lambda1 * math.sqrt(p.L) * s * math.sqrt(abs(arg)) + x.x2
    dx2 = -p.lambda2 * p.L * s - fddot
    ahead = ErrorState(x.x1 + h * dx1, x.x2 + h * dx2)
    return (evaluate(ahead, p) - evaluate(x, p)) / h


def _thread_count() -> int:
    raw = os.environ.get("STWDIFF_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _verify_chunk(p, n, gamma, margin, tolerance, x1v, x2v, base_index):
    """Check one block of grid states; returns violation tuples keyed by grid index."""
    lam2p1L = (p.lambda2 + 1.0) * p.L
    N, L = n.N, p.L
    z1, z2, _ = _mirror(x1v, x2v)
    q = z2 * z2 / (4.0 * p.alpha * lam2p1L)
    v = np.where(z1 <= q, 2.0 * q - z1, np.where(z1 <= (2.0 * p.alpha + 1.0) * q, q, z1 - z2 * z2 / (2.0 * lam2p1L)))
    active = v > N + margin
    if not np.any(active):
        return []

    idx = np.nonzero(active)[0]
    z1, z2, v = z1[idx], z2[idx], v[idx]
    x1v, x2v = x1v[idx], x2v[idx]
    gi = base_index + idx
    t1 = z2 * z2 / (4.0 * p.alpha * lam2p1L)
    t2 = (2.0 * p.alpha + 1.0) * t1
    branch = np.where(z1 <= t1, 0, np.where(z1 <= t2, 1, 2))
    eps_cell = 1e-9 * np.maximum(1.0, np.abs(t2))
    near_t1 = np.abs(z1 - t1) <= eps_cell
    near_t2 = np.abs(z1 - t2) <= eps_cell

    required = -gamma * np.sqrt(v - N)
    delta = 1e-12 * np.maximum.reduce([np.full_like(z1, 1.0), np.abs(z1), np.full_like(z1, N)])
    clamped = np.clip(z1, -N, N)
    eta_slots = [
        np.full_like(z1, -N),
        np.full_like(z1, N),
        np.clip(clamped - delta, -N, N),
        np.clip(clamped + delta, -N, N),
    ]
    # Never evaluate exactly on the sign discontinuity: nudge eta into the
    # admissible band so both extreme selections get exercised nearby.
    for e in eta_slots:
        hit = z1 - e == 0.0
        if np.any(hit):
            down_ok = e - delta >= -N
            e[hit & down_ok] = (e - delta)[hit & down_ok]
            e[hit & ~down_ok] = (e + delta)[hit & ~down_ok]

    out = []
    for slot, e in enumerate(eta_slots):
        for g in (-L, L):
            gv = np.full_like(z1, g)
            observed = np.full_like(z1, -np.inf)
            for b in (0, 1, 2):
                check = (branch == b) | (near_t1 & (b <= 1)) | (near_t2 & (b >= 1))
                if not np.any(check):
                    continue
                wd = _wdot_branch(b, z1[check], z2[check], e[check], gv[check], p)
                observed[check] = np.maximum(observed[check], wd)
            bad = observed > required + tolerance
            for j in np.nonzero(bad)[0]:
                # Report in the original (unmirrored) coordinates.
                mir = x2v[j] < 0
                out.append(
                    (
                        int(gi[j]),
                        slot,
                        g,
                        DecreaseViolation(
                            state=ErrorState(float(x1v[j]), float(x2v[j])),
                            eta=float(-e[j]) if mir else float(e[j]),
                            fddot=float(-g) if mir else float(g),
                            observed_rate=float(observed[j]),
                            required_rate=float(required[j]),
                        ),
                    )
                )
    return out


def verify_decrease(
    p: Params,
    n: NoiseLevel,
    grid: GridSpec,
    gamma: float | None = None,
    margin: float = 1e-9,
    tolerance: float = 1e-9,
) -> list[DecreaseViolation]:
    """Certify V-dot <= -gamma sqrt(V - N) on the grid; returns all violations.

    Only states with V > N + margin are tested.  Each state is checked
    against the extreme disturbance corners (eta, fddot) in {-N, N} x {-L, L}
    plus eta values straddling x1 inside the noise band, so both signs of
    the discontinuous term are exercised (6 distinct samples per state in
    the typical |x1| > N case, 8 near the band).  States within a small
    band of a region threshold are checked against both adjacent branch
    derivatives.  When `gamma` is omitted it is taken from
    :func:`decay_rate_gamma`, which requires the gain condition to hold;
    passing `gamma` explicitly skips that requirement (mutation probes).

    Set STWDIFF_THREADS to split the grid into independent row chunks; the
    returned list is ordered by grid index regardless of thread count.
    """
    if gamma is None:
        gamma = decay_rate_gamma(p).gamma
    x1s, x2s = grid.axes()
    xx1 = np.repeat(x1s, grid.n2)
    xx2 = np.tile(x2s, grid.n1)

    threads = _thread_count()
    total = xx1.size
    if threads <= 1 or total < 2 * grid.n2:
        records = _verify_chunk(p, n, gamma, margin, tolerance, xx1, xx2, 0)
    else:
        bounds = np.linspace(0, total, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(
                    _verify_chunk, p, n, gamma, margin, tolerance, xx1[a:b], xx2[a:b], int(a)
                )
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            records = [rec for fut in futures for rec in fut.result()]

    records.sort(key=lambda r: (r[0], r[1], r[2]))
    return [rec[3] for rec in records]


def write_violations_csv(fileobj, violations: list[DecreaseViolation]) -> None:
    """Emit violations as CSV with header x1,x2,eta,fddot,observed,required."""
    fileobj.write("x1,x2,eta,fddot,observed,required\n")
    for rec in violations:
        fileobj.write(
            f"{rec.state.x1!r},{rec.state.x2!r},{rec.eta!r},{rec.fddot!r},"
            f"{rec.observed_rate!r},{rec.required_rate!r}\n"
        )
