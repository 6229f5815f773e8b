"""Synchronization diagnostics: lock detection, threshold sweeps, scaling fits.

Lock detection works on a sampled phase difference series.  For forced or
coupled systems the series should be sampled stroboscopically (once per
nominal rotation) so that a locked state shows up as a flat tail; dense
sampling carries the within-cycle wobble of the coupling and would swamp a
tight flatness threshold.  `critical_coupling` runs that pipeline against a
spec factory and bisects the locking threshold in the coupling strength.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .models import TWO_PI, wrap_phase
from .network import NetworkSpec, PhaseModel, network_phases, simulate_full

__all__ = [
    "SyncReport",
    "CriticalCouplingResult",
    "CouplingRangeError",
    "sync_measure",
    "lock_psi_series",
    "critical_coupling",
    "ScalingFit",
    "scaling_fit",
    "order_ratio",
]


@dataclass(frozen=True)
class SyncReport:
    """Verdict on one sampled phase-difference series.

    S is the root-mean-square of the phase-difference velocity over the
    measurement tail (centered differences on the unwrapped signal); slips is
    the net number of full turns the tail winds through.  Locked means the
    velocity stays below threshold and the tail winds zero net turns.
    """

    S: float
    locked: bool
    slips: int
    psi_star: Optional[float]
    threshold: float
    drift: float

    def __bool__(self):
        return self.locked


def sync_measure(times, phase_diff, transient_frac: float = 0.5,
                 natural_freq: float = 1.0,
                 threshold: Optional[float] = None) -> SyncReport:
    """Classify a phase-difference series as locked or drifting.

    phase_diff must be continuously unwrapped (no artificial 2*pi jumps).
    The first transient_frac of the samples is discarded; velocities come
    from centered differences on the remaining tail, and S is their RMS.  A
    clean drift at rate d gives S = d; a locked tail gives S near zero.
    threshold defaults to 1e-3 times the natural frequency, making the test
    dimensionally consistent.
    """
    times = np.asarray(times, dtype=float)
    psi = np.asarray(phase_diff, dtype=float)
    if times.shape != psi.shape or times.ndim != 1:
        raise ValueError("times and phase_diff must be matching 1-d arrays")
    if not 0.0 <= transient_frac < 1.0:
        raise ValueError("transient_frac must lie in [0, 1)")
    k0 = int(np.floor(transient_frac * len(psi)))
    tail = psi[k0:]
    t_tail = times[k0:]
    if len(tail) < 4:
        raise ValueError("too few samples left after discarding the transient")
    if threshold is None:
        threshold = 1e-3 * abs(natural_freq)
    vel = (tail[2:] - tail[:-2]) / (t_tail[2:] - t_tail[:-2])
    spread = float(np.sqrt(np.mean(vel ** 2)))
    slips = int(np.round((tail[-1] - tail[0]) / TWO_PI))
    span = float(t_tail[-1] - t_tail[0])
    drift = float((tail[-1] - tail[0]) / span) if span > 0.0 else 0.0
    locked = bool(spread < threshold and slips == 0)
    psi_star = None
    if locked:
        psi_star = float(wrap_phase(np.arctan2(np.mean(np.sin(tail)),
                                               np.mean(np.cos(tail)))))
    return SyncReport(S=spread, locked=locked, slips=slips, psi_star=psi_star,
                      threshold=float(threshold), drift=drift)


def lock_psi_series(spec: NetworkSpec, t_sim: Optional[float] = None,
                    theta0=None, pair=(0, 1), weights=(-1.0, 1.0),
                    strobe_period: Optional[float] = None,
                    tol=(1e-7, 1e-9)):
    """Stroboscopic slow-phase series for a coupled network.

    Samples once per strobe_period (default: one rotation of the slowest
    node, so every node phase advances by a near-integer number of turns
    between samples) and returns (times, psi, omega_ref) with

        psi = weights[0] * theta_{pair[0]} + weights[1] * theta_{pair[1]}

    on the unwrapped node phases.  The default weights give the plain phase
    difference; integer weights like (-2, 1) track a p:q resonance
    combination instead.
    """
    cycles = spec.cycles()
    omegas = [c.omega0 for c in cycles]
    omega_ref = float(min(omegas))
    if strobe_period is None:
        strobe_period = TWO_PI / omega_ref
    if t_sim is None:
        eps = abs(spec.epsilon)
        t_sim = max(10.0 / eps if eps > 0.0 else 500.0, 500.0)
    n = max(int(np.floor(t_sim / strobe_period)), 8)
    t_eval = strobe_period * np.arange(n + 1)
    traj = simulate_full(spec, (0.0, float(t_eval[-1])), theta0=theta0,
                         t_eval=t_eval, tol=tol)
    phases = network_phases(spec, traj)
    psi = weights[0] * phases[:, pair[0]] + weights[1] * phases[:, pair[1]]
    return t_eval, psi, omega_ref


class CouplingRangeError(RuntimeError):
    """The locking transition is outside the scanned coupling range."""

    def __init__(self, message: str, side: str):
        super().__init__(message)
        self.side = side


@dataclass
class CriticalCouplingResult:
    eps_c: float
    bracket: tuple
    n_runs: int
    reports: dict              # epsilon -> SyncReport


def critical_coupling(spec_factory: Callable[[float], NetworkSpec],
                      eps_lo: float, eps_hi: float,
                      rel_width: float = 0.05,
                      t_sim: Optional[float] = None,
                      transient_frac: float = 0.5,
                      theta0=None,
                      weights=(-1.0, 1.0),
                      strobe_period: Optional[float] = None,
                      tol=(1e-7, 1e-9),
                      threshold: Optional[float] = None,
                      max_iter: int = 60) -> CriticalCouplingResult:
    """Bisect the smallest coupling strength that phase-locks a network.

    spec_factory(eps) builds the network at coupling strength eps.  The
    endpoints must straddle the transition: a locked lower endpoint raises
    CouplingRangeError(side="below"), an unlocked upper endpoint
    side="above".  Bisection stops when the bracket is narrower than
    rel_width relative to its midpoint.
    """
    if not 0.0 < eps_lo < eps_hi:
        raise ValueError("need 0 < eps_lo < eps_hi")
    reports = {}

    def classify(eps: float) -> SyncReport:
        spec = spec_factory(eps)
        times, psi, omega_ref = lock_psi_series(
            spec, t_sim=t_sim, theta0=theta0, weights=weights,
            strobe_period=strobe_period, tol=tol)
        rep = sync_measure(times, psi, transient_frac=transient_frac,
                           natural_freq=omega_ref, threshold=threshold)
        reports[eps] = rep
        return rep

    if classify(eps_lo).locked:
        raise CouplingRangeError(
            f"already locked at the lower end eps = {eps_lo:g}; "
            "the transition lies below the scanned range", side="below")
    if not classify(eps_hi).locked:
        raise CouplingRangeError(
            f"still drifting at the upper end eps = {eps_hi:g}; "
            "the transition lies above the scanned range", side="above")

    lo, hi = eps_lo, eps_hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if (hi - lo) / mid <= rel_width:
            break
        if classify(mid).locked:
            hi = mid
        else:
            lo = mid
    eps_c = 0.5 * (lo + hi)
    return CriticalCouplingResult(eps_c=eps_c, bracket=(lo, hi),
                                  n_runs=len(reports), reports=reports)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float


def scaling_fit(x, y) -> ScalingFit:
    """Least-squares power-law fit y = prefactor * x**exponent (log-log)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need matching 1-d arrays with at least two points")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0.0 else 1.0
    return ScalingFit(exponent=float(slope), prefactor=float(np.exp(intercept)),
                      r_squared=r2)


def order_ratio(pm: PhaseModel, d_omega: Optional[float] = None) -> float:
    """Residual detuning left over by first-order coupling, in units of it.

    (detuning - eps * max coupling) / (eps * max coupling).  Non-positive
    means first-order locking is within reach; a large value means any
    observed locking must come from beyond-first-order effects.
    """
    if d_omega is None:
        d_omega = float(pm.Omega.max() - pm.Omega.min())
    first_order = abs(pm.epsilon) * pm.max_coupling_scale()
    return (abs(d_omega) - first_order) / max(first_order, 1e-30)
