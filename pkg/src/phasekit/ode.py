"""Initial value problem driver: adaptive integration, flows, section crossings.

Thin contract layer over scipy's RK45 with dense output.  Everything downstream
(shooting, adjoint runs, isochron mapping, network sweeps) goes through the
helpers here so tolerances and error handling stay in one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

from .models import OscillatorModel, PhaselessStateError

__all__ = [
    "DEFAULT_TOL",
    "IntegrationError",
    "NoCrossingError",
    "TangentialCrossingError",
    "Section",
    "Trajectory",
    "integrate",
    "flow",
    "flow_batch",
    "find_crossing",
]

# (rtol, atol) used by the geometry stages; sweeps loosen this deliberately.
DEFAULT_TOL = (1e-9, 1e-11)


class IntegrationError(RuntimeError):
    """Integrator failed (step underflow or solver breakdown)."""


class NoCrossingError(RuntimeError):
    """No section crossing with the requested direction within t_max."""


class TangentialCrossingError(RuntimeError):
    """Crossing found but the vector field is (near-)tangent to the section."""


@dataclass(frozen=True)
class Section:
    """Scalar section s(x) = 0 with a crossing direction.

    direction: +1 for crossings with ds/dt > 0, -1 for ds/dt < 0,
    0 to accept either sign.
    """

    s: Callable[[np.ndarray], float]
    direction: int = +1

    def __post_init__(self):
        if self.direction not in (-1, 0, 1):
            raise ValueError("section direction must be +1, -1 or 0 (either)")


@dataclass
class Trajectory:
    """Sampled solution with a dense interpolant.

    times are strictly monotone (increasing for forward runs); dense_eval
    reproduces the stored samples exactly at the stored times.
    """

    times: np.ndarray
    states: np.ndarray
    _sol: Optional[Callable] = None

    def dense_eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        tq = np.atleast_1d(t_arr)
        lo = min(self.times[0], self.times[-1])
        hi = max(self.times[0], self.times[-1])
        if np.any(tq < lo - 1e-12) or np.any(tq > hi + 1e-12):
            raise ValueError("dense_eval query outside the integrated span")
        if self._sol is None:
            out = np.repeat(self.states[:1], len(tq), axis=0)
        else:
            out = np.asarray(self._sol(tq)).T.copy()
        # Snap stored samples so nodal queries are bit-exact.
        idx = np.searchsorted(self.times, tq) if self.times[0] <= self.times[-1] \
            else len(self.times) - np.searchsorted(self.times[::-1], tq, side="right")
        for k, (tk, i) in enumerate(zip(tq, np.atleast_1d(idx))):
            for j in (i - 1, i, i + 1):
                if 0 <= j < len(self.times) and self.times[j] == tk:
                    out[k] = self.states[j]
                    break
        return out[0] if scalar else out


def _as_rhs(system: Union[OscillatorModel, Callable]) -> Tuple[Callable, Optional[OscillatorModel]]:
    if isinstance(system, OscillatorModel):
        model = system
        return (lambda t, x: model.f(x)), model
    return system, None


def _basin_events(model: Optional[OscillatorModel]):
    if model is None or model.basin_radius is None:
        return []

    def hit_core(t, x):
        return float(np.linalg.norm(x) - model.basin_radius)

    hit_core.terminal = True
    hit_core.direction = -1
    return [hit_core]


def _run_solver(rhs, x0, t_span, tol, t_eval=None, events=None,
                dense_output=True, max_step=np.inf):
    rtol, atol = tol
    res = solve_ivp(
        rhs,
        t_span,
        np.asarray(x0, dtype=float),
        method="RK45",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        events=events if events else None,
        dense_output=dense_output,
        max_step=max_step,
    )
    if res.status == -1:
        raise IntegrationError(f"integration failed: {res.message}")
    return res


def integrate(system, x0, t_span, tol=DEFAULT_TOL, t_eval=None,
              max_step=np.inf) -> Trajectory:
    """Integrate dx/dt = f(x) (or rhs(t, x)) over t_span.

    system: OscillatorModel or a callable rhs(t, x).  For models with a basin
    guard, a trajectory entering the excluded ball raises PhaselessStateError.
    """
    rhs, model = _as_rhs(system)
    x0 = np.asarray(x0, dtype=float)
    if model is not None:
        model.check_basin(x0)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1:
        return Trajectory(times=np.array([t0]), states=x0[None, :].copy(), _sol=None)
    res = _run_solver(rhs, x0, (t0, t1), tol, t_eval=t_eval,
                      events=_basin_events(model))
    if res.status == 1:  # terminated by the basin event
        raise PhaselessStateError(
            f"trajectory entered the phaseless neighborhood at t = {res.t[-1]:.6g}"
        )
    return Trajectory(times=res.t.copy(), states=res.y.T.copy(), _sol=res.sol)


def flow(system, x0, t, tol=DEFAULT_TOL):
    """Endpoint of the flow map: phi_t(x0)."""
    rhs, model = _as_rhs(system)
    x0 = np.asarray(x0, dtype=float)
    if model is not None:
        model.check_basin(x0)
    if t == 0.0:
        return x0.copy()
    res = _run_solver(rhs, x0, (0.0, float(t)), tol, dense_output=False,
                      events=_basin_events(model))
    if res.status == 1:
        raise PhaselessStateError(
            f"trajectory entered the phaseless neighborhood at t = {res.t[-1]:.6g}"
        )
    return res.y[:, -1].copy()


def flow_batch(model: OscillatorModel, X0, t, tol=DEFAULT_TOL):
    """Flow a stack of initial states (K, dim) for the same time t.

    The stack is integrated as one system with a shared adaptive step; the
    per-point accuracy is what the shared error control delivers, which is
    ample for the settle-and-project uses inside the toolkit.
    """
    X0 = np.asarray(X0, dtype=float)
    k, dim = X0.shape

    def rhs(t_, y):
        return model.f_batch(y.reshape(k, dim)).reshape(-1)

    if t == 0.0:
        return X0.copy()
    res = _run_solver(rhs, X0.reshape(-1), (0.0, float(t)), tol,
                      dense_output=False)
    return res.y[:, -1].reshape(k, dim).copy()


def find_crossing(system, x0, section: Section, t_max, tol=DEFAULT_TOL,
                  t_guard: float = 1e-3):
    """First t in (0, t_max] with s(x(t)) = 0 crossed in the section direction.

    Returns (t_star, x_star).  The crossing time is refined on the dense output
    to root-finder precision; a crossing where the field is nearly tangent to
    the section is rejected.  A start point sitting on the section is flowed
    for t_guard before event detection so the trivial t = 0 root is skipped;
    crossings inside (0, t_guard) are therefore not resolvable from an
    on-section start.
    """
    rhs, model = _as_rhs(system)
    x0 = np.asarray(x0, dtype=float)
    if model is not None:
        model.check_basin(x0)

    t_offset = 0.0
    scale = max(1.0, float(np.linalg.norm(x0)))
    if abs(float(section.s(x0))) < 1e-9 * scale:
        res0 = _run_solver(rhs, x0, (0.0, t_guard), tol, dense_output=False)
        x0 = res0.y[:, -1]
        t_offset = t_guard

    def ev(t, x):
        return float(section.s(x))

    ev.terminal = True
    ev.direction = section.direction
    res = _run_solver(lambda t, x: rhs(t + t_offset, x), x0,
                      (0.0, float(t_max) - t_offset), tol,
                      events=[ev] + _basin_events(model))
    if res.status == 1 and res.t_events[0].size == 0:
        raise PhaselessStateError(
            "trajectory entered the phaseless neighborhood before crossing"
        )
    if res.t_events[0].size == 0:
        raise NoCrossingError(
            f"no section crossing with direction {section.direction:+d} in "
            f"(0, {t_max:g}]"
        )
    t_star = float(res.t_events[0][0]) + t_offset
    x_star = res.y_events[0][0].copy()
    # Transversality: ds/dt along the flow at the crossing.
    fval = np.asarray(rhs(t_star, x_star), dtype=float)
    scale = max(1.0, float(np.linalg.norm(x_star)))
    h = 1e-6 * scale / max(1.0, float(np.linalg.norm(fval)))
    dsdt = (float(section.s(x_star + h * fval)) -
            float(section.s(x_star - h * fval))) / (2.0 * h)
    if abs(dsdt) < 1e-6:
        raise TangentialCrossingError(
            f"vector field nearly tangent to section at crossing (ds/dt = {dsdt:.2e})"
        )
    return t_star, x_star
