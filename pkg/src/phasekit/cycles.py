"""Limit cycle location, parameterization, and Floquet analysis.

The cycle is located by Newton shooting on a Poincare section chart and stored
on a uniform grid in phase theta = omega0 * t, theta in [0, 2*pi).  Phase zero
sits at the section crossing with the largest first coordinate, so repeated
runs land on the same parameterization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import TWO_PI, OscillatorModel, wrap_phase
from .ode import DEFAULT_TOL, Section, find_crossing, integrate, _run_solver

__all__ = [
    "PeriodicInterpolant",
    "LimitCycle",
    "ShootingError",
    "UnstableCycleError",
    "find_limit_cycle",
    "floquet_exponent",
    "gamma_at",
]


class ShootingError(RuntimeError):
    """Newton shooting failed to converge or hit a singular return map."""


class UnstableCycleError(RuntimeError):
    """Located periodic orbit is not asymptotically stable."""


class PeriodicInterpolant:
    """Trigonometric interpolation of 2*pi-periodic data on a uniform grid.

    values has shape (M,) or (M, d), sampled at theta_k = 2*pi*k/M.  Evaluation
    and differentiation use the full Fourier representation, so interpolation
    is spectrally accurate for smooth data and reproduces samples at the nodes
    to roundoff.
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        self._scalar = values.ndim == 1
        if self._scalar:
            values = values[:, None]
        self.m, self.d = values.shape
        if self.m % 2 != 0:
            raise ValueError("grid size must be even")
        self.values = values
        coeff = np.fft.rfft(values, axis=0) / self.m
        # Interior harmonics appear twice in the full spectrum.
        weights = coeff.copy()
        weights[1:-1] *= 2.0
        self._weights = weights                 # (m/2+1, d)
        self._k = np.arange(self.m // 2 + 1)    # harmonic numbers

    def _phases(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.exp(1j * np.multiply.outer(theta, self._k))  # (..., K)

    def __call__(self, theta):
        e = self._phases(theta)
        out = np.real(e @ self._weights)
        # Nyquist term must enter as a pure cosine for a real interpolant.
        theta = np.asarray(theta, dtype=float)
        nyq = self._weights[-1].real
        out += np.multiply.outer(
            np.cos(theta * self._k[-1]) - np.real(e[..., -1]), nyq
        )
        return out[..., 0] if self._scalar else out

    def derivative(self, theta, order: int = 1):
        e = self._phases(theta)
        w = self._weights * (1j * self._k[:, None]) ** order
        out = np.real(e @ w)
        theta = np.asarray(theta, dtype=float)
        # d/dtheta of the Nyquist cosine, replacing the complex-exponential row.
        kn = self._k[-1]
        nyq = self._weights[-1].real
        if order % 4 == 0:
            tru = np.cos(theta * kn) * kn ** order
        elif order % 4 == 1:
            tru = -np.sin(theta * kn) * kn ** order
        elif order % 4 == 2:
            tru = -np.cos(theta * kn) * kn ** order
        else:
            tru = np.sin(theta * kn) * kn ** order
        raw = np.real((1j * kn) ** order * e[..., -1])
        out += np.multiply.outer(tru - raw, nyq)
        return out[..., 0] if self._scalar else out


@dataclass
class LimitCycle:
    """Periodic orbit sampled uniformly in phase (equivalently, in time)."""

    model: OscillatorModel
    period: float
    grid: np.ndarray          # phases theta_k = 2*pi*k/M
    points: np.ndarray        # (M, dim) states, points[k] = gamma(theta_k)
    anchor: np.ndarray        # gamma(0), on the section
    floquet: float            # nontrivial Floquet exponent, < 0
    section: Section
    _interp: PeriodicInterpolant = field(init=False, repr=False)

    def __post_init__(self):
        self._interp = PeriodicInterpolant(self.points)

    @property
    def omega0(self) -> float:
        return TWO_PI / self.period

    @property
    def grid_size(self) -> int:
        return len(self.grid)

    def gamma_at(self, theta):
        """Cycle point at phase theta (wrapped); exact at grid nodes."""
        theta = np.asarray(theta, dtype=float)
        th = wrap_phase(theta)
        out = self._interp(th)
        # Snap phases that hit a grid node so nodal queries are bit-exact.
        step = TWO_PI / self.grid_size
        idx = np.round(th / step).astype(int) % self.grid_size
        on_node = np.abs(th - np.round(th / step) * step) < 1e-13
        if out.ndim == 1:
            if on_node:
                out = self.points[int(idx)].copy()
        elif np.any(on_node):
            out[on_node] = self.points[idx[on_node]]
        return out

    def velocity_at(self, theta):
        """d gamma / d theta; the vector field on the cycle is omega0 * this."""
        return self._interp.derivative(np.asarray(wrap_phase(theta), dtype=float))

    def project(self, x):
        """Orthogonal projection onto the cycle: (theta, distance).

        Accepts a single state (dim,) or a stack (K, dim).  theta solves
        (x - gamma(theta)) . gamma'(theta) = 0 near the closest grid node.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        d2 = ((pts[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
        theta = self.grid[np.argmin(d2, axis=1)].astype(float)
        for _ in range(4):
            g = self._interp(theta)
            dg = self._interp.derivative(theta)
            d2g = self._interp.derivative(theta, order=2)
            res = ((pts - g) * dg).sum(axis=1)
            slope = -(dg * dg).sum(axis=1) + ((pts - g) * d2g).sum(axis=1)
            theta = theta - res / slope
        theta = wrap_phase(theta)
        dist = np.linalg.norm(pts - self._interp(theta), axis=1)
        if single:
            return float(theta[0]), float(dist[0])
        return theta, dist


def gamma_at(cycle: LimitCycle, theta):
    return cycle.gamma_at(theta)


def _section_chart(section: Section, x, fd_step=1e-7):
    """Orthonormal basis of the section tangent space at x (columns)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    grad = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = fd_step
        grad[i] = (float(section.s(x + e)) - float(section.s(x - e))) / (2 * fd_step)
    norm = np.linalg.norm(grad)
    if norm == 0.0:
        raise ShootingError("section gradient vanishes at the working point")
    grad /= norm
    # Complete grad to an orthonormal basis; drop the gradient direction.
    basis = np.linalg.qr(np.column_stack([grad, np.eye(n)]))[0]
    return grad, basis[:, 1:n]


def _reproject_to_section(section, x, grad, tol=1e-12):
    x = np.array(x, dtype=float)
    for _ in range(5):
        val = float(section.s(x))
        if abs(val) < tol:
            break
        x -= val * grad
    return x


def find_limit_cycle(model: OscillatorModel, guess, section: Optional[Section] = None,
                     tol: float = 1e-10, grid_size: int = 256,
                     t_max: float = 200.0, max_iter: int = 50,
                     ivp_tol=DEFAULT_TOL) -> LimitCycle:
    """Locate a stable limit cycle by Newton shooting on a section chart.

    Returns the cycle sampled at grid_size phases, anchored so that phase zero
    is the section crossing with the largest first coordinate (ties broken by
    the second coordinate).  Raises ShootingError when Newton stalls or the
    return map has a unit multiplier, UnstableCycleError when the orbit's
    nontrivial Floquet exponent is nonnegative.
    """
    if section is None:
        section = Section(s=lambda x: x[1], direction=+1)
    guess = np.asarray(guess, dtype=float)
    model.check_basin(guess)

    # Land on the section first.
    t0, x_sec = find_crossing(model, guess, section, t_max, tol=ivp_tol)
    grad, chart = _section_chart(section, x_sec)
    n_chart = chart.shape[1]
    scale = max(1.0, float(np.linalg.norm(x_sec)))
    fd_step = 1e-6 * scale
    period = None

    def return_point(x):
        t_ret, x_ret = find_crossing(model, x, section, t_max, tol=ivp_tol)
        return t_ret, x_ret

    x_base = x_sec
    converged = False
    for _ in range(max_iter):
        period, x_ret = return_point(x_base)
        if period < 1e-6:
            raise ShootingError(f"degenerate return time {period:.3e}")
        resid = chart.T @ (x_ret - x_base)
        if np.linalg.norm(resid) < tol * scale:
            converged = True
            break
        jac = np.empty((n_chart, n_chart))
        for j in range(n_chart):
            dx = chart[:, j] * fd_step
            _, xp = return_point(_reproject_to_section(section, x_base + dx, grad))
            _, xm = return_point(_reproject_to_section(section, x_base - dx, grad))
            jac[:, j] = (chart.T @ (xp - xm)) / (2 * fd_step)
        jac = jac - np.eye(n_chart)
        if abs(np.linalg.det(jac)) < 1e-8:
            raise ShootingError(
                "singular return-map derivative (multiplier at unity); "
                "the orbit is not transversally hyperbolic"
            )
        step = np.linalg.solve(jac, -resid)
        x_base = _reproject_to_section(section, x_base + chart @ step, grad)
    if not converged:
        raise ShootingError(f"shooting did not converge in {max_iter} iterations")

    # Anchor: among this orbit's section crossings, take max first coordinate.
    anchor = x_base
    crossings = _collect_crossings(model, x_base, section, period, ivp_tol)
    if crossings:
        key = max(range(len(crossings)),
                  key=lambda i: (crossings[i][0], crossings[i][1]))
        t_anchor = crossings[key][-1]
        if t_anchor > 0.0:
            traj = integrate(model, x_base, (0.0, t_anchor), tol=ivp_tol)
            anchor = traj.states[-1]
            anchor = _reproject_to_section(section, anchor, grad)

    # Sample one period from the anchor, uniformly in time.
    t_nodes = period * np.arange(grid_size) / grid_size
    tight = (min(ivp_tol[0], 1e-10), min(ivp_tol[1], 1e-12))
    traj = integrate(model, anchor, (0.0, period), tol=tight, t_eval=t_nodes)
    points = traj.states.copy()
    grid = TWO_PI * np.arange(grid_size) / grid_size

    cycle = LimitCycle(model=model, period=float(period), grid=grid,
                       points=points, anchor=anchor.copy(), floquet=0.0,
                       section=section)
    lam = floquet_exponent(model, cycle)
    if lam >= 0.0:
        raise UnstableCycleError(
            f"periodic orbit found but not asymptotically stable "
            f"(Floquet exponent {lam:+.4g})"
        )
    cycle.floquet = float(lam)
    return cycle


def _collect_crossings(model, x_start, section, period, ivp_tol):
    """(x1, x2, t) for every section crossing in (0, period]."""

    def ev(t, x):
        return float(section.s(x))

    ev.terminal = False
    ev.direction = section.direction
    res = _run_solver(lambda t, x: model.f(x), x_start,
                      (0.0, period), ivp_tol, events=[ev])
    out = [(float(x[0]), float(x[1]) if len(x) > 1 else 0.0, float(t))
           for t, x in zip(res.t_events[0], res.y_events[0])
           if 1e-9 < t < period - 1e-9]
    out.append((float(x_start[0]), float(x_start[1]) if len(x_start) > 1 else 0.0, 0.0))
    return out


def _jacobian_fn(model: OscillatorModel):
    if model.jacobian is not None:
        return lambda x: np.asarray(model.jacobian(x), dtype=float)

    def fd_jac(x):
        x = np.asarray(x, dtype=float)
        n = len(x)
        scale = max(1.0, float(np.linalg.norm(x)))
        h = 1e-6 * scale
        cols = []
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            cols.append((model.f(x + e) - model.f(x - e)) / (2 * h))
        return np.column_stack(cols)

    return fd_jac


def floquet_exponent(model: OscillatorModel, cycle: LimitCycle,
                     method: str = "variational") -> float:
    """Nontrivial Floquet exponent of the cycle, lambda = log|mu| / T.

    method="variational" integrates the variational equation over one period
    and takes the monodromy eigenvalue furthest from the trivial unit
    multiplier.  method="return_map" differentiates the Poincare return map on
    the section chart; with strongly contracting cycles the multiplier sits
    near roundoff, so this route is a coarse cross-check, not the default.
    """
    if method == "variational":
        jac = _jacobian_fn(model)
        n = model.dim
        anchor = cycle.anchor

        def rhs(t, y):
            x = y[:n]
            phi = y[n:].reshape(n, n)
            dx = np.asarray(model.f(x), dtype=float)
            dphi = jac(x) @ phi
            return np.concatenate([dx, dphi.reshape(-1)])

        y0 = np.concatenate([anchor, np.eye(n).reshape(-1)])
        res = _run_solver(rhs, y0, (0.0, cycle.period), (1e-10, 1e-13),
                          dense_output=False)
        mono = res.y[n:, -1].reshape(n, n)
        mu = np.linalg.eigvals(mono)
        trivial = np.argmin(np.abs(mu - 1.0))
        rest = np.delete(mu, trivial)
        mu_dom = rest[np.argmax(np.abs(rest))]
        return float(np.log(np.abs(mu_dom)) / cycle.period)
    if method == "return_map":
        section = cycle.section
        grad, chart = _section_chart(section, cycle.anchor)
        if chart.shape[1] != 1:
            raise ValueError("return_map method implemented for planar charts only")
        e = chart[:, 0]
        h = 1e-3 * max(1.0, float(np.linalg.norm(cycle.anchor)))
        tight = (1e-11, 1e-13)
        _, xp = find_crossing(model, _reproject_to_section(section, cycle.anchor + h * e, grad),
                              section, 10 * cycle.period, tol=tight)
        _, xm = find_crossing(model, _reproject_to_section(section, cycle.anchor - h * e, grad),
                              section, 10 * cycle.period, tol=tight)
        mu = float(e @ (xp - xm)) / (2 * h)
        if mu == 0.0:
            return -np.inf
        return float(np.log(abs(mu)) / cycle.period)
    raise ValueError(f"unknown floquet method {method!r}")
