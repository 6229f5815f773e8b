"""Coupled oscillator networks and their first-order phase models.

A network couples N oscillators through pairwise terms,

    dx_i/dt = f_i(x_i) + eps * sum_j A_ij(t) * h(x_i, x_j),
    A_ij(t) = a_ij + b_ij cos(nu1 t) + c_ij cos(nu2 t),

and reduces to phases

    dtheta_i/dt = Omega_i + eps * sum_j abar_ij * qbar_ij(theta_j - theta_i),

where qbar_ij is the coupling term averaged around the cycle and abar_ij is
the long-time mean of A_ij.  Sensitivities are adjoint-computed per node
unless explicitly prescribed; a prescribed curve is used as given, which is
exactly how first-order reduction failures are reproduced on purpose.

For planar oscillators read as complex numbers z = x + i y, the pairing
between a sensitivity Z and a coupling term h is Re(conj(Z) * h), which is
the plain real dot product of their (Re, Im) vectors; prescribed curves may
therefore be supplied either as complex-valued or as real-vector-valued
functions of phase.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .models import TWO_PI, OscillatorModel, make_model
from .ode import _run_solver
from .cycles import LimitCycle, find_limit_cycle
from .phase import asymptotic_phase, phase_sensitivity
from .reduction import CouplingFunction, mean_value

__all__ = [
    "NetworkSpec",
    "PhaseModel",
    "NetworkTrajectory",
    "ComparisonReport",
    "COUPLING_NAMES",
    "build_phase_model",
    "simulate_full",
    "simulate_phase_model",
    "network_phases",
    "compare_full_vs_reduced",
    "sl_prescribed_pair",
    "subharmonic_pair",
    "subharmonic_strobe",
    "subharmonic_bracket",
    "get_cycle",
    "SUBHARMONIC_KAPPA",
    "SUBHARMONIC_WEIGHTS",
]


def _coupling_direct(xi, xj):
    return xj


def _coupling_diffusive(xi, xj):
    return xj - xi


def _coupling_first_component_squared(xi, xj):
    out = np.zeros_like(xj)
    out[..., 0] = xj[..., 0] ** 2
    return out


COUPLING_NAMES = {
    "direct": _coupling_direct,
    "diffusive": _coupling_diffusive,
    "first_component_squared": _coupling_first_component_squared,
}


@dataclass
class NetworkSpec:
    """Network layout: node models, coupling strength, adjacency, coupling term.

    a, b, c are (N, N) arrays; entry (i, j) weights the influence of node j on
    node i.  b and c modulate at frequencies nu1 and nu2.  coupling is a name
    from COUPLING_NAMES or a callable h(x_i, x_j) broadcasting over leading
    axes.  prescribed_sensitivity optionally replaces the adjoint curve per
    node: a list of callables (phase -> complex, or phase -> (dim,) vector),
    None entries meaning "use the adjoint".
    """

    models: Sequence[OscillatorModel]
    epsilon: float
    a: np.ndarray
    b: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    nu1: Optional[float] = None
    nu2: Optional[float] = None
    coupling: Union[str, Callable] = "direct"
    prescribed_sensitivity: Optional[Sequence[Optional[Callable]]] = None
    _cycles: Optional[list] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.models)
        self.a = np.asarray(self.a, dtype=float)
        if self.a.shape != (n, n):
            raise ValueError(f"adjacency a must be ({n}, {n}), got {self.a.shape}")
        for name in ("b", "c"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != (n, n):
                    raise ValueError(f"adjacency {name} must be ({n}, {n})")
                setattr(self, name, arr)
        for name in ("a", "b", "c"):
            arr = getattr(self, name)
            if arr is not None and np.any(np.abs(np.diag(arr)) > 0.0):
                raise ValueError(f"adjacency {name} must have zero diagonal")
        if self.b is not None and np.any(self.b != 0.0):
            if self.nu1 is None or self.nu1 <= 0.0:
                raise ValueError("nu1 must be positive when b is nonzero")
        if self.c is not None and np.any(self.c != 0.0):
            if self.nu2 is None or self.nu2 <= 0.0:
                raise ValueError("nu2 must be positive when c is nonzero")
        if isinstance(self.coupling, str) and self.coupling not in COUPLING_NAMES:
            raise ValueError(
                f"unknown coupling {self.coupling!r}; known: {sorted(COUPLING_NAMES)}")
        if self.prescribed_sensitivity is not None and \
                len(self.prescribed_sensitivity) != n:
            raise ValueError("prescribed_sensitivity must have one entry per node")

    @property
    def n_nodes(self) -> int:
        return len(self.models)

    def coupling_fn(self) -> Callable:
        if callable(self.coupling):
            return self.coupling
        return COUPLING_NAMES[self.coupling]

    def adjacency_at(self, t: float) -> np.ndarray:
        out = self.a.copy()
        if self.b is not None and self.nu1:
            out = out + self.b * np.cos(self.nu1 * t)
        if self.c is not None and self.nu2:
            out = out + self.c * np.cos(self.nu2 * t)
        return out

    def has_static_adjacency(self) -> bool:
        return (self.b is None or not np.any(self.b)) and \
               (self.c is None or not np.any(self.c))

    def cycles(self) -> list:
        """Limit cycle per node (cached; equal built-in models share one)."""
        if self._cycles is None:
            self._cycles = [_cached_cycle(mdl) for mdl in self.models]
        return self._cycles


def _default_guess(model: OscillatorModel):
    if model.name == "relaxation":
        return np.array([2.0, 0.0])
    return np.array([1.5, 0.1]) if model.dim == 2 else np.ones(model.dim)


# Built-in models are value-identified so repeated sweep factories reuse
# cycles; custom models fall back to object identity.
_CYCLE_CACHE: dict = {}


def _cycle_cache_key(model: OscillatorModel):
    if model.name == "custom":
        return ("custom", id(model))
    return (model.name, tuple(sorted(model.params.items())))


def _cached_cycle(model: OscillatorModel) -> LimitCycle:
    key = _cycle_cache_key(model)
    if key not in _CYCLE_CACHE:
        # edge averages inherit the cycle's radial error as an uncancelled
        # Fourier mode, so network cycles are held well below the 1e-12
        # budget of the vanishing-coupling checks
        _CYCLE_CACHE[key] = find_limit_cycle(model, _default_guess(model),
                                             tol=1e-12,
                                             ivp_tol=(1e-12, 1e-14))
    return _CYCLE_CACHE[key]


def _sensitivity_values(spec: NetworkSpec, i: int, cycle: LimitCycle):
    """Sensitivity samples on the cycle grid for node i (prescribed wins)."""
    pres = None
    if spec.prescribed_sensitivity is not None:
        pres = spec.prescribed_sensitivity[i]
    if pres is None:
        return phase_sensitivity(spec.models[i], cycle).values, False
    sample = np.asarray(pres(cycle.grid))
    if np.iscomplexobj(sample):
        values = np.stack([sample.real, sample.imag], axis=-1)
    else:
        values = np.asarray(sample, dtype=float)
        if values.shape == cycle.grid.shape + (cycle.points.shape[1],):
            pass
        elif values.shape == (cycle.points.shape[1],) + cycle.grid.shape:
            values = values.T
        else:
            raise ValueError("prescribed sensitivity returned an unexpected shape")
    return values, True


@dataclass
class PhaseModel:
    """First-order phase reduction of a NetworkSpec."""

    n_nodes: int
    Omega: np.ndarray                 # natural frequencies per node
    epsilon: float
    edges: dict                       # (i, j) -> CouplingFunction qbar_ij
    a_eff: np.ndarray                 # adjacency reduced to constants
    cycles: list
    prescribed: bool = False

    def edge_coupling(self, i: int, j: int) -> Optional[CouplingFunction]:
        return self.edges.get((i, j))

    def effective_edge_values(self, i: int, j: int) -> np.ndarray:
        """a_eff[i, j] * qbar_ij on the grid (zeros when no edge)."""
        cf = self.edges.get((i, j))
        if cf is None:
            return np.zeros(self.cycles[i].grid_size)
        return self.a_eff[i, j] * cf.values

    def max_coupling_scale(self) -> float:
        best = 0.0
        for (i, j), cf in self.edges.items():
            best = max(best, abs(self.a_eff[i, j]) * cf.max_abs)
        return best


def build_phase_model(spec: NetworkSpec, grid_size: Optional[int] = None,
                      adjacency_mean_tol: float = 1e-6) -> PhaseModel:
    """Average the network into its phase model.

    Edge functions are computed as the circular correlation of the node
    sensitivity with the coupling term around the cycles: with both cycles on
    one uniform M-grid the phase shift is an index roll, so the average is a
    plain circulant sum, exact for band-limited integrands.  Time-varying
    adjacency entries are reduced to constants with `mean_value`.
    """
    cycles = spec.cycles()
    n = spec.n_nodes
    m = grid_size or cycles[0].grid_size
    if any(c.grid_size != m for c in cycles):
        raise ValueError("all node cycles must share one grid size")
    omega = np.array([c.omega0 for c in cycles])
    h = spec.coupling_fn()

    sens_vals = {}
    prescribed_any = False
    for i in range(n):
        sens_vals[i], was_prescribed = _sensitivity_values(spec, i, cycles[i])
        prescribed_any = prescribed_any or was_prescribed

    # Reduce the adjacency to constants.
    a_eff = spec.a.copy()
    if not spec.has_static_adjacency():
        for i in range(n):
            for j in range(n):
                bij = spec.b[i, j] if spec.b is not None else 0.0
                cij = spec.c[i, j] if spec.c is not None else 0.0
                if bij == 0.0 and cij == 0.0:
                    continue

                def entry(t, _a=spec.a[i, j], _b=bij, _c=cij):
                    t = np.asarray(t, dtype=float)
                    out = np.full(t.shape, _a)
                    if _b:
                        out = out + _b * np.cos(spec.nu1 * t)
                    if _c:
                        out = out + _c * np.cos(spec.nu2 * t)
                    return out

                a_eff[i, j] = mean_value(entry, t_max=6e7,
                                         tol=adjacency_mean_tol, panel=2.0)

    edges = {}
    for i in range(n):
        zi = sens_vals[i]
        for j in range(n):
            if i == j:
                continue
            coupled = abs(a_eff[i, j]) > 0.0 or (
                spec.b is not None and spec.b[i, j] != 0.0) or (
                spec.c is not None and spec.c[i, j] != 0.0)
            if not coupled:
                continue
            qbar = _edge_average(zi, cycles[i].points, cycles[j].points, h)
            edges[(i, j)] = CouplingFunction(
                grid=cycles[i].grid.copy(), values=qbar,
                provenance="periodic_average")

    model = PhaseModel(n_nodes=n, Omega=omega, epsilon=spec.epsilon,
                       edges=edges, a_eff=a_eff, cycles=cycles,
                       prescribed=prescribed_any)
    detuning = float(omega.max() - omega.min()) if n > 1 else 0.0
    scale = spec.epsilon * model.max_coupling_scale()
    if detuning > 10.0 * scale > 0.0:
        warnings.warn(
            f"node detuning {detuning:.3g} exceeds ten times the first-order "
            f"coupling scale {scale:.3g}; phase locking is out of reach at "
            "this order", stacklevel=2)
    return model


def _edge_average(z_vals, pts_i, pts_j, h):
    """qbar(phi_k) = mean_s Z(s) . h(gamma_i(s), gamma_j(s + phi_k))."""
    m = len(z_vals)
    out = np.empty(m)
    for k in range(m):
        shifted = np.roll(pts_j, -k, axis=0)
        hv = np.asarray(h(pts_i, shifted), dtype=float)
        if hv.shape != pts_i.shape:
            hv = np.stack([np.asarray(h(pts_i[s], shifted[s]), dtype=float)
                           for s in range(m)])
        out[k] = np.mean(np.sum(z_vals * hv, axis=1))
    return out


@dataclass
class NetworkTrajectory:
    times: np.ndarray
    states: np.ndarray            # (n_samples, N, dim) for full runs
    phases: Optional[np.ndarray] = None   # (n_samples, N) unwrapped


def _stacked_field(models):
    """Vectorized evaluation of per-node fields when all models match."""
    if all(m.name == "stuart_landau" for m in models):
        om = np.array([m.params["omega"] for m in models])
        c2 = np.array([m.params["c2"] for m in models])

        def f(x):
            u, v = x[:, 0], x[:, 1]
            r2 = u * u + v * v
            return np.stack([u - om * v - r2 * (u - c2 * v),
                             om * u + v - r2 * (c2 * u + v)], axis=1)

        return f

    def f(x):
        return np.stack([np.asarray(m.f(xi), dtype=float)
                         for m, xi in zip(models, x)])

    return f


def _coupling_sum(spec: NetworkSpec):
    """(t, X) -> per-node coupling input sum_j A_ij(t) h(x_i, x_j)."""
    h = spec.coupling_fn()
    named = isinstance(spec.coupling, str)
    static = spec.has_static_adjacency()
    a_const = spec.a

    def at(t, x):
        a_t = a_const if static else spec.adjacency_at(t)
        if named:
            if spec.coupling == "direct":
                return a_t @ x
            if spec.coupling == "diffusive":
                return a_t @ x - a_t.sum(axis=1)[:, None] * x
            if spec.coupling == "first_component_squared":
                out = np.zeros_like(x)
                out[:, 0] = a_t @ (x[:, 0] ** 2)
                return out
        acc = np.zeros_like(x)
        for i in range(spec.n_nodes):
            for j in range(spec.n_nodes):
                if a_t[i, j] != 0.0:
                    acc[i] += a_t[i, j] * np.asarray(h(x[i], x[j]), dtype=float)
        return acc

    return at


def simulate_full(spec: NetworkSpec, t_span, theta0=None, x0=None,
                  t_eval=None, tol=(1e-9, 1e-11)) -> NetworkTrajectory:
    """Integrate the coupled network.

    Default initial conditions sit on the node cycles at phases theta0
    (zeros unless given); x0 overrides them with raw states (N, dim).
    """
    n = spec.n_nodes
    dims = [m.dim for m in spec.models]
    if len(set(dims)) != 1:
        raise ValueError("mixed state dimensions are not supported")
    dim = dims[0]
    if x0 is None:
        cycles = spec.cycles()
        theta0 = np.zeros(n) if theta0 is None else np.asarray(theta0, dtype=float)
        x0 = np.stack([cycles[i].gamma_at(float(theta0[i])) for i in range(n)])
    else:
        x0 = np.asarray(x0, dtype=float).reshape(n, dim)
    field = _stacked_field(spec.models)
    coupling_at = _coupling_sum(spec)
    eps = spec.epsilon

    def rhs(t, y):
        x = y.reshape(n, dim)
        dx = field(x) + eps * coupling_at(t, x)
        return dx.reshape(-1)

    res = _run_solver(rhs, x0.reshape(-1),
                      (float(t_span[0]), float(t_span[1])), tol, t_eval=t_eval)
    states = res.y.T.reshape(-1, n, dim)
    return NetworkTrajectory(times=res.t.copy(), states=states)


def simulate_phase_model(pm: PhaseModel, theta0, t_span, t_eval=None,
                         tol=(1e-9, 1e-11)) -> NetworkTrajectory:
    """Integrate the reduced phase equations; phases returned unwrapped."""
    theta0 = np.asarray(theta0, dtype=float)
    n = pm.n_nodes
    eps = pm.epsilon
    edge_items = [(i, j, pm.a_eff[i, j], cf) for (i, j), cf in pm.edges.items()]

    def rhs(t, th):
        dth = pm.Omega.copy()
        for i, j, aij, cf in edge_items:
            dth[i] += eps * aij * float(cf(th[j] - th[i]))
        return dth

    res = _run_solver(rhs, theta0, (float(t_span[0]), float(t_span[1])), tol,
                      t_eval=t_eval)
    return NetworkTrajectory(times=res.t.copy(), states=res.y.T[:, :, None],
                             phases=res.y.T.copy())


def network_phases(spec: NetworkSpec, traj: NetworkTrajectory,
                   unwrap: bool = True) -> np.ndarray:
    """Asymptotic phase of every node at every sample of a full trajectory.

    Uses the per-node closed-form phase map when the model carries one,
    otherwise settles the states numerically (batched per node).
    """
    cycles = spec.cycles()
    n = spec.n_nodes
    out = np.empty((len(traj.times), n))
    for i in range(n):
        mdl = spec.models[i]
        states_i = traj.states[:, i, :]
        if mdl.analytic_phase is not None:
            out[:, i] = mdl.analytic_phase(states_i)
        else:
            out[:, i] = asymptotic_phase(mdl, cycles[i], states_i)
    if unwrap:
        out = np.unwrap(out, axis=0)
    return out


@dataclass
class ComparisonReport:
    times: np.ndarray
    theta_full: np.ndarray        # (n_samples, N) unwrapped
    theta_reduced: np.ndarray     # (n_samples, N) unwrapped
    max_error: float
    rms_error: float
    full_drift: np.ndarray        # per-node mean dtheta/dt over the run
    reduced_drift: np.ndarray
    prescribed: bool


def compare_full_vs_reduced(spec: NetworkSpec, horizon_mult: float = 1.0,
                            theta0=None, n_samples: int = 200,
                            pm: Optional[PhaseModel] = None,
                            tol=(1e-9, 1e-11)) -> ComparisonReport:
    """Run the full network and its phase model side by side.

    The horizon is horizon_mult / epsilon (one averaging time by default); the
    full run's phases are aligned to the reduced run's initial condition, and
    errors are circular distances per node and sample.
    """
    n = spec.n_nodes
    theta0 = np.zeros(n) if theta0 is None else np.asarray(theta0, dtype=float)
    if pm is None:
        pm = build_phase_model(spec)
    eps = spec.epsilon
    horizon = horizon_mult / eps if eps > 0.0 else horizon_mult
    t_eval = np.linspace(0.0, horizon, n_samples)
    full = simulate_full(spec, (0.0, horizon), theta0=theta0, t_eval=t_eval,
                         tol=tol)
    th_full = network_phases(spec, full)
    # Align branch: unwrapped full phases start at theta0 modulo 2*pi.
    th_full += np.round((theta0 - th_full[0]) / TWO_PI) * TWO_PI
    red = simulate_phase_model(pm, theta0, (0.0, horizon), t_eval=t_eval)
    th_red = red.phases
    diff = th_full - th_red
    diff = diff - np.round(diff / TWO_PI) * TWO_PI
    span = max(float(t_eval[-1] - t_eval[0]), 1e-30)
    report = ComparisonReport(
        times=t_eval,
        theta_full=th_full,
        theta_reduced=th_red,
        max_error=float(np.max(np.abs(diff))),
        rms_error=float(np.sqrt(np.mean(diff ** 2))),
        full_drift=(th_full[-1] - th_full[0]) / span,
        reduced_drift=(th_red[-1] - th_red[0]) / span,
        prescribed=pm.prescribed,
    )
    return report


def sl_prescribed_pair(d_omega: float, epsilon: float, omega_mean: float = 2.0,
                       c2: float = 1.0, kappa: float = 1.0) -> NetworkSpec:
    """Detuned 1:1 pair carrying the prescribed sensitivity i*exp(-i*theta).

    Direct coupling, cycle frequencies omega - c2 = 1 -/+ d_omega/2.  The
    prescribed curve has the opposite rotation sense to the coupling term, so
    its averaged coupling vanishes identically; a phase model built from this
    spec therefore predicts free drift at d_omega no matter how strongly the
    full pair actually locks.
    """
    m_slow = make_model("stuart_landau", omega=omega_mean - 0.5 * d_omega, c2=c2)
    m_fast = make_model("stuart_landau", omega=omega_mean + 0.5 * d_omega, c2=c2)
    a = np.array([[0.0, kappa], [kappa, 0.0]])

    def z_curve(th):
        return 1j * np.exp(-1j * np.asarray(th))

    return NetworkSpec(models=[m_slow, m_fast], epsilon=epsilon, a=a,
                       coupling="direct",
                       prescribed_sensitivity=[z_curve, z_curve])


# Coupling gain calibrated so the subharmonic pair's locking threshold at
# detuning 0.02 sits at 0.05 (measured 0.0495 with the shipped diagnostics).
SUBHARMONIC_KAPPA = 5.3
SUBHARMONIC_WEIGHTS = (-2.0, 1.0)


def get_cycle(model: OscillatorModel) -> LimitCycle:
    """Limit cycle of a single model, via the shared network cycle cache."""
    return _cached_cycle(model)


def subharmonic_pair(d_omega: float, epsilon: float, mu: float = 1.0,
                     c2: float = 1.0,
                     kappa: float = SUBHARMONIC_KAPPA) -> NetworkSpec:
    """Pair near a 2:1 resonance used by the locking-threshold sweeps.

    Node 0 is a relaxation oscillator (frequency about 0.94 at mu = 1); node
    1 rotates cleanly at twice that frequency plus d_omega and drives node 0
    directly with strength kappa (one way, so node 1 stays exactly
    periodic).  Every single coupling insertion beats at a fast combination
    frequency, so the first-order averaged force on the slow combination
    2*theta_0 - theta_1 vanishes; the combination is first driven at second
    order.  Locking capacity then grows like epsilon**2 and the threshold
    like the square root of the detuning.  The rotation-symmetric circular
    models cannot play node 0's role here: their perturbation series carries
    a parity selection rule that kills every odd-weight slow term, which is
    precisely the first-order-reduction failure this pair demonstrates.
    kappa is calibrated so the threshold at d_omega = 0.02 sits near 0.05.
    Track the slow combination with weights SUBHARMONIC_WEIGHTS.
    """
    node0 = make_model("relaxation", mu=mu)
    omega0 = get_cycle(node0).omega0
    node1 = make_model("stuart_landau", omega=2.0 * omega0 + d_omega + c2,
                       c2=c2)
    a = np.array([[0.0, kappa], [0.0, 0.0]])
    return NetworkSpec(models=[node0, node1], epsilon=epsilon, a=a,
                       coupling="direct")


def subharmonic_strobe(spec: NetworkSpec) -> float:
    """Sampling period for the 2:1 pair: two turns of the driving node.

    On the locked attractor the network state repeats exactly once per two
    driver rotations, so sampling at this period turns a locked run into a
    constant series.  Sampling at the bare relaxation period instead leaks
    the within-cycle wobble of the entrained orbit into the flatness measure.
    """
    return 2.0 * TWO_PI / spec.cycles()[1].omega0


def subharmonic_bracket(d_omega: float) -> tuple:
    """Coupling-strength bracket straddling the 2:1 locking threshold.

    Scaled off the calibrated threshold value 0.05 at detuning 0.02 with the
    square-root law; the upper end stays inside the locking window for the
    default kappa across detunings 0.01 to 0.08.
    """
    pred = 0.05 * np.sqrt(d_omega / 0.02)
    return 0.55 * pred, 1.45 * pred
