"""
Exact and adiabatic propagators for two-level Hamiltonians.

The exact propagator solves ``i dU/dt = H(t) U`` with ``U(t0) = 1``. The
fixed-step RK4 path evaluates the Hamiltonian for the whole grid at once and
multiplies the per-step RK4 matrices together; no re-unitarization is done,
so drift shows up in :attr:`Trajectory.unitarity_errors` and is checked
against ``IntegratorConfig.max_unitarity_drift``.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import mat2
from .errors import IntegrationDivergedError, InvalidArgumentError
from .hamiltonians import (
    HamiltonianFunction,
    SpectralFrame,
    branch_sign,
    field_derivative,
    hamiltonian,
    linked_frames,
    unit_field_derivative,
)
from .tolerances import TOL

METHODS = ("rk4_fixed", "rk45_adaptive")

# bound on the number of RK4 step matrices held in memory at once
_CHUNK = 1 << 17


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``steps + 1`` samples from ``t0`` to ``t1``."""

    t0: float
    t1: float
    steps: int

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)) or self.t1 <= self.t0:
            raise InvalidArgumentError(f"grid needs finite t1 > t0, got [{self.t0}, {self.t1}]")
        if int(self.steps) != self.steps or self.steps < 2:
            raise InvalidArgumentError(f"grid needs steps >= 2, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def times(self):
        return np.linspace(self.t0, self.t1, self.steps + 1)

    @property
    def dt(self):
        return (self.t1 - self.t0) / self.steps

    def __len__(self):
        return self.steps + 1


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``substeps`` subdivides every output interval for ``rk4_fixed``; the
    tolerances only steer ``rk45_adaptive``.
    """

    method: str = "rk4_fixed"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_unitarity_drift: float = field(default_factory=lambda: TOL.max_unitarity_drift)
    substeps: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("rel_tol", "abs_tol", "max_unitarity_drift"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {value!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise InvalidArgumentError(f"substeps must be a positive integer, got {self.substeps!r}")


@dataclass
class Trajectory:
    grid: TimeGrid
    u_samples: np.ndarray
    unitarity_errors: np.ndarray
    frames: Optional[List[SpectralFrame]] = None
    beta_plus: Optional[np.ndarray] = None
    beta_minus: Optional[np.ndarray] = None

    @property
    def times(self):
        return self.grid.times

    def beta(self, branch):
        return self.beta_plus if branch_sign(branch) > 0 else self.beta_minus

    def state(self, index, v0):
        return self.u_samples[index] @ v0


def _as_hamiltonian_function(h_of_t):
    if isinstance(h_of_t, HamiltonianFunction):
        return h_of_t

    def batch(times):
        return np.stack([np.asarray(h_of_t(float(t)), dtype=complex) for t in np.ravel(times)])

    return HamiltonianFunction(batch)


def _check_hermitian(h_stack, times):
    err = np.linalg.norm(h_stack - mat2.dagger(h_stack), axis=(-2, -1))
    scale = np.maximum(1.0, np.linalg.norm(h_stack, axis=(-2, -1)))
    bad = err > TOL.hermitian * scale
    if np.any(bad):
        t_bad = np.ravel(times)[np.argmax(bad)]
        raise InvalidArgumentError(f"Hamiltonian is not hermitian at t={t_bad:g}")


def _rk4_step_matrices(h0, hm, h1, dt):
    """Linear RK4 update matrices ``M`` with ``U(t + dt) ~ M U(t)``."""
    eye = mat2.IDENTITY
    a0, am, a1 = -1j * h0, -1j * hm, -1j * h1
    k1 = a0
    k2 = am @ (eye + 0.5 * dt * k1)
    k3 = am @ (eye + 0.5 * dt * k2)
    k4 = a1 @ (eye + dt * k3)
    return eye + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _ordered_product(m):
    """Time-ordered product along axis 1: ``m[:, -1] @ ... @ m[:, 0]``."""
    while m.shape[1] > 1:
        tail = None
        if m.shape[1] % 2:
            tail, m = m[:, -1:], m[:, :-1]
        m = m[:, 1::2] @ m[:, 0::2]
        if tail is not None:
            m = np.concatenate([m, tail], axis=1)
    return m[:, 0]


def _drift_guard(u, times, limit):
    errors = np.linalg.norm(mat2.dagger(u) @ u - mat2.IDENTITY, axis=(-2, -1))
    bad = errors > limit
    if np.any(bad):
        i = int(np.argmax(bad))
        raise IntegrationDivergedError(
            f"unitarity drift {errors[i]:.3e} exceeds {limit:.1e} at t={times[i]:g}", t=float(times[i])
        )
    return errors


def _integrate_rk4(h, grid, cfg):
    sub = cfg.substeps
    n_total = grid.steps * sub
    dt = (grid.t1 - grid.t0) / n_total
    out_times = grid.times
    u = np.empty((grid.steps + 1, 2, 2), dtype=complex)
    u[0] = mat2.IDENTITY
    per_chunk = max(1, _CHUNK // sub)
    for j0 in range(0, grid.steps, per_chunk):
        j1 = min(grid.steps, j0 + per_chunk)
        k = np.arange(j0 * sub, j1 * sub + 1)
        nodes = grid.t0 + k * dt
        mids = nodes[:-1] + 0.5 * dt
        h_nodes = h.batch(nodes)
        h_mids = h.batch(mids)
        _check_hermitian(h_nodes, nodes)
        _check_hermitian(h_mids, mids)
        steps = _rk4_step_matrices(h_nodes[:-1], h_mids, h_nodes[1:], dt)
        blocks = _ordered_product(steps.reshape(j1 - j0, sub, 2, 2))
        for j in range(j0, j1):
            u[j + 1] = blocks[j - j0] @ u[j]
        _drift_guard(u[j0 + 1 : j1 + 1], out_times[j0 + 1 : j1 + 1], cfg.max_unitarity_drift)
    return u


def _integrate_rk45(h, grid, cfg):
    times = grid.times

    def rhs(t, y):
        hm = h(t)
        return (-1j * hm @ y.reshape(2, 2)).ravel()

    _check_hermitian(h.batch(times), times)
    sol = solve_ivp(
        rhs,
        (grid.t0, grid.t1),
        mat2.IDENTITY.ravel(),
        method="RK45",
        t_eval=times,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
    )
    if not sol.success:
        raise IntegrationDivergedError(f"adaptive integration failed: {sol.message}", t=float(sol.t[-1]))
    u = sol.y.T.reshape(-1, 2, 2).copy()
    u[0] = mat2.IDENTITY
    return u


def integrate_schrodinger(h_of_t, grid, cfg=None, track_frames=True):
    """Solve ``i dU/dt = H(t) U`` with ``U(t0) = 1`` on ``grid``.

    Parameters
    ----------
    h_of_t : callable or HamiltonianFunction
        Hermitian Hamiltonian as a function of time. A
        :class:`~adia_check.hamiltonians.HamiltonianFunction` is evaluated
        for the whole grid at once.
    grid : TimeGrid
    cfg : IntegratorConfig, optional
    track_frames : bool
        Also build gauge-linked spectral frames and geometric phases at the
        output samples. Requires a nondegenerate spectrum.

    Returns
    -------
    Trajectory

    Raises
    ------
    InvalidArgumentError
        If the Hamiltonian is not hermitian at an evaluated time.
    IntegrationDivergedError
        If ``||U^dagger U - 1||_F`` exceeds ``cfg.max_unitarity_drift``.
    """
    cfg = cfg or IntegratorConfig()
    h = _as_hamiltonian_function(h_of_t)
    if cfg.method == "rk4_fixed":
        u = _integrate_rk4(h, grid, cfg)
    else:
        u = _integrate_rk45(h, grid, cfg)
    errors = _drift_guard(u, grid.times, cfg.max_unitarity_drift)
    traj = Trajectory(grid=grid, u_samples=u, unitarity_errors=errors)
    if track_frames:
        attach_frames(traj, h)
    return traj


def attach_frames(traj, h):
    times = traj.times
    if h.fields is not None:
        a0, r = h.fields(times)
    else:
        a0, r = mat2.pauli_decompose(h.batch(times))
        a0, r = a0.real, r.real
    traj.frames = linked_frames(times, a0, r)
    traj.beta_plus = geometric_phase(traj.frames, "+")
    traj.beta_minus = geometric_phase(traj.frames, "-")
    return traj


def propagate_model(model, grid, cfg=None, track_frames=True):
    from .hamiltonians import hamiltonian_function

    return integrate_schrodinger(hamiltonian_function(model), grid, cfg, track_frames)


# ---------------------------------------------------------------------------
# phases and the adiabatic propagator


def berry_phase(vectors, closed=False):
    """Discrete geometric phase of a chain of state vectors.

    Accumulates ``beta[i+1] = beta[i] - arg <v_i|v_{i+1}>``. With
    ``closed=True`` the link from the last vector back to the first is
    added and the gauge-invariant loop phase is returned, wrapped to
    ``(-pi, pi]``.
    """
    v = np.asarray(vectors, dtype=complex)
    links = np.einsum("ij,ij->i", np.conj(v[:-1]), v[1:])
    beta = np.concatenate([[0.0], -np.cumsum(np.angle(links))])
    if not closed:
        return beta
    loop = beta[-1] - np.angle(np.vdot(v[-1], v[0]))
    return float(np.angle(np.exp(1j * loop)))


def geometric_phase(frames, branch="+"):
    """Geometric phase ``beta_n(t)`` along a gauge-linked frame sequence.

    The phase is measured relative to the branch-formula eigenvectors, so
    ``exp(i beta) |E_n(t)>_raw`` equals the parallel-transported vector
    stored in the frame.
    """
    return berry_phase([f.raw_vector(branch) for f in frames])


def dynamical_phase(frames, branch="+"):
    """Trapezoid-rule ``int_{t0}^{t} E_n`` on the frame grid."""
    t = np.array([f.t for f in frames])
    e = np.array([f.energy(branch) for f in frames])
    return np.concatenate([[0.0], np.cumsum(0.5 * (e[1:] + e[:-1]) * np.diff(t))])


def _require_linked(frames):
    if not frames:
        raise InvalidArgumentError("trajectory carries no spectral frames")
    if not all(f.linked for f in frames[1:]):
        raise InvalidArgumentError("spectral frames are not gauge-linked along the grid")


def adiabatic_propagator(trajectory):
    """Samples of ``U_AT(t) = sum_n exp(-i int E_n) exp(i beta_n) |E_n(t)><E_n(t0)|``."""
    frames = trajectory.frames
    _require_linked(frames)
    out = np.zeros((len(frames), 2, 2), dtype=complex)
    for branch in ("+", "-"):
        phase = np.exp(-1j * dynamical_phase(frames, branch) + 1j * geometric_phase(frames, branch))
        w0 = frames[0].raw_vector(branch)
        for i, f in enumerate(frames):
            out[i] += phase[i] * np.outer(f.raw_vector(branch), np.conj(w0))
    return out


def at_frame_hamiltonian(trajectory, model, index, _phases=None):
    """Analytic ``-i U_AT^dagger dU_AT/dt`` assembled from frames and couplings.

    Diagonal part ``-sum_n E_n(t) |E_n(t0)><E_n(t0)|`` plus the off-diagonal
    terms ``-i exp(i int(E_n - E_m)) exp(-i(beta_n - beta_m)) <E_n|dE_m/dt>``.
    """
    frames = trajectory.frames
    _require_linked(frames)
    if _phases is None:
        _phases = {b: dynamical_phase(frames, b) for b in "+-"}
    f = frames[index]
    h_dot = mat2.pauli_compose(0.0, field_derivative(model, f.t))
    phi = {b: _phases[b][index] for b in "+-"}
    beta = {b: trajectory.beta(b)[index] for b in "+-"}
    w0 = {b: frames[0].raw_vector(b) for b in "+-"}
    w = {b: f.raw_vector(b) for b in "+-"}
    out = np.zeros((2, 2), dtype=complex)
    for n in "+-":
        out -= f.energy(n) * np.outer(w0[n], np.conj(w0[n]))
        for m in "+-":
            if m == n:
                continue
            coupling = np.vdot(w[n], h_dot @ w[m]) / (f.energy(m) - f.energy(n))
            phase = np.exp(1j * (phi[n] - phi[m]) - 1j * (beta[n] - beta[m]))
            out += -1j * phase * coupling * np.outer(w0[n], np.conj(w0[m]))
    return out


def at_frame_hamiltonian_check(trajectory, model, u_at=None):
    """Max Frobenius gap between finite-difference and analytic ``-i U_AT^dagger dU_AT/dt``.

    The left side uses central differences at interior grid points, so the
    residual is ``O(dt^2)``.
    """
    if u_at is None:
        u_at = adiabatic_propagator(trajectory)
    dt = trajectory.grid.dt
    phases = {b: dynamical_phase(trajectory.frames, b) for b in "+-"}
    worst = 0.0
    for i in range(1, len(u_at) - 1):
        derivative = (u_at[i + 1] - u_at[i - 1]) / (2 * dt)
        lhs = -1j * mat2.dagger(u_at[i]) @ derivative
        rhs = at_frame_hamiltonian(trajectory, model, i, phases)
        worst = max(worst, mat2.frobenius(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# modified Hamiltonians


def avron_hamiltonian(model, t):
    """``H_A = H + i [dP/dt, P]`` with ``P`` the projector onto the upper level."""
    dr_hat, r_hat = unit_field_derivative(model, t)
    p = mat2.bloch_projector(r_hat)
    p_dot = 0.5 * mat2.pauli_compose(np.zeros(np.shape(t)), dr_hat)
    return hamiltonian(model, t) + 1j * (p_dot @ p - p @ p_dot)


def avron_hamiltonian_function(model):
    return HamiltonianFunction(lambda times: avron_hamiltonian(model, times), label="avron")


def reversed_frame_hamiltonian(trajectory, model, t_index):
    """``-U^dagger(t, t0) H(t) U(t, t0)``, the generator of ``U^dagger |psi>``."""
    if not -len(trajectory.u_samples) <= t_index < len(trajectory.u_samples):
        raise IndexError(f"t_index {t_index} outside trajectory of length {len(trajectory.u_samples)}")
    u = trajectory.u_samples[t_index]
    h = hamiltonian(model, trajectory.times[t_index])
    return -mat2.dagger(u) @ h @ u
