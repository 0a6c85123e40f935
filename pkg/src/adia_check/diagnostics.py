"""
Scalar diagnostics that test the adiabatic prediction against exact dynamics.

Notation: ``U`` is the exact propagator, ``|+(t)>`` the upper instantaneous
eigenvector and ``P`` the matching spectral projector.

``Q``
    ``Tr P_{U|+(0)>} P_{|+(t)>}``; 1 when the adiabatic prediction holds.
``F0``
    ``|<+(t)|+(0)>|``; small values flag that the eigenstate moved far.
``F1``
    ``|<+(0)|U U^dagger|+(0)>|``, which is 1 by unitarity. The naive
    adiabatic chain instead assigns it the value ``|<+(0)|U|+(0)>|``.
``F``
    Fidelity between the exact evolution and the evolution generated by
    ``H + i[dP/dt, P]``.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import mat2
from .errors import (
    AdiaCheckError,
    DegenerateSpectrumError,
    EnsembleMemberError,
    InvalidArgumentError,
)
from .hamiltonians import (
    adiabaticity_ratio,
    branch_sign,
    field_vector,
    spectral_frame,
    su2_rotation,
)
from .propagation import (
    avron_hamiltonian_function,
    integrate_schrodinger,
    propagate_model,
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    adiabaticity_ratio: Optional[float] = None
    q_numeric: Optional[float] = None
    q_analytic: Optional[float] = None
    f0: Optional[float] = None
    f1_exact: Optional[float] = None
    f1_naive: Optional[float] = None
    fidelity_avron: Optional[float] = None
    prediction_residual: Optional[float] = None


def instantaneous_projector(frame, branch="+"):
    """``(1 +/- R_hat.sigma) / 2`` for the requested branch of ``frame``."""
    if frame.r is None or np.linalg.norm(frame.r) == 0:
        raise DegenerateSpectrumError(f"degenerate frame at t={frame.t:g}")
    return mat2.bloch_projector(frame.r_hat, branch_sign(branch))


def evolved_projector(trajectory, t_index, branch="+"):
    """``U P(t0) U^dagger``."""
    u = trajectory.u_samples[t_index]
    p0 = instantaneous_projector(trajectory.frames[0], branch)
    return u @ p0 @ mat2.dagger(u)


def survival_q(trajectory, t_index, branch="+"):
    """``Tr(P_{U|+(0)>} P_{|+(t)>})``."""
    p_t = instantaneous_projector(trajectory.frames[t_index], branch)
    return float(np.trace(evolved_projector(trajectory, t_index, branch) @ p_t).real)


def survival_q_overlap(trajectory, t_index, branch="+"):
    """``|<+(t)|U|+(0)>|^2``, the state-vector route to Q."""
    v0 = trajectory.frames[0].vector(branch)
    vt = trajectory.frames[t_index].vector(branch)
    return abs(np.vdot(vt, trajectory.u_samples[t_index] @ v0)) ** 2


def general_condition_q(theta, theta_dot, n, n_dot, n_initial, r_norm):
    """Closed-form Q for ``U = exp(-i theta n.sigma)``.

    ``Q = (1 + n(0) . (theta_dot n + cos(theta) sin(theta) n_dot
    - sin^2(theta) n x n_dot) / |R|) / 2``.
    """
    s, c = np.sin(theta), np.cos(theta)
    numerator = theta_dot * n + c * s * n_dot - s * s * np.cross(n, n_dot)
    return 0.5 * (1.0 + float(np.dot(n_initial, numerator)) / r_norm)


def q_analytic(model, t):
    """Q from the model's ``theta(t), n(t)`` parametrization (``U(0) = 1``)."""
    theta, theta_dot, n, n_dot = su2_rotation(model, t)
    _, _, n_initial, _ = su2_rotation(model, 0.0)
    _, r = field_vector(model, t)
    return general_condition_q(theta, theta_dot, n, n_dot, n_initial, np.linalg.norm(r))


def overlap_f0(frames, t_index, branch="+"):
    """``|<E(t)|E(t0)>|`` for the tracked branch."""
    return abs(np.vdot(frames[t_index].vector(branch), frames[0].vector(branch)))


def f1_exact(trajectory, t_index, branch="+"):
    v0 = trajectory.frames[0].vector(branch)
    u = trajectory.u_samples[t_index]
    return abs(np.vdot(v0, u @ mat2.dagger(u) @ v0))


def f1_naive(trajectory, t_index, branch="+"):
    """``|<E(0)|U(t)|E(0)>|``, the value the naive chain equates to ``F0``."""
    v0 = trajectory.frames[0].vector(branch)
    return abs(np.vdot(v0, trajectory.u_samples[t_index] @ v0))


@dataclass(frozen=True)
class InconsistencyReport:
    t: float
    f1_exact: float
    f1_naive: float
    f0: float

    @property
    def contradiction(self):
        """How far the naive value sits from the exact value 1."""
        return abs(self.f1_exact - self.f1_naive)


def inconsistency_demo(model, grid, cfg=None, branch="+", trajectory=None):
    """Exact ``F1`` versus its naive adiabatic value at the end of ``grid``."""
    traj = trajectory or propagate_model(model, grid, cfg)
    i = len(traj.u_samples) - 1
    return InconsistencyReport(
        t=float(traj.times[i]),
        f1_exact=f1_exact(traj, i, branch),
        f1_naive=f1_naive(traj, i, branch),
        f0=overlap_f0(traj.frames, i, branch),
    )


def prediction_residual(trajectory, t_index, branch="+"):
    """``||U P(0) U^dagger - P(t)||_F``; ``sqrt(2)`` for orthogonal projectors."""
    p_t = instantaneous_projector(trajectory.frames[t_index], branch)
    return mat2.frobenius(evolved_projector(trajectory, t_index, branch) - p_t)


def adiabatic_prediction_check(model, grid, cfg=None, t_index=-1, branch="+"):
    return prediction_residual(propagate_model(model, grid, cfg), t_index, branch)


def avron_trajectory(model, grid, cfg=None):
    """Propagator generated by ``H_A = H + i[dP/dt, P]``."""
    return integrate_schrodinger(avron_hamiltonian_function(model), grid, cfg, track_frames=False)


def fidelity_series(exact, modified, branch="+"):
    """``|<+(0)|U^dagger U_A|+(0)>|`` at every sample.

    This is the trace form ``Tr sqrt(sqrt(P) Q sqrt(P))`` specialised to
    rank-1 projectors.
    """
    v0 = exact.frames[0].vector(branch)
    a = exact.u_samples @ v0
    b = modified.u_samples @ v0
    # states are normalized here so that drift-level norm error stays out of F
    norms = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
    return np.abs(np.einsum("ij,ij->i", np.conj(a), b)) / norms


def avron_fidelity(model, grid, cfg=None, t_index=-1, branch="+"):
    exact = propagate_model(model, grid, cfg)
    modified = avron_trajectory(model, grid, cfg)
    return float(fidelity_series(exact, modified, branch)[t_index])


def evaluate(model, grid, cfg=None, include=None, branch="+", trajectory=None):
    """Run every requested diagnostic on ``grid``.

    Returns a dict of column name to array (``None`` for diagnostics that
    were not requested), keyed like the CSV report.
    """
    include = set(include or ALL_DIAGNOSTICS)
    unknown = include - set(ALL_DIAGNOSTICS)
    if unknown:
        raise InvalidArgumentError(f"unknown diagnostics: {sorted(unknown)}")
    traj = trajectory or propagate_model(model, grid, cfg)
    n = len(traj.u_samples)
    idx = range(n)
    times = traj.times
    cols = dict.fromkeys(REPORT_COLUMNS)
    cols["t"] = times
    cols["e_plus"] = np.array([f.e_plus for f in traj.frames])
    cols["e_minus"] = np.array([f.e_minus for f in traj.frames])
    cols["unitarity_error"] = traj.unitarity_errors
    if "adicrit" in include:
        cols["adicrit_ratio"] = np.array([adiabaticity_ratio(model, t) for t in times])
    if "q" in include:
        cols["q_numeric"] = np.array([survival_q(traj, i, branch) for i in idx])
    if "q_analytic" in include:
        if branch_sign(branch) < 0:
            raise InvalidArgumentError("q_analytic is defined for the '+' branch")
        cols["q_analytic"] = np.array([q_analytic(model, t) for t in times])
    if "f0" in include:
        cols["f0"] = np.array([overlap_f0(traj.frames, i, branch) for i in idx])
    if "f1" in include:
        cols["f1_exact"] = np.array([f1_exact(traj, i, branch) for i in idx])
        cols["f1_naive"] = np.array([f1_naive(traj, i, branch) for i in idx])
    if "avron_fidelity" in include:
        cols["fidelity_avron"] = fidelity_series(traj, avron_trajectory(model, grid, cfg), branch)
    if "prediction_check" in include:
        cols["prediction_residual"] = np.array([prediction_residual(traj, i, branch) for i in idx])
    return cols


def records(columns):
    """Row-wise :class:`DiagnosticsRecord` view of :func:`evaluate` output."""
    def pick(name, i):
        col = columns.get(name)
        return None if col is None else float(col[i])

    return [
        DiagnosticsRecord(
            t=float(t),
            adiabaticity_ratio=pick("adicrit_ratio", i),
            q_numeric=pick("q_numeric", i),
            q_analytic=pick("q_analytic", i),
            f0=pick("f0", i),
            f1_exact=pick("f1_exact", i),
            f1_naive=pick("f1_naive", i),
            fidelity_avron=pick("fidelity_avron", i),
            prediction_residual=pick("prediction_residual", i),
        )
        for i, t in enumerate(columns["t"])
    ]


ALL_DIAGNOSTICS = ("adicrit", "q", "q_analytic", "f0", "f1", "avron_fidelity", "prediction_check")

REPORT_COLUMNS = (
    "t",
    "t_over_tau",
    "e_plus",
    "e_minus",
    "adicrit_ratio",
    "q_numeric",
    "q_analytic",
    "f0",
    "f1_exact",
    "f1_naive",
    "fidelity_avron",
    "prediction_residual",
    "unitarity_error",
)


# ---------------------------------------------------------------------------
# classical ensembles


@dataclass(frozen=True)
class EnsembleMember:
    weight: float
    model: object


@dataclass(frozen=True)
class EnsembleSpec:
    members: Sequence[EnsembleMember]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InvalidArgumentError("ensemble needs at least one member")
        for i, m in enumerate(members):
            if not (np.isfinite(m.weight) and 0 < m.weight <= 1):
                raise InvalidArgumentError(f"member {i}: weight must lie in (0, 1], got {m.weight!r}")
        total = sum(m.weight for m in members)
        if abs(total - 1.0) > 1e-9:
            raise InvalidArgumentError(f"ensemble weights sum to {total!r}, expected 1")
        object.__setattr__(self, "members", members)

    @property
    def weights(self):
        return np.array([m.weight for m in self.members])


def _thread_cap():
    raw = os.environ.get("ADIA_CHECK_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"ADIA_CHECK_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def propagate_ensemble(spec, grid, cfg=None, threads=None):
    """One exact trajectory per member, in member order.

    Members run concurrently (capped by ``threads`` or ``ADIA_CHECK_THREADS``).
    """
    threads = threads or _thread_cap() or min(4, len(spec.members))

    def run(item):
        i, member = item
        try:
            return propagate_model(member.model, grid, cfg)
        except AdiaCheckError as exc:
            raise EnsembleMemberError(i, exc) from exc

    if threads == 1:
        return [run(item) for item in enumerate(spec.members)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, enumerate(spec.members)))


def ensemble_f0(spec, t, branch="+", t0=0.0):
    """``Tr sum_a p_a P_{|E_a(t0)>} P_{|E_a(t)>}``.

    For a single member this is ``F0 ** 2``: the trace of two rank-1
    projectors is the squared overlap.
    """
    total = 0.0
    for i, member in enumerate(spec.members):
        try:
            p0 = instantaneous_projector(spectral_frame(member.model, t0), branch)
            pt = instantaneous_projector(spectral_frame(member.model, t), branch)
        except AdiaCheckError as exc:
            raise EnsembleMemberError(i, exc) from exc
        total += member.weight * float(np.trace(p0 @ pt).real)
    return total


def ensemble_q(spec, trajectories, t_index, branch="+"):
    """``Tr sum_a p_a P_{U_a|E_a(0)>} P_{|E_a(t)>}``."""
    if len(trajectories) != len(spec.members):
        raise InvalidArgumentError("need exactly one trajectory per ensemble member")
    return sum(
        member.weight * survival_q(traj, t_index, branch)
        for member, traj in zip(spec.members, trajectories)
    )


def ensemble_density_matrix(spec, trajectories, t_index, branch="+"):
    """``rho(t) = sum_a p_a U_a P_{|E_a(0)>} U_a^dagger``."""
    return sum(
        member.weight * evolved_projector(traj, t_index, branch)
        for member, traj in zip(spec.members, trajectories)
    )
