"""
Time-dependent two-level Hamiltonians ``H(t) = a0(t) 1 + R(t) . sigma``.

Built-in models
---------------
``Counterexample``
    Generated by ``U(t) = exp(-i omega0 t n(t).sigma)`` with ``n(t)`` rotating
    in the x-y plane with period ``tau``. ``R(t)`` carries a small resonant
    term on top of ``omega0 n(t)``.
``RotatingField``
    Spin-1/2 in a field of fixed strength rotating in the x-y plane,
    ``R(t) = omega0 n(t)``.
``LandauZener``
    Linear sweep through an avoided crossing,
    ``R(t) = (rabi, 0, -sweep_rate t / 2)``.
``Constant``
    Time-independent field.
``Tabulated``
    User-supplied samples of ``(a0, R)`` on a uniform grid, cubic spline
    interpolation.

All field evaluations are vectorized over ``t``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import mat2
from .errors import DegenerateSpectrumError, InvalidArgumentError, UnsupportedModelError
from .tolerances import TOL

MODEL_FILE_HEADER = "# adia-model v1"


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be positive and finite, got {value!r}")


def _rotating_axis(t, tau):
    phi = 2 * np.pi * np.asarray(t, dtype=float) / tau
    return np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)


def _rotating_axis_rate(t, tau):
    w = 2 * np.pi / tau
    phi = w * np.asarray(t, dtype=float)
    return w * np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)


@dataclass(frozen=True)
class Counterexample:
    omega0: float
    tau: float

    kind = "counterexample"
    has_closed_form = True

    def __post_init__(self):
        _positive("omega0", self.omega0)
        _positive("tau", self.tau)

    def field(self, t):
        # R = omega0 n + (2 pi sin(omega0 t) / tau) (-sin(2pi t/tau) cos(omega0 t),
        #                                             cos(2pi t/tau) cos(omega0 t),
        #                                             sin(omega0 t))
        t = np.asarray(t, dtype=float)
        w = 2 * np.pi / self.tau
        phi = w * t
        s, c = np.sin(self.omega0 * t), np.cos(self.omega0 * t)
        r = np.stack(
            [
                self.omega0 * np.cos(phi) - w * s * np.sin(phi) * c,
                self.omega0 * np.sin(phi) + w * s * np.cos(phi) * c,
                w * s * s,
            ],
            axis=-1,
        )
        return np.zeros_like(t), r

    def field_derivative(self, t):
        t = np.asarray(t, dtype=float)
        w = 2 * np.pi / self.tau
        phi = w * t
        g = 0.5 * w * np.sin(2 * self.omega0 * t)
        g_dot = w * self.omega0 * np.cos(2 * self.omega0 * t)
        sp, cp = np.sin(phi), np.cos(phi)
        return np.stack(
            [
                -self.omega0 * w * sp - g_dot * sp - g * w * cp,
                self.omega0 * w * cp + g_dot * cp - g * w * sp,
                w * self.omega0 * np.sin(2 * self.omega0 * t),
            ],
            axis=-1,
        )

    def rotation(self, t):
        """``(theta, theta_dot, n, n_dot)`` of the generating rotation."""
        t = float(t)
        return (
            self.omega0 * t,
            self.omega0,
            _rotating_axis(t, self.tau),
            _rotating_axis_rate(t, self.tau),
        )

    def unitary(self, t):
        t = np.asarray(t, dtype=float)
        return mat2.su2_exponential(self.omega0 * t, _rotating_axis(t, self.tau))


@dataclass(frozen=True)
class RotatingField:
    omega0: float
    tau: float

    kind = "rotating_field"
    has_closed_form = True

    def __post_init__(self):
        _positive("omega0", self.omega0)
        _positive("tau", self.tau)

    def field(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros_like(t), self.omega0 * _rotating_axis(t, self.tau)

    def field_derivative(self, t):
        return self.omega0 * _rotating_axis_rate(t, self.tau)

    def _rotating_frame(self):
        w = 2 * np.pi / self.tau
        k = np.array([self.omega0, 0.0, -0.5 * w])
        return w, k

    def unitary(self, t):
        # U(t) = exp(-i (w t / 2) sigma_z) exp(-i t K.sigma),  K = (omega0, 0, -w/2)
        t = np.asarray(t, dtype=float)
        w, k = self._rotating_frame()
        k_norm = np.linalg.norm(k)
        frame = mat2.su2_exponential(0.5 * w * t, np.array([0.0, 0.0, 1.0]))
        body = mat2.su2_exponential(k_norm * t, k / k_norm)
        return frame @ body

    def rotation(self, t):
        """``(theta, theta_dot, n, n_dot)`` with ``U(t) = exp(-i theta n.sigma)``.

        Extracted from the closed-form propagator; the rates follow from
        ``dU/dt = -i H U``.
        """
        t = float(t)
        u = self.unitary(t)
        c = 0.5 * np.trace(u).real
        _, m = mat2.pauli_decompose(1j * u)
        m = m.real  # U = c 1 - i m.sigma with m = sin(theta) n
        a0, r = self.field(t)
        u_dot = -1j * mat2.pauli_compose(a0, r) @ u
        alpha = 0.5 * np.trace(u_dot).real
        _, b = mat2.pauli_decompose(1j * u_dot)
        b = b.real  # dU/dt = alpha 1 - i b.sigma
        s = np.linalg.norm(m)
        theta = np.arctan2(s, c)
        if s < 1e-12:
            n = r / np.linalg.norm(r)
            theta_dot = float(n @ b) / c
            return theta, theta_dot, n, np.zeros(3)
        n = m / s
        theta_dot = -s * alpha + c * float(n @ b)
        n_dot = (b - c * theta_dot * n) / s
        return theta, theta_dot, n, n_dot


@dataclass(frozen=True)
class LandauZener:
    rabi: float
    sweep_rate: float

    kind = "landau_zener"
    has_closed_form = False
    tau = None

    def __post_init__(self):
        if not np.isfinite(self.rabi) or self.rabi == 0:
            raise InvalidArgumentError("rabi must be finite and nonzero")
        if not np.isfinite(self.sweep_rate):
            raise InvalidArgumentError("sweep_rate must be finite")

    def field(self, t):
        t = np.asarray(t, dtype=float)
        r = np.stack(
            [np.full_like(t, self.rabi), np.zeros_like(t), -0.5 * self.sweep_rate * t],
            axis=-1,
        )
        return np.zeros_like(t), r

    def field_derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (3,))
        out[..., 2] = -0.5 * self.sweep_rate
        return out


@dataclass(frozen=True)
class Constant:
    r: tuple

    kind = "constant"
    has_closed_form = False
    tau = None

    def __post_init__(self):
        r = tuple(float(x) for x in self.r)
        if len(r) != 3 or not all(np.isfinite(r)):
            raise InvalidArgumentError("constant field needs three finite components")
        object.__setattr__(self, "r", r)

    def field(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros_like(t), np.broadcast_to(np.array(self.r), t.shape + (3,)).copy()

    def field_derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (3,))


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Cubic-spline interpolation of tabulated ``(t, a0, Rx, Ry, Rz)`` rows."""

    samples: np.ndarray
    tau: Optional[float] = None
    _spline: CubicSpline = field(init=False, repr=False)

    kind = "tabulated"
    has_closed_form = False

    def __post_init__(self):
        data = np.asarray(self.samples, dtype=float)
        if data.ndim != 2 or data.shape[1] != 5 or data.shape[0] < 4:
            raise InvalidArgumentError("tabulated model needs at least 4 rows of 't a0 Rx Ry Rz'")
        if not np.all(np.isfinite(data)):
            raise InvalidArgumentError("tabulated model contains non-finite values")
        dt = np.diff(data[:, 0])
        if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * max(1.0, abs(dt[0])) * len(dt):
            raise InvalidArgumentError("tabulated model times must form a uniform increasing grid")
        object.__setattr__(self, "samples", data)
        object.__setattr__(self, "_spline", CubicSpline(data[:, 0], data[:, 1:], axis=0))

    @property
    def t_range(self):
        return float(self.samples[0, 0]), float(self.samples[-1, 0])

    def field(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.t_range
        slack = 1e-5 * max(1.0, abs(lo), abs(hi))
        if np.any(t < lo - slack) or np.any(t > hi + slack):
            raise InvalidArgumentError(f"time outside tabulated range [{lo}, {hi}]")
        vals = self._spline(t)
        return vals[..., 0], vals[..., 1:]

    def field_derivative(self, t):
        return central_difference(lambda s: self.field(s)[1], t)

    @classmethod
    def from_file(cls, path, tau=None):
        return cls(read_model_file(path), tau=tau)


def central_difference(f, t, step=None):
    """Central finite difference of ``f`` at ``t`` with ``h = 1e-6 max(1, |t|)``."""
    t = np.asarray(t, dtype=float)
    h = 1e-6 * np.maximum(1.0, np.abs(t)) if step is None else step
    h_col = np.asarray(h)[..., None] if np.ndim(h) else h
    return (np.asarray(f(t + h)) - np.asarray(f(t - h))) / (2 * h_col)


def read_model_file(path):
    """Parse a ``# adia-model v1`` file into an ``(N, 5)`` array."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != MODEL_FILE_HEADER:
        raise InvalidArgumentError(f"{path}: first line must be '{MODEL_FILE_HEADER}'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 5 columns 't a0 Rx Ry Rz'")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: {exc}") from None
    return np.array(rows)


def write_model_file(path, samples):
    samples = np.asarray(samples, dtype=float)
    body = "\n".join(" ".join(repr(float(x)) for x in row) for row in samples)
    Path(path).write_text(f"{MODEL_FILE_HEADER}\n{body}\n")


def tabulate(model, times, tau=None):
    """Sample any model onto a :class:`Tabulated` model."""
    times = np.asarray(times, dtype=float)
    a0, r = model.field(times)
    samples = np.column_stack([times, a0, r])
    return Tabulated(samples, tau=getattr(model, "tau", None) if tau is None else tau)


# ---------------------------------------------------------------------------
# public operations


def field_vector(model, t):
    """``(a0, R)`` of ``model`` at time(s) ``t``; scalars for scalar ``t``."""
    a0, r = model.field(t)
    if np.ndim(t) == 0:
        return float(a0), np.asarray(r, dtype=float)
    return a0, r


def field_derivative(model, t):
    """Time derivative of ``R``: analytic for built-in models, finite difference otherwise."""
    deriv = getattr(model, "field_derivative", None)
    if deriv is None:
        return central_difference(lambda s: model.field(s)[1], t)
    return deriv(t)


def hamiltonian(model, t):
    a0, r = model.field(t)
    return mat2.pauli_compose(a0, r)


class HamiltonianFunction:
    """Callable ``t -> H(t)`` with a vectorized :meth:`batch` for whole grids.

    ``fields`` optionally returns ``(a0, R)`` for a batch of times; it lets the
    integrator build spectral frames without decomposing matrices.
    """

    def __init__(self, batch, fields=None, label=""):
        self._batch = batch
        self.fields = fields
        self.label = label

    def batch(self, times):
        return np.asarray(self._batch(np.asarray(times, dtype=float)), dtype=complex)

    def __call__(self, t):
        return self.batch(np.asarray(float(t)))


def hamiltonian_function(model):
    return HamiltonianFunction(
        lambda times: hamiltonian(model, times), fields=model.field, label=model.kind
    )


def closed_form_unitary(model, t):
    """Exact propagator ``U(t, 0)`` for models that have one in closed form.

    For ``Counterexample`` this is ``cos(omega0 t) 1 - i sin(omega0 t) n(t).sigma``.
    ``RotatingField`` uses the rotating-frame solution.
    """
    if not getattr(model, "has_closed_form", False):
        raise UnsupportedModelError(f"no closed-form propagator for {type(model).__name__}")
    return model.unitary(t)


def su2_rotation(model, t):
    """``(theta, theta_dot, n, n_dot)`` such that ``U(t) = exp(-i theta n.sigma)``."""
    rot = getattr(model, "rotation", None)
    if rot is None:
        raise UnsupportedModelError(f"{type(model).__name__} has no theta/n parametrization")
    return rot(t)


# ---------------------------------------------------------------------------
# spectral frames


@dataclass(frozen=True)
class SpectralFrame:
    """Instantaneous eigen-decomposition at time ``t``.

    ``gauge_phase_*`` is the phase accumulated by parallel transport relative
    to the branch-formula eigenvector; ``linked`` is True when the frame was
    phase-matched to a predecessor.
    """

    t: float
    e_plus: float
    e_minus: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    gauge_phase_plus: float = 0.0
    gauge_phase_minus: float = 0.0
    r: Optional[np.ndarray] = None
    linked: bool = False

    @property
    def gap(self):
        return self.e_plus - self.e_minus

    @property
    def r_hat(self):
        return self.r / np.linalg.norm(self.r)

    def vector(self, branch):
        return self.v_plus if branch_sign(branch) > 0 else self.v_minus

    def energy(self, branch):
        return self.e_plus if branch_sign(branch) > 0 else self.e_minus

    def gauge_phase(self, branch):
        return self.gauge_phase_plus if branch_sign(branch) > 0 else self.gauge_phase_minus

    def raw_vector(self, branch):
        """Eigenvector in the branch-formula gauge (parallel-transport phase removed)."""
        return np.exp(-1j * self.gauge_phase(branch)) * self.vector(branch)


def branch_sign(branch):
    if branch in ("+", "plus", 1, +1):
        return 1
    if branch in ("-", "minus", -1):
        return -1
    raise InvalidArgumentError(f"branch must be '+' or '-', got {branch!r}")


def branch_eigenvectors(r):
    """Normalized ``(v_plus, v_minus)`` of ``R.sigma``, vectorized over ``r[..., :]``.

    The formula switches on the sign of ``R_z`` so that neither vector
    degenerates at the poles of the Bloch sphere.
    """
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    norm = np.linalg.norm(r, axis=-1)
    upper = z >= 0
    vp = np.empty(r.shape[:-1] + (2,), dtype=complex)
    vm = np.empty_like(vp)
    vp[..., 0] = np.where(upper, norm + z, x - 1j * y)
    vp[..., 1] = np.where(upper, x + 1j * y, norm - z)
    vm[..., 0] = np.where(upper, -(x - 1j * y), norm - z)
    vm[..., 1] = np.where(upper, norm + z, -(x + 1j * y))
    vp /= np.linalg.norm(vp, axis=-1, keepdims=True)
    vm /= np.linalg.norm(vm, axis=-1, keepdims=True)
    return vp, vm


def _check_gap(norm, times):
    bad = np.asarray(norm) <= TOL.gap_floor
    if np.any(bad):
        t_bad = np.asarray(times, dtype=float).reshape(-1)[np.argmax(np.asarray(bad).reshape(-1))]
        raise DegenerateSpectrumError(f"level gap below {TOL.gap_floor:g} at t={t_bad:g}")


def spectral_frame(model, t, prev=None):
    """Eigenvalues and gauge-smoothed eigenvectors of ``H(t)``.

    With ``prev`` given, each eigenvector is re-phased so that its overlap with
    the corresponding vector of ``prev`` is real and positive.
    """
    a0, r = field_vector(model, float(t))
    return frame_from_field(float(t), a0, r, prev)


def frame_from_field(t, a0, r, prev=None):
    r = np.asarray(r, dtype=float)
    norm = float(np.linalg.norm(r))
    _check_gap(norm, t)
    vp, vm = branch_eigenvectors(r)
    phase_p = phase_m = 0.0
    if prev is not None:
        phase_p = prev.gauge_phase_plus - np.angle(np.vdot(prev.raw_vector("+"), vp))
        phase_m = prev.gauge_phase_minus - np.angle(np.vdot(prev.raw_vector("-"), vm))
        vp = np.exp(1j * phase_p) * vp
        vm = np.exp(1j * phase_m) * vm
    return SpectralFrame(
        t=float(t),
        e_plus=a0 + norm,
        e_minus=a0 - norm,
        v_plus=vp,
        v_minus=vm,
        gauge_phase_plus=float(phase_p),
        gauge_phase_minus=float(phase_m),
        r=r.copy(),
        linked=prev is not None,
    )


def linked_frames(times, a0, r):
    """Gauge-linked frames along a grid, computed in one vectorized pass."""
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    a0 = np.broadcast_to(np.asarray(a0, dtype=float), times.shape)
    norm = np.linalg.norm(r, axis=-1)
    _check_gap(norm, times)
    vp, vm = branch_eigenvectors(r)
    phases = []
    for v in (vp, vm):
        links = np.einsum("ij,ij->i", np.conj(v[:-1]), v[1:])
        phases.append(np.concatenate([[0.0], -np.cumsum(np.angle(links))]))
    frames = []
    for i, t in enumerate(times):
        pp, pm = phases[0][i], phases[1][i]
        frames.append(
            SpectralFrame(
                t=float(t),
                e_plus=float(a0[i] + norm[i]),
                e_minus=float(a0[i] - norm[i]),
                v_plus=np.exp(1j * pp) * vp[i],
                v_minus=np.exp(1j * pm) * vm[i],
                gauge_phase_plus=float(pp),
                gauge_phase_minus=float(pm),
                r=r[i].copy(),
                linked=i > 0,
            )
        )
    return frames


def spectral_frames(model, times):
    a0, r = model.field(np.asarray(times, dtype=float))
    return linked_frames(times, a0, r)


def coupling_element(model, t, frame=None):
    """``<E+|d/dt E->`` evaluated as ``<E+|dH/dt|E-> / (E- - E+)``.

    The phase depends on the eigenvector gauge of ``frame``; the magnitude
    does not.
    """
    if frame is None:
        frame = spectral_frame(model, t)
    _check_gap(0.5 * frame.gap, t)
    h_dot = mat2.pauli_compose(0.0, field_derivative(model, float(t)))
    return complex(np.vdot(frame.v_plus, h_dot @ frame.v_minus) / (frame.e_minus - frame.e_plus))


def adiabaticity_ratio(model, t):
    """``|<E+|d/dt E->| / |E+ - E-|``; small values mean slow variation."""
    frame = spectral_frame(model, t)
    return abs(coupling_element(model, t, frame)) / frame.gap


def unit_field_derivative(model, t):
    """``d/dt (R / |R|)`` and ``R / |R|``, vectorized."""
    _, r = model.field(t)
    r_dot = field_derivative(model, t)
    norm = np.linalg.norm(r, axis=-1, keepdims=True)
    _check_gap(norm, t)
    r_hat = r / norm
    along = np.sum(r_hat * r_dot, axis=-1, keepdims=True)
    return (r_dot - along * r_hat) / norm, r_hat
