"""
Small dense linear algebra for two-level systems.

Matrices are ``(2, 2)`` complex numpy arrays, state vectors are ``(2,)``
complex arrays and field vectors are ``(3,)`` real arrays. Most functions
also accept leading batch dimensions, so a whole time grid of Hamiltonians
can be built with one call.
"""

import numpy as np

from .errors import InvalidArgumentError
from .tolerances import TOL

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


def _require_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidArgumentError("non-finite input")


def pauli_compose(a0, r):
    """Return ``a0 * 1 + r . sigma``.

    Parameters
    ----------
    a0 : float or array_like, shape (...)
        Coefficient of the identity.
    r : array_like, shape (..., 3)
        Pauli coefficients (x, y, z).

    Returns
    -------
    ndarray, shape (..., 2, 2)
    """
    a0 = np.asarray(a0, dtype=float)
    r = np.asarray(r, dtype=float)
    _require_finite(a0, r)
    if r.shape[-1] != 3:
        raise InvalidArgumentError(f"field vector must have 3 components, got shape {r.shape}")
    out = np.empty(r.shape[:-1] + (2, 2), dtype=complex)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    out[..., 0, 0] = a0 + z
    out[..., 1, 1] = a0 - z
    out[..., 0, 1] = x - 1j * y
    out[..., 1, 0] = x + 1j * y
    return out


def pauli_decompose(m):
    """Inverse of :func:`pauli_compose`.

    Returns ``(a0, r)`` with complex coefficients; both are real (up to
    rounding) when ``m`` is hermitian.
    """
    m = np.asarray(m, dtype=complex)
    a0 = 0.5 * (m[..., 0, 0] + m[..., 1, 1])
    r = np.stack(
        [
            0.5 * (m[..., 0, 1] + m[..., 1, 0]),
            0.5j * (m[..., 0, 1] - m[..., 1, 0]),
            0.5 * (m[..., 0, 0] - m[..., 1, 1]),
        ],
        axis=-1,
    )
    return a0, r


def su2_exponential(theta, n):
    """Closed form ``exp(-i theta n.sigma) = cos(theta) 1 - i sin(theta) n.sigma``.

    ``n`` must be a unit vector (within ``TOL.unit_vector``).
    """
    theta = np.asarray(theta, dtype=float)
    n = np.asarray(n, dtype=float)
    _require_finite(theta, n)
    norm = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(norm - 1.0) > TOL.unit_vector):
        raise InvalidArgumentError("rotation axis must be a unit vector")
    c = np.cos(theta)
    s = np.sin(theta)
    out = np.empty(np.broadcast_shapes(theta.shape, n.shape[:-1]) + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * n[..., 2]
    out[..., 1, 1] = c + 1j * s * n[..., 2]
    out[..., 0, 1] = -1j * s * (n[..., 0] - 1j * n[..., 1])
    out[..., 1, 0] = -1j * s * (n[..., 0] + 1j * n[..., 1])
    return out


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def overlap(a, b):
    """Inner product <a|b>, conjugate-linear in ``a``."""
    return complex(np.vdot(a, b))


def frobenius(m):
    return float(np.linalg.norm(m))


def unitarity_error(m):
    """Frobenius norm of ``M^dagger M - 1``."""
    m = np.asarray(m, dtype=complex)
    return frobenius(dagger(m) @ m - IDENTITY)


def hermiticity_error(m):
    m = np.asarray(m, dtype=complex)
    return frobenius(m - dagger(m))


def is_hermitian(m, tol=None):
    tol = TOL.hermitian if tol is None else tol
    return hermiticity_error(m) <= tol


def is_unitary(m, tol=None):
    tol = TOL.unitary if tol is None else tol
    return unitarity_error(m) <= tol


def projector(v):
    """Rank-1 projector ``|v><v| / <v|v>``."""
    v = np.asarray(v, dtype=complex)
    return np.outer(v, np.conj(v)) / np.vdot(v, v).real


def bloch_projector(r_hat, sign=1):
    """``(1 + sign * r_hat.sigma) / 2`` for a unit vector ``r_hat``."""
    return 0.5 * pauli_compose(1.0, sign * np.asarray(r_hat, dtype=float))


_RANK_FLOOR = 64 * np.finfo(float).eps


def _psd_invariants(m):
    """``(tr M, sqrt(det M))`` with the determinant zeroed below rounding level.

    The square root amplifies rounding noise in a vanishing eigenvalue from
    ~1e-17 to ~1e-9, so determinants under ``64 eps tr^2`` count as exact zeros.
    """
    m = np.asarray(m, dtype=complex)
    tr = max(float(np.trace(m).real), 0.0)
    det = float((m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real)
    if det <= _RANK_FLOOR * tr * tr:
        det = 0.0
    return tr, np.sqrt(det)


def sqrtm_psd(m):
    """Principal square root of a hermitian positive semidefinite 2x2 matrix.

    Closed form ``(M + sqrt(det M) 1) / sqrt(tr M + 2 sqrt(det M))``.
    """
    tr, root_det = _psd_invariants(m)
    denom = np.sqrt(tr + 2 * root_det)
    if denom == 0:
        return np.zeros((2, 2), dtype=complex)
    return (np.asarray(m, dtype=complex) + root_det * IDENTITY) / denom


def trace_sqrt_psd(m):
    """``Tr sqrt(M) = sqrt(tr M + 2 sqrt(det M))`` for 2x2 positive semidefinite ``M``."""
    tr, root_det = _psd_invariants(m)
    return float(np.sqrt(tr + 2 * root_det))


def trace_fidelity(p, q):
    """Uhlmann form ``Tr sqrt(sqrt(p) q sqrt(p))`` for positive semidefinite p, q."""
    sp = sqrtm_psd(p)
    return trace_sqrt_psd(sp @ np.asarray(q, dtype=complex) @ sp)
