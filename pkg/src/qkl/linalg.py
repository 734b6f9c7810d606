"""Dense linear-algebra kernels used throughout the package.

Everything here operates on plain numpy arrays and is pure: no state, safe
to call concurrently.  Eigenvalue-like outputs are always sorted in
descending order so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotHurwitzError, NotPositiveDefiniteError

__all__ = [
    "J2",
    "pair_symplectic",
    "block_symplectic",
    "expm",
    "lyap",
    "spectral_radius",
    "herm_eig",
    "WilliamsonFactorization",
    "williamson",
    "is_hurwitz",
    "assert_hurwitz",
]

#: 2x2 standard symplectic form; generates plane rotations and spans the
#: antisymmetric matrices of order two.
J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def pair_symplectic(n_pairs: int) -> np.ndarray:
    """Symplectic form ``I ⊗ J2`` for interleaved (position, momentum) pairs."""
    return np.kron(np.eye(n_pairs), J2)


def block_symplectic(m: int) -> np.ndarray:
    """Symplectic form ``J2 ⊗ I`` for a vector stacked positions-then-momenta.

    ``m`` must be even; this is the CCR structure matrix of an m-channel
    field vector.  The matrix is orthogonal, antisymmetric and squares
    to ``-I``.
    """
    if m % 2:
        raise ValueError(f"channel count must be even, got {m}")
    return np.kron(J2, np.eye(m // 2))


def expm(a: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(t a)``.

    Delegates to scipy's scaling-and-squaring implementation with a
    degree-13 Pade rational approximant, which keeps the relative backward
    error near unit roundoff for any square input.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return scipy.linalg.expm(t * a)


def is_hurwitz(a: np.ndarray, margin: float = 1e-9) -> bool:
    """True when every eigenvalue of ``a`` has real part below ``-margin``."""
    return bool(np.max(np.linalg.eigvals(a).real) < -margin)


def assert_hurwitz(a: np.ndarray, margin: float = 1e-9) -> None:
    """Raise :class:`NotHurwitzError` naming the worst eigenvalue if not stable.

    The margin guards against marginally stable matrices that would break
    the Lyapunov solves downstream.
    """
    eigs = np.linalg.eigvals(a)
    worst = eigs[np.argmax(eigs.real)]
    if worst.real >= -margin:
        raise NotHurwitzError(worst)


def lyap(a: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve the algebraic Lyapunov equation ``a x + x aᵀ + q = 0``.

    ``a`` must be Hurwitz.  ``q`` may be complex, in which case the real
    and imaginary parts are solved separately (the equation is linear and
    ``a`` is real).  Uses the Schur-based Bartels-Stewart solver, adequate
    for the small dense problems handled here.
    """
    a = np.asarray(a, dtype=float)
    q = np.asarray(q)
    if a.shape[0] != a.shape[1] or a.shape != q.shape:
        raise ValueError(f"shape mismatch: a {a.shape}, q {q.shape}")
    assert_hurwitz(a)
    if np.iscomplexobj(q):
        xr = scipy.linalg.solve_continuous_lyapunov(a, -q.real)
        xi = scipy.linalg.solve_continuous_lyapunov(a, -q.imag)
        return xr + 1j * xi
    return scipy.linalg.solve_continuous_lyapunov(a, -q)


def spectral_radius(a: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def herm_eig(a: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, v)`` with ``a = v @ diag(w) @ v.conj().T`` and ``v``
    unitary.  Raises if ``a`` deviates from Hermitian by more than ``tol``
    relative to its norm.
    """
    a = np.asarray(a)
    scale = max(np.linalg.norm(a), 1.0)
    if np.linalg.norm(a - a.conj().T) > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(a)
    return w[::-1], v[:, ::-1]


@dataclass(frozen=True)
class WilliamsonFactorization:
    """Symplectic congruence ``uᵀ h u = diag(σ) ⊗ I₂`` of a positive definite h.

    ``u`` satisfies ``u J u.T = J`` for the interleaved form
    ``J = pair_symplectic(N)``, and ``sigmas`` holds the N symplectic
    eigenvalues in descending order.
    """

    u: np.ndarray
    sigmas: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.sigmas)


def williamson(h: np.ndarray) -> WilliamsonFactorization:
    """Williamson symplectic diagonalization of a symmetric positive definite matrix.

    The construction: with ``s = h^{1/2}`` from the symmetric
    eigendecomposition, ``k = s J s`` is skew-symmetric, so ``i k`` is
    Hermitian with eigenvalues ``±σ`` in conjugate pairs.  For each
    eigenvector ``x + i y`` of ``+σ`` the real columns ``(√2 y, √2 x)``
    span a plane on which ``k`` acts as ``σ J2``; stacking those columns
    gives an orthogonal ``o`` with ``oᵀ k o = blockdiag(σ_k J2)``, and
    ``u = h^{-1/2} o blockdiag(√σ_k I₂)`` is the symplectic factor.

    Within a degenerate σ-cluster the factor is unique only up to an
    orthogonal symplectic mixing; any valid representative is returned.
    """
    h = np.asarray(h, dtype=float)
    dim = h.shape[0]
    if h.ndim != 2 or h.shape[1] != dim or dim % 2:
        raise ValueError(f"expected a square even-order matrix, got shape {h.shape}")
    if np.linalg.norm(h - h.T) > 1e-12 * max(np.linalg.norm(h), 1.0):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("matrix is not positive definite") from None

    n_modes = dim // 2
    w, p = np.linalg.eigh(h)
    sqrt_h = (p * np.sqrt(w)) @ p.T
    inv_sqrt_h = (p / np.sqrt(w)) @ p.T

    skew = sqrt_h @ pair_symplectic(n_modes) @ sqrt_h
    lam, vecs = np.linalg.eigh(1j * skew)
    order = np.argsort(-lam)[:n_modes]
    sigmas = lam[order].copy()

    ortho = np.empty((dim, dim))
    for col, i in enumerate(order):
        v = vecs[:, i]
        ortho[:, 2 * col] = np.sqrt(2.0) * v.imag
        ortho[:, 2 * col + 1] = np.sqrt(2.0) * v.real

    u = inv_sqrt_h @ ortho * np.repeat(np.sqrt(sigmas), 2)
    return WilliamsonFactorization(u=u, sigmas=sigmas)
