"""Open quantum harmonic oscillator models and their invariant covariance.

A model is specified by a CCR matrix (real antisymmetric, nonsingular), an
energy matrix (real symmetric) and a coupling matrix; the drift and
dispersion follow as ``A = 2Θ(R + MᵀJM)``, ``B = 2ΘMᵀ``.  Any valid pair
satisfies the physical-realizability identity ``AΘ + ΘAᵀ + BJBᵀ = 0``,
which this module verifies on construction and uses to recover Θ from
``(A, B)`` via a Lyapunov solve.

For a stable model with vacuum inputs the invariant one-point covariance
is ``V = Σ + iΘ`` with ``Σ`` the controllability Gramian, and the
stationary two-point covariance kernel is ``e^{τA} V`` for ``τ >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ToleranceError
from .linalg import J2, assert_hurwitz, block_symplectic, expm, is_hurwitz, lyap

__all__ = [
    "OqhoModel",
    "build_model",
    "model_from_state_space",
    "canonical_model",
    "pr_residual",
    "recover_theta",
    "CovarianceKernel",
    "steady_covariance",
    "two_point_covariance",
    "two_point_ccr",
]

PR_TOL = 1e-12


def _check_ccr_matrix(theta: np.ndarray) -> None:
    n = theta.shape[0]
    if theta.ndim != 2 or theta.shape[1] != n or n % 2:
        raise ValueError(f"CCR matrix must be square of even order, got {theta.shape}")
    if np.linalg.norm(theta + theta.T) > 1e-12 * max(np.linalg.norm(theta), 1.0):
        raise ValueError("CCR matrix must be antisymmetric")
    svals = np.linalg.svd(theta, compute_uv=False)
    if svals[-1] <= 1e-12 * svals[0]:
        raise ValueError("CCR matrix is singular (or numerically so)")


@dataclass(frozen=True)
class OqhoModel:
    """Immutable state-space data of an open quantum harmonic oscillator.

    ``energy`` and ``coupling`` are ``None`` when the model was built
    directly from ``(drift, dispersion, theta)``.
    """

    theta: np.ndarray
    drift: np.ndarray
    dispersion: np.ndarray
    field_j: np.ndarray
    energy: np.ndarray | None = None
    coupling: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def m(self) -> int:
        return self.field_j.shape[0]

    def is_stable(self, margin: float = 1e-9) -> bool:
        """True when the drift is Hurwitz with the given margin."""
        return is_hurwitz(self.drift, margin)


def pr_residual(model: OqhoModel) -> float:
    """Frobenius norm of ``AΘ + ΘAᵀ + BJBᵀ`` (zero for a physical model)."""
    a, b, th, j = model.drift, model.dispersion, model.theta, model.field_j
    return float(np.linalg.norm(a @ th + th @ a.T + b @ j @ b.T))


def _validated(model: OqhoModel) -> OqhoModel:
    resid = pr_residual(model)
    scale = max(1.0, np.linalg.norm(model.drift @ model.theta))
    if resid > PR_TOL * scale:
        raise ToleranceError(
            f"physical-realizability residual {resid:.3e} exceeds "
            f"{PR_TOL:.0e} (relative to {scale:.3e})"
        )
    return model


def build_model(
    theta: np.ndarray,
    energy: np.ndarray,
    coupling: np.ndarray,
    require_stable: bool = False,
) -> OqhoModel:
    """Construct a model from CCR, energy and coupling matrices.

    The drift ``2Θ(R + MᵀJM)`` and dispersion ``2ΘMᵀ`` are derived and the
    physical-realizability residual is verified.  Set ``require_stable``
    to also insist on a Hurwitz drift.
    """
    theta = np.asarray(theta, dtype=float)
    energy = np.asarray(energy, dtype=float)
    coupling = np.asarray(coupling, dtype=float)
    _check_ccr_matrix(theta)
    n = theta.shape[0]
    if energy.shape != (n, n):
        raise ValueError(f"energy matrix must be {n}x{n}, got {energy.shape}")
    if np.linalg.norm(energy - energy.T) > 1e-12 * max(np.linalg.norm(energy), 1.0):
        raise ValueError("energy matrix must be symmetric")
    m = coupling.shape[0]
    if coupling.shape != (m, n) or m % 2:
        raise ValueError(
            f"coupling matrix must have an even row count and {n} columns, "
            f"got {coupling.shape}"
        )
    field_j = block_symplectic(m)
    drift = 2.0 * theta @ (energy + coupling.T @ field_j @ coupling)
    dispersion = 2.0 * theta @ coupling.T
    model = _validated(
        OqhoModel(
            theta=theta,
            drift=drift,
            dispersion=dispersion,
            field_j=field_j,
            energy=energy,
            coupling=coupling,
        )
    )
    if require_stable:
        assert_hurwitz(drift)
    return model


def model_from_state_space(
    drift: np.ndarray, dispersion: np.ndarray, theta: np.ndarray
) -> OqhoModel:
    """Construct a model directly from ``(A, B, Θ)``.

    The physical-realizability residual is validated, so an inconsistent
    triple is rejected; useful for injecting hand-made test systems
    without going through the energy/coupling parameterization.
    """
    drift = np.asarray(drift, dtype=float)
    dispersion = np.asarray(dispersion, dtype=float)
    theta = np.asarray(theta, dtype=float)
    _check_ccr_matrix(theta)
    n = theta.shape[0]
    m = dispersion.shape[1]
    if drift.shape != (n, n) or dispersion.shape != (n, m) or m % 2:
        raise ValueError(
            f"inconsistent shapes: drift {drift.shape}, dispersion "
            f"{dispersion.shape}, theta {theta.shape}"
        )
    return _validated(
        OqhoModel(
            theta=theta,
            drift=drift,
            dispersion=dispersion,
            field_j=block_symplectic(m),
        )
    )


def canonical_model() -> OqhoModel:
    """The hand-checkable two-variable fixture used across the test suites.

    CCR matrix J2, zero energy, identity coupling; the drift is ``-2 I``,
    the dispersion ``2 J2`` and the invariant covariance ``I + i J2``.
    """
    return build_model(J2, np.zeros((2, 2)), np.eye(2))


def recover_theta(
    drift: np.ndarray, dispersion: np.ndarray, field_j: np.ndarray
) -> np.ndarray:
    """Recover the CCR matrix of a stable pair from the realizability identity.

    Solves ``A Θ + Θ Aᵀ + B J Bᵀ = 0``, whose unique solution for Hurwitz
    ``A`` is the integral of ``e^{tA} B J Bᵀ e^{tAᵀ}``.  The result is
    antisymmetrized and its asymmetry checked against 1e-10.
    """
    drift = np.asarray(drift, dtype=float)
    theta = lyap(drift, dispersion @ field_j @ dispersion.T)
    asym = np.linalg.norm(theta + theta.T)
    if asym > 1e-10 * max(1.0, np.linalg.norm(theta)):
        raise ToleranceError(f"recovered CCR matrix asymmetry {asym:.3e} too large")
    return 0.5 * (theta - theta.T)


@dataclass(frozen=True)
class CovarianceKernel:
    """Invariant covariance data of a stable model with vacuum inputs.

    ``sigma`` is the controllability Gramian (real part) and
    ``covariance = sigma + i theta`` the full one-point quantum
    covariance.  Evaluators for the stationary two-point kernel live in
    :func:`two_point_covariance` / :func:`two_point_ccr`.
    """

    model: OqhoModel
    sigma: np.ndarray
    covariance: np.ndarray


def steady_covariance(model: OqhoModel) -> CovarianceKernel:
    """Invariant covariance ``Σ + iΘ`` of a stable model.

    ``Σ`` solves ``AΣ + ΣAᵀ + BBᵀ = 0``; the imaginary part of the full
    complex Lyapunov solution with the vacuum Ito matrix reproduces Θ,
    which is re-checked here (it restates physical realizability).
    """
    a, b = model.drift, model.dispersion
    omega = np.eye(model.m) + 1j * model.field_j
    v = lyap(a, b @ omega @ b.T)
    sigma = v.real
    resid = np.linalg.norm(a @ v + v @ a.T + b @ omega @ b.T)
    if resid > 1e-10 * max(1.0, np.linalg.norm(b @ omega @ b.T)):
        raise ToleranceError(f"invariant-covariance residual {resid:.3e}")
    if np.linalg.norm(v.imag - model.theta) > 1e-10 * max(
        1.0, np.linalg.norm(model.theta)
    ):
        raise ToleranceError(
            "imaginary part of the invariant covariance does not match the "
            "CCR matrix; model is numerically inconsistent"
        )
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceKernel(
        model=model, sigma=sigma, covariance=sigma + 1j * model.theta
    )


def two_point_covariance(kernel: CovarianceKernel, tau: float) -> np.ndarray:
    """Stationary two-point covariance at lag ``tau``.

    ``e^{τA} V`` for ``τ >= 0`` and ``V e^{-τAᵀ}`` for ``τ < 0``; the two
    branches are Hermitian transposes of each other.
    """
    a = kernel.model.drift
    v = kernel.covariance
    if tau >= 0:
        return expm(a, tau) @ v
    return v @ expm(a, -tau).T


def two_point_ccr(kernel: CovarianceKernel, tau: float) -> np.ndarray:
    """Two-point CCR matrix: imaginary part of the two-point covariance."""
    return two_point_covariance(kernel, tau).imag
