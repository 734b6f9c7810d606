"""Quadratic-exponential cost of a stable oscillator over a finite horizon.

The cost exponentiates the time integral of a weighted square of the
system variables.  Expanding the variables over the eigenfunctions of
their stationary covariance kernel turns the exponent into a quadratic
form ``H`` in finitely many position/momentum pairs; Williamson's
symplectic diagonalization of ``H`` then reduces the expectation to a
3N-dimensional determinant.  Feasibility (finiteness of the cost) is
decided by a spectral-radius condition on the symplectic spectrum.

The truncation at N modes is tied to captured spectral mass; the mass
tail and the quadrature grid are reported as separate diagnostics (no
coupling between the two error sources is asserted).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, NotPositiveDefiniteError, ToleranceError
from .kernel_eig import KernelEigendecomposition, spectral_tail
from .linalg import WilliamsonFactorization, pair_symplectic, spectral_radius, williamson
from .oqho import CovarianceKernel

__all__ = [
    "gram_block",
    "assemble_quadratic_form",
    "feasibility",
    "diamond",
    "qef_value",
    "QefProblem",
    "evaluate_qef",
    "mean_quadratic_cost",
]

#: the spectral radius must clear 1 by this margin (the determinant
#: formula degrades near the boundary)
FEASIBILITY_MARGIN = 1e-8
#: relative bound on the imaginary part of the determinant
_DETERMINANT_IMAG_TOL = 1e-9


def _check_weight(weight: np.ndarray, n: int) -> np.ndarray:
    weight = np.asarray(weight, dtype=float)
    if weight.shape != (n, n):
        raise ValueError(f"weight must be {n}x{n}, got {weight.shape}")
    if np.linalg.norm(weight - weight.T) > 1e-12 * max(np.linalg.norm(weight), 1.0):
        raise ValueError("weight matrix must be symmetric")
    return weight


def gram_block(
    decomp: KernelEigendecomposition, weight: np.ndarray, j: int, k: int
) -> np.ndarray:
    """Weighted 2x2 Gram block of eigenfunction real/imaginary parts.

    ``[[<φ_j, Π φ_k>, -<φ_j, Π ψ_k>], [-<ψ_j, Π φ_k>, <ψ_j, Π ψ_k>]]``
    under the grid inner product; transposing swaps the mode indices.
    """
    weight = _check_weight(weight, decomp.kernel.model.n)
    w = decomp.grid.weights
    pj, sj = decomp.modes[j].real, decomp.modes[j].imag
    pk, sk = decomp.modes[k].real, decomp.modes[k].imag

    def inner(x, y):
        return float(np.einsum("da,ab,db,d->", x, weight, y, w))

    return np.array(
        [
            [inner(pj, pk), -inner(pj, sk)],
            [-inner(sj, pk), inner(sj, sk)],
        ]
    )


def assemble_quadratic_form(
    decomp: KernelEigendecomposition, weight: np.ndarray, n_modes: int
) -> np.ndarray:
    """Quadratic form over the first ``n_modes`` coefficient pairs.

    Block (j, k) is ``sqrt(μ_j μ_k)`` times the Gram block; the result is
    symmetric positive semi-definite (checked, with an allowance of
    ``1e-10 ||H||`` of eigenvalue undershoot).
    """
    if n_modes < 1 or n_modes > decomp.n_modes:
        raise ValueError(f"n_modes must be in [1, {decomp.n_modes}]")
    weight = _check_weight(weight, decomp.kernel.model.n)
    w = decomp.grid.weights
    phi = decomp.modes[:n_modes].real
    psi = decomp.modes[:n_modes].imag

    pp = np.einsum("jda,ab,kdb,d->jk", phi, weight, phi, w)
    ps = np.einsum("jda,ab,kdb,d->jk", phi, weight, psi, w)
    sp = np.einsum("jda,ab,kdb,d->jk", psi, weight, phi, w)
    ss = np.einsum("jda,ab,kdb,d->jk", psi, weight, psi, w)

    root_mu = np.sqrt(decomp.eigenvalues[:n_modes])
    scale = np.outer(root_mu, root_mu)
    h = np.empty((2 * n_modes, 2 * n_modes))
    h[0::2, 0::2] = scale * pp
    h[0::2, 1::2] = -scale * ps
    h[1::2, 0::2] = -scale * sp
    h[1::2, 1::2] = scale * ss

    norm = np.linalg.norm(h)
    if np.linalg.norm(h - h.T) > 1e-12 * max(norm, 1.0):
        raise ToleranceError("assembled quadratic form is not symmetric")
    h = 0.5 * (h + h.T)
    if norm > 0 and np.linalg.eigvalsh(h).min() < -1e-10 * norm:
        raise ToleranceError("assembled quadratic form is not positive semi-definite")
    return h


def _feasibility_data(h: np.ndarray) -> tuple[WilliamsonFactorization, float]:
    fact = williamson(h)
    a = 0.5 * np.tanh(2.0 * fact.sigmas)
    b = 0.5 * np.sinh(4.0 * fact.sigmas)
    gram_inv = np.linalg.inv(fact.u.T @ fact.u)
    radius = spectral_radius(gram_inv * np.column_stack([2.0 * a, b]).ravel())
    return fact, radius


def feasibility(h: np.ndarray, margin: float = FEASIBILITY_MARGIN) -> tuple[bool, float]:
    """Whether the cost with quadratic form ``h`` is finite, and the radius.

    The radius is the spectral radius whose staying below 1 (with a small
    margin) makes the determinant formula applicable.  A zero form is
    trivially feasible; a nonzero singular form is reported infeasible
    with an infinite radius.
    """
    h = np.asarray(h, dtype=float)
    if not np.any(h):
        return True, 0.0
    try:
        _, radius = _feasibility_data(h)
    except NotPositiveDefiniteError:
        return False, np.inf
    return radius < 1.0 - margin, radius


def diamond(a: np.ndarray) -> np.ndarray:
    """Symmetrize by copying the upper triangle (diagonal included) down."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def qef_value(h: np.ndarray, margin: float = FEASIBILITY_MARGIN) -> float:
    """Exponential cost for the quadratic form ``h`` via the determinant formula.

    With the Williamson factors ``(u, σ)`` of ``h``, the coefficient
    covariance ``C = (uᵀu)^{-1} + iJ`` and the per-mode scalars
    ``a = tanh(2σ)/2``, ``b = sinh(4σ)/2``, the value is
    ``det(I - (Φ C Φᵀ)^diamond Ψ)^{-1/2}`` with the replicator
    ``Φ = I ⊗ [[1,0],[0,1],[1,0]]`` and ``Ψ = diag(a, b, a)`` per mode.
    The determinant must come out real (relative imaginary part below
    1e-9) and positive; the positive real branch of the square root is
    returned.  Raises :class:`InfeasibleError` when the radius condition
    fails.
    """
    h = np.asarray(h, dtype=float)
    if not np.any(h):
        return 1.0
    try:
        fact, radius = _feasibility_data(h)
    except NotPositiveDefiniteError:
        raise InfeasibleError(np.inf) from None
    if radius >= 1.0 - margin:
        raise InfeasibleError(radius)

    n_modes = fact.n_modes
    a = 0.5 * np.tanh(2.0 * fact.sigmas)
    b = 0.5 * np.sinh(4.0 * fact.sigmas)
    cov = np.linalg.inv(fact.u.T @ fact.u) + 1j * pair_symplectic(n_modes)

    replicate = np.kron(np.eye(n_modes), np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]))
    psi_diag = np.column_stack([a, b, a]).ravel()
    core = diamond(replicate @ cov @ replicate.T) * psi_diag
    det = np.linalg.det(np.eye(3 * n_modes) - core)

    if abs(det.imag) > _DETERMINANT_IMAG_TOL * abs(det):
        raise ToleranceError(
            f"determinant has relative imaginary part {abs(det.imag / det):.3e}"
        )
    if det.real <= 0:
        raise ToleranceError(f"determinant {det.real:.3e} is not positive")
    return 1.0 / np.sqrt(det.real)


@dataclass(frozen=True)
class QefProblem:
    """Inputs, quadratic form and value of one cost evaluation.

    ``value`` is ``None`` when infeasible; ``diagnostics`` records the
    spectral-mass tail beyond the truncation, the grid size, any modes
    dropped by the near-singularity regularization and the clipped
    eigenvalue mass.
    """

    kernel: CovarianceKernel
    spectrum: KernelEigendecomposition
    weight: np.ndarray
    n_modes: int
    quad_form: np.ndarray
    sigmas: np.ndarray
    feasible: bool
    radius: float
    value: float | None
    diagnostics: dict = field(default_factory=dict)


def _select_modes(decomp: KernelEigendecomposition, mass_fraction: float) -> int:
    total = float(np.sum(decomp.eigenvalues))
    if total <= 0:
        return 1
    cumulative = np.cumsum(decomp.eigenvalues) / total
    return int(np.searchsorted(cumulative, mass_fraction) + 1)


def evaluate_qef(
    kernel: CovarianceKernel,
    decomp: KernelEigendecomposition,
    weight: np.ndarray,
    n_modes: int | str = "auto",
    mass_fraction: float = 0.999,
) -> QefProblem:
    """Full pipeline: Gram blocks, quadratic form, feasibility, value.

    ``n_modes="auto"`` keeps the smallest truncation capturing
    ``mass_fraction`` of the spectral mass.  A numerically singular form
    is regularized by restricting to modes whose weighted diagonal Gram
    mass is significant; dropped mode indices appear in the diagnostics.
    """
    weight = _check_weight(weight, kernel.model.n)
    if np.any(np.linalg.eigvalsh(0.5 * (weight + weight.T)) < -1e-12 * max(
        np.linalg.norm(weight), 1.0
    )):
        raise ValueError("weight matrix must be positive semi-definite")

    if n_modes == "auto":
        n_modes = _select_modes(decomp, mass_fraction)
    n_modes = min(int(n_modes), decomp.n_modes)

    h = assemble_quadratic_form(decomp, weight, n_modes)

    dropped: list[int] = []
    norm = np.linalg.norm(h, 2)
    if norm > 0 and np.linalg.eigvalsh(h).min() < 1e-12 * norm:
        mass = np.array(
            [
                decomp.eigenvalues[k] * np.linalg.norm(gram_block(decomp, weight, k, k))
                for k in range(n_modes)
            ]
        )
        keep = mass > 1e-12 * mass.max()
        dropped = [int(k) for k in np.flatnonzero(~keep)]
        if dropped:
            idx = np.flatnonzero(keep)
            rows = np.column_stack([2 * idx, 2 * idx + 1]).ravel()
            h = h[np.ix_(rows, rows)]

    if not np.any(h):
        feasible, radius, sigmas = True, 0.0, np.array([])
        value = 1.0
    else:
        try:
            fact, radius = _feasibility_data(h)
            sigmas = fact.sigmas
            feasible = radius < 1.0 - FEASIBILITY_MARGIN
            value = qef_value(h) if feasible else None
        except NotPositiveDefiniteError:
            feasible, radius, sigmas, value = False, np.inf, np.array([]), None

    diagnostics = {
        "tail_mass": spectral_tail(decomp, n_modes),
        "grid_size": decomp.grid.size,
        "dropped_modes": dropped,
        "clipped_mass": decomp.clipped_mass,
    }
    return QefProblem(
        kernel=kernel,
        spectrum=decomp,
        weight=weight,
        n_modes=n_modes,
        quad_form=h,
        sigmas=sigmas,
        feasible=feasible,
        radius=radius,
        value=value,
        diagnostics=diagnostics,
    )


def mean_quadratic_cost(
    kernel: CovarianceKernel, weight: np.ndarray, horizon: float
) -> float:
    """Mean of the quadratic cost in the invariant state: ``T tr(Π Σ)``.

    The logarithm of the exponential cost approaches this value as the
    weight shrinks to zero.
    """
    weight = _check_weight(weight, kernel.model.n)
    return horizon * float(np.trace(weight @ kernel.sigma))
