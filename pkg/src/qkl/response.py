"""Sinusoidal representation of the variables of a driven oscillator.

For a stable drift ``A`` the propagator admits a Fourier expansion over
the sine basis, ``e^{tA} = I + Σ f_k(t) C_k``, with coefficient matrices
``C_k = sqrt(2/T) A M_k ((-1)^k e^{TA} - A/ω_k)`` built from the
resolvent products ``M_k = (ω_k² I + A²)^{-1}``.  Substituting the
Wiener expansion into the variation-of-constants solution turns the
system variables into an offset plus sine and cosine terms whose
operator coefficients are linear in the initial variables and the
expansion coefficients of the noise.  That linear structure is what
:class:`GeneratorMap` encodes: everything of second order (covariances,
commutators) reduces to bilinear combinations of the blocks against the
forms in :class:`BilinearForms`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import expm
from .oqho import CovarianceKernel, OqhoModel
from .sinbasis import SinBasis

__all__ = [
    "mode_resolvent",
    "fourier_coefficient",
    "fourier_coefficients",
    "fundamental_series",
    "GeneratorMap",
    "BilinearForms",
    "vacuum_forms",
    "map_covariance",
    "map_commutator",
    "SolutionExpansion",
    "solution_expansion",
    "offset_tail_bound",
    "cross_commutator",
    "expansion_covariance",
]


def mode_resolvent(model: OqhoModel, horizon: float, k: int) -> np.ndarray:
    """Resolvent product ``(ω_k² I + A²)^{-1}`` at the k-th basis frequency.

    Well defined whenever the drift is Hurwitz (no eigenvalue of ``-A²``
    is a positive real ω²); commutes with every function of ``A``.
    """
    a = model.drift
    omega = SinBasis(horizon, k + 1).frequency(k)
    return np.linalg.inv(omega**2 * np.eye(model.n) + a @ a)


def fourier_coefficients(model: OqhoModel, horizon: float, count: int) -> np.ndarray:
    """Stacked sine-series coefficients of ``e^{tA} - I``, shape (count, n, n)."""
    a = model.drift
    n = model.n
    basis = SinBasis(horizon, count)
    omegas = basis.frequency(np.arange(count))
    asq = a @ a
    eta = expm(a, horizon)
    lhs = omegas[:, None, None] ** 2 * np.eye(n) + asq
    signs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
    rhs = signs[:, None, None] * eta - a / omegas[:, None, None]
    resolvents_rhs = np.linalg.solve(lhs, rhs)
    return np.sqrt(2.0 / horizon) * np.einsum("ab,kbc->kac", a, resolvents_rhs)


def fourier_coefficient(model: OqhoModel, horizon: float, k: int) -> np.ndarray:
    """Single sine-series coefficient of the propagator expansion."""
    return fourier_coefficients(model, horizon, k + 1)[k]


def fundamental_series(model: OqhoModel, horizon: float, size: int, t) -> np.ndarray:
    """Truncated propagator series ``I + Σ_{k<size} f_k(t) C_k``.

    Exactly the identity at ``t = 0`` for every truncation.  Accepts a
    scalar time (returns (n, n)) or an array (returns (len(t), n, n)).
    """
    coeffs = fourier_coefficients(model, horizon, size)
    basis = SinBasis(horizon, size)
    scalar = np.isscalar(t) or np.ndim(t) == 0
    sines = basis.sine_samples(t)
    out = np.eye(model.n) + np.einsum("kt,kab->tab", sines, coeffs)
    return out[0] if scalar else out


@dataclass(frozen=True)
class GeneratorMap:
    """Real coefficients of an operator vector over the stacked generators.

    Represents ``system @ X0 + Σ_k noise[k] @ w_k`` with the generator
    stacking order fixed as (initial variables, noise coefficient 0, 1,
    ...).  ``system`` is (n, n); ``noise`` is (size, n, m).
    """

    system: np.ndarray
    noise: np.ndarray

    @property
    def size(self) -> int:
        return self.noise.shape[0]


@dataclass(frozen=True)
class BilinearForms:
    """Second-order data of the generators under the vacuum product state.

    Initial variables and noise coefficients commute and are
    uncorrelated, so covariances and commutators of generator maps are
    block-diagonal sums against these four matrices.
    """

    system_ccr: np.ndarray
    noise_ccr: np.ndarray
    system_cov: np.ndarray
    noise_cov: np.ndarray


def vacuum_forms(kernel: CovarianceKernel) -> BilinearForms:
    """Bilinear forms for a model initialized in its invariant state."""
    model = kernel.model
    return BilinearForms(
        system_ccr=2j * model.theta,
        noise_ccr=2j * model.field_j,
        system_cov=kernel.covariance,
        noise_cov=np.eye(model.m) + 1j * model.field_j,
    )


def map_covariance(
    x: GeneratorMap, y: GeneratorMap, forms: BilinearForms
) -> np.ndarray:
    """Covariance ``E(X Yᵀ)`` of two generator maps."""
    out = x.system @ forms.system_cov @ y.system.T
    out = out + np.einsum("kam,mp,kbp->ab", x.noise, forms.noise_cov, y.noise)
    return out


def map_commutator(
    x: GeneratorMap, y: GeneratorMap, forms: BilinearForms
) -> np.ndarray:
    """Commutator matrix ``[X, Yᵀ]`` of two generator maps."""
    out = x.system @ forms.system_ccr @ y.system.T
    out = out + np.einsum("kam,mp,kbp->ab", x.noise, forms.noise_ccr, y.noise)
    return out


@dataclass
class SolutionExpansion:
    """Offset plus sine/cosine operator coefficients of the system variables.

    ``offset`` is the constant term (its noise blocks carry the truncated
    series whose Frobenius tail is bounded by ``offset_tail``); the k-th
    sine and cosine terms multiply ``f_k`` and ``g_k`` respectively.
    """

    model: OqhoModel
    horizon: float
    size: int
    offset: GeneratorMap
    sines: list[GeneratorMap]
    cosines: list[GeneratorMap]
    offset_tail: float
    _sine_system: np.ndarray = field(repr=False, default=None)
    _sine_noise: np.ndarray = field(repr=False, default=None)
    _cosine_diag: np.ndarray = field(repr=False, default=None)

    def position_map(self, t: float) -> GeneratorMap:
        """Generator map of the system variables at time ``t``."""
        basis = SinBasis(self.horizon, self.size)
        f = basis.sine_samples(t)[:, 0]
        g = basis.cosine_samples(t)[:, 0]
        system = self.offset.system + np.einsum("k,kab->ab", f, self._sine_system)
        noise = self.offset.noise + np.einsum("k,kjam->jam", f, self._sine_noise)
        noise = noise + g[:, None, None] * self._cosine_diag
        return GeneratorMap(system=system, noise=noise)


def offset_tail_bound(
    model: OqhoModel, horizon: float, size: int, extra: int = 2048
) -> float:
    """Frobenius bound on the truncated part of the offset's noise series.

    Sums ``sqrt(2/T) ||A M_k B||_F`` explicitly for ``size + extra``
    further modes, then bounds the remainder through the eigenvalue tail
    of the sine basis (the resolvent norm is at most
    ``1/(ω² - ||A²||)`` once ω clears the spectrum of ``-A²``).
    """
    a, b = model.drift, model.dispersion
    basis = SinBasis(horizon, size + extra)
    ks = np.arange(size, size + extra)
    omegas = basis.frequency(ks)
    lhs = omegas[:, None, None] ** 2 * np.eye(model.n) + a @ a
    sol = np.linalg.solve(lhs, np.broadcast_to(b, (extra, *b.shape)))
    terms = np.linalg.norm(np.einsum("ab,kbm->kam", a, sol), axis=(1, 2))
    explicit = np.sqrt(2.0 / horizon) * float(np.sum(terms))

    asq_norm = np.linalg.norm(a @ a, 2)
    omega_end = basis.frequency(size + extra)
    if omega_end**2 <= 2.0 * asq_norm:
        raise ValueError("tail start too small for a rigorous remainder bound")
    remainder = (
        np.sqrt(2.0 / horizon)
        * np.linalg.norm(a, 2)
        * np.linalg.norm(b)
        * horizon**2
        / (np.pi**2 * (size + extra))
        / (1.0 - asq_norm / omega_end**2)
    )
    return explicit + remainder


def solution_expansion(
    model: OqhoModel, horizon: float, size: int
) -> SolutionExpansion:
    """Sine/cosine operator representation of the system variables.

    The offset is ``X0 + sqrt(2/T) Σ_k A M_k B w_k`` truncated at
    ``size``; the k-th sine coefficient is ``C_k · offset + ω_k M_k B w_k``
    and the k-th cosine coefficient ``-A M_k B w_k``.
    """
    a, b = model.drift, model.dispersion
    n, m = model.n, model.m
    basis = SinBasis(horizon, size)
    omegas = basis.frequency(np.arange(size))

    lhs = omegas[:, None, None] ** 2 * np.eye(n) + a @ a
    resolvent_b = np.linalg.solve(lhs, np.broadcast_to(b, (size, n, m)))
    a_resolvent_b = np.einsum("ab,kbm->kam", a, resolvent_b)

    offset_noise = np.sqrt(2.0 / horizon) * a_resolvent_b
    offset = GeneratorMap(system=np.eye(n), noise=offset_noise)

    coeffs = fourier_coefficients(model, horizon, size)
    sine_system = coeffs
    sine_noise = np.einsum("kab,jbm->kjam", coeffs, offset_noise)
    sine_noise[np.arange(size), np.arange(size)] += (
        omegas[:, None, None] * resolvent_b
    )
    cosine_diag = -a_resolvent_b

    sines = [
        GeneratorMap(system=sine_system[k], noise=sine_noise[k]) for k in range(size)
    ]
    cosine_noise_full = np.zeros((size, size, n, m))
    cosine_noise_full[np.arange(size), np.arange(size)] = cosine_diag
    cosines = [
        GeneratorMap(system=np.zeros((n, n)), noise=cosine_noise_full[k])
        for k in range(size)
    ]

    return SolutionExpansion(
        model=model,
        horizon=horizon,
        size=size,
        offset=offset,
        sines=sines,
        cosines=cosines,
        offset_tail=offset_tail_bound(model, horizon, size),
        _sine_system=sine_system,
        _sine_noise=sine_noise,
        _cosine_diag=cosine_diag,
    )


def cross_commutator(model: OqhoModel, horizon: float, j: int, k: int) -> np.ndarray:
    """Closed-form commutator between the j-th sine and k-th cosine coefficients.

    ``-2i (sqrt(2/T) A C_j M_k + δ_jk ω_j M_j) B J Bᵀ M_kᵀ Aᵀ``; nonzero in
    general even for ``j != k`` because the offset couples every mode.
    """
    a, b, fj = model.drift, model.dispersion, model.field_j
    basis = SinBasis(horizon, max(j, k) + 1)
    mho_j = mode_resolvent(model, horizon, j)
    mho_k = mode_resolvent(model, horizon, k)
    cj = fourier_coefficient(model, horizon, j)
    front = np.sqrt(2.0 / horizon) * a @ cj @ mho_k
    if j == k:
        front = front + basis.frequency(j) * mho_j
    return -2j * front @ b @ fj @ b.T @ mho_k.T @ a.T


def expansion_covariance(
    kernel: CovarianceKernel, expansion: SolutionExpansion, s: float, t: float
) -> np.ndarray:
    """Two-point covariance implied by the truncated representation.

    Computed bilinearly from the generator maps at ``s`` and ``t`` under
    the invariant-state forms; converges to the stationary kernel at lag
    ``s - t`` as the truncation grows.
    """
    forms = vacuum_forms(kernel)
    return map_covariance(
        expansion.position_map(s), expansion.position_map(t), forms
    )
