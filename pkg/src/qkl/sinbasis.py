"""Sinusoidal Karhunen-Loeve basis on a bounded time interval.

The basis diagonalizes the integral operator with kernel ``min(s, t)`` on
``[0, T]``: sines ``f_k(t) = sqrt(2/T) sin(ω_k t)`` with frequencies
``ω_k = (π/T)(k + 1/2)`` and eigenvalues ``1/ω_k²``.  The companion
cosines ``g_k(t) = sqrt(2/T) cos(ω_k t)`` form a second orthonormal family
and vanish at ``t = T``.

Expansion coefficients of a vacuum-state quantum Wiener process over this
basis are pairwise-commuting position/momentum pairs; at this layer they
are represented purely through their second-order data: the per-mode
covariance ``I + iJ`` and CCR matrix ``2iJ``.  No operator algebra beyond
those bilinear forms is implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Quadrature",
    "composite_gauss_legendre",
    "quadrature_for_size",
    "SinBasis",
    "mercer_min",
    "mercer_tail_bound",
    "wiener_ccr",
    "coefficient_covariance",
    "coefficient_ccr",
    "recovered_ccr_gram",
]


@dataclass(frozen=True)
class Quadrature:
    """Nodes and positive weights of a quadrature rule on ``[0, T]``.

    ``panel_order`` is set when the rule is a uniform composite one; it is
    what off-grid interpolation over the panels needs.
    """

    nodes: np.ndarray
    weights: np.ndarray
    panel_order: int | None = None

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def span(self) -> float:
        """Length of the integration interval (the weights sum to it)."""
        return float(np.sum(self.weights))

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum over the leading axis of sampled values."""
        return np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=32)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def composite_gauss_legendre(
    span: float, panels: int, order: int = 8, start: float = 0.0
) -> Quadrature:
    """Composite Gauss-Legendre rule on ``[start, start + span]``.

    Exact for piecewise polynomials of degree ``2*order - 1`` on the
    uniform panels.
    """
    if panels < 1 or order < 1:
        raise ValueError("panels and order must be positive")
    x, w = _leggauss(order)
    edges = np.linspace(start, start + span, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return Quadrature(nodes=nodes, weights=weights, panel_order=order)


def quadrature_for_size(span: float, size: int, order: int = 8) -> Quadrature:
    """Composite rule with ``size`` total nodes (``size`` divisible by ``order``)."""
    if size % order:
        raise ValueError(f"size {size} is not a multiple of the panel order {order}")
    return composite_gauss_legendre(span, size // order, order)


@dataclass(frozen=True)
class SinBasis:
    """Sinusoidal eigenbasis of the ``min(s, t)`` kernel on ``[0, horizon]``.

    ``size`` is the truncation order: modes ``k = 0 .. size-1`` are in play.
    """

    horizon: float
    size: int = 256

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.size < 1:
            raise ValueError("size must be at least 1")

    def frequency(self, k) -> np.ndarray:
        """``ω_k = (π/horizon)(k + 1/2)``."""
        return np.pi / self.horizon * (np.asarray(k) + 0.5)

    def eigenvalue(self, k) -> np.ndarray:
        """Kernel eigenvalue ``1/ω_k²``."""
        return 1.0 / self.frequency(k) ** 2

    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon):
            raise ValueError(f"time outside [0, {self.horizon}]")
        return t

    def sine(self, k: int, t):
        """Eigenfunction ``sqrt(2/horizon) sin(ω_k t)``; vanishes at t = 0."""
        t = self._check_time(t)
        return np.sqrt(2.0 / self.horizon) * np.sin(self.frequency(k) * t)

    def cosine(self, k: int, t):
        """Companion function ``sqrt(2/horizon) cos(ω_k t)``; vanishes at t = horizon."""
        t = self._check_time(t)
        return np.sqrt(2.0 / self.horizon) * np.cos(self.frequency(k) * t)

    def sine_samples(self, t) -> np.ndarray:
        """Matrix of all sines sampled at the given times, shape (size, len(t))."""
        t = self._check_time(np.atleast_1d(t))
        omegas = self.frequency(np.arange(self.size))
        return np.sqrt(2.0 / self.horizon) * np.sin(np.outer(omegas, t))

    def cosine_samples(self, t) -> np.ndarray:
        t = self._check_time(np.atleast_1d(t))
        omegas = self.frequency(np.arange(self.size))
        return np.sqrt(2.0 / self.horizon) * np.cos(np.outer(omegas, t))

    def default_quadrature(self, order: int = 8) -> Quadrature:
        """Panel count sized to the highest mode frequency.

        One 8-point panel per half-period of the top mode keeps >= 8 nodes
        per period of every basis function (and of their pairwise
        products), which holds the orthonormality Gramians near machine
        precision.
        """
        return composite_gauss_legendre(self.horizon, self.size, order)


def mercer_min(basis: SinBasis, s, t) -> np.ndarray:
    """Truncated eigen-series for ``min(s, t)``.

    Returns ``sum_{k < size} f_k(s) f_k(t) / ω_k²``; converges uniformly
    to ``min(s, t)`` as the truncation grows.
    """
    fs = basis.sine_samples(s)
    ft = basis.sine_samples(t)
    lam = basis.eigenvalue(np.arange(basis.size))
    out = np.einsum("k,ks,kt->st", lam, fs, ft)
    return out[0, 0] if out.size == 1 else np.squeeze(out)


def mercer_tail_bound(basis: SinBasis) -> float:
    """Upper bound on the eigenvalue tail ``sum_{k >= size} 1/ω_k²``.

    By midpoint comparison (the summand is convex decreasing),
    ``sum_{k >= K} (k + 1/2)^{-2} <= 1/K``, so the tail is at most
    ``horizon² / (π² K)``.  The full sum is ``horizon²/2``.
    """
    return basis.horizon**2 / (np.pi**2 * basis.size)


def wiener_ccr(basis: SinBasis, s: float, t: float, field_j: np.ndarray) -> np.ndarray:
    """Truncated two-point commutator of the expanded Wiener process.

    Equals ``2i min(s, t) J`` in the limit; at finite truncation the scalar
    factor is the Mercer partial sum.
    """
    return 2j * mercer_min(basis, s, t) * np.asarray(field_j)


def coefficient_covariance(j: int, k: int, field_j: np.ndarray) -> np.ndarray:
    """Vacuum covariance of expansion-coefficient pairs: ``δ_jk (I + iJ)``."""
    field_j = np.asarray(field_j)
    if j != k:
        return np.zeros_like(field_j, dtype=complex)
    return np.eye(field_j.shape[0]) + 1j * field_j


def coefficient_ccr(j: int, k: int, field_j: np.ndarray) -> np.ndarray:
    """Commutator matrix of expansion-coefficient pairs: ``2i δ_jk J``."""
    field_j = np.asarray(field_j)
    if j != k:
        return np.zeros_like(field_j, dtype=complex)
    return 2j * field_j


def recovered_ccr_gram(
    basis: SinBasis, n_modes: int, n_nodes: int = 400, order: int = 8
) -> np.ndarray:
    """Coefficient CCR normalization recovered by double integration.

    Entry (j, k) is ``ω_j ω_k ∬ min(s, t) f_j(s) f_k(t) ds dt``, which is
    the Kronecker delta: recovering coefficients from the process by
    integrating against the basis reproduces their CCRs.  Computed with an
    iterated composite Gauss-Legendre rule whose inner integral splits its
    panels at the ``min`` kink ``s = t``; ``n_nodes`` is the node budget
    per integration axis.
    """
    T = basis.horizon
    outer = quadrature_for_size(T, n_nodes, order)
    inner_panels = max(n_nodes // (2 * order), 1)

    ks = np.arange(n_modes)
    omegas = basis.frequency(ks)
    scale = np.sqrt(2.0 / T)

    # A[j, i] = ∫_0^T min(s, t_i) f_j(s) ds, split at s = t_i.
    partial = np.empty((n_modes, outer.size))
    for i, t in enumerate(outer.nodes):
        below = composite_gauss_legendre(t, inner_panels, order)
        above = composite_gauss_legendre(T - t, inner_panels, order, start=t)
        f_below = scale * np.sin(np.outer(omegas, below.nodes))
        f_above = scale * np.sin(np.outer(omegas, above.nodes))
        partial[:, i] = f_below @ (below.weights * below.nodes) + t * (
            f_above @ above.weights
        )

    f_outer = scale * np.sin(np.outer(omegas, outer.nodes))
    gram = partial @ (outer.weights[:, None] * f_outer.T)
    return gram * np.outer(omegas, omegas)
