"""Brute-force verification on a truncated Fock space.

Represents each coefficient pair as scaled position/momentum matrices on
a ``dim``-level oscillator, assembles the quadratic exponent literally as
the written double sum, and takes the vacuum expectation of its operator
exponential by dense Hermitian eigendecomposition.  Entirely independent
of the Williamson/determinant route, which is the point: agreement of the
two is the end-to-end check of the symplectic machinery.

Intended for up to three modes; the density of the eigendecomposition
(dimension ``dim**n_modes``) is the limiting factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ToleranceError

__all__ = [
    "TruncatedMode",
    "build_mode",
    "assemble_exponent",
    "vacuum_exp",
    "oracle_qef",
    "oracle_qef_refined",
    "oracle_moments",
]

#: defaults keeping the dense eigenproblem a few thousand dimensions
DEFAULT_DIMS = {1: 40, 2: 24, 3: 14}


@dataclass(frozen=True)
class TruncatedMode:
    """Single-oscillator operator matrices on a ``dim``-level truncation.

    ``q``/``p`` are the standard position/momentum pair ([q, p] = i away
    from the truncation edge); ``xi``/``eta`` are their sqrt(2)-scaled
    versions with commutator 2i, matching the normalization of the
    expansion coefficients.  Vacuum moments: E ξ² = E η² = 1, E ξη = i.
    """

    dim: int
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray
    eta: np.ndarray


def build_mode(dim: int) -> TruncatedMode:
    """Operator matrices of one truncated oscillator mode."""
    if dim < 8:
        raise ValueError(f"truncation dimension must be at least 8, got {dim}")
    ladder = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    q = (ladder + ladder.T) / np.sqrt(2.0)
    p = (ladder - ladder.T) / (1j * np.sqrt(2.0))
    return TruncatedMode(
        dim=dim, q=q.astype(complex), p=p, xi=np.sqrt(2.0) * q, eta=np.sqrt(2.0) * p
    )


def _embed(op: np.ndarray, mode: int, n_modes: int, dim: int) -> np.ndarray:
    """Tensor-embed a single-mode operator; mode 0 is the slowest index."""
    factors = [np.eye(dim, dtype=complex)] * n_modes
    factors[mode] = op
    return reduce(np.kron, factors)


def _pair_ops(n_modes: int, dim: int) -> list[list[np.ndarray]]:
    mode = build_mode(dim)
    return [
        [_embed(op, k, n_modes, dim) for op in (mode.xi, mode.eta)]
        for k in range(n_modes)
    ]


def assemble_exponent(
    mu: np.ndarray, gram: np.ndarray, n_modes: int, dim: int, herm_tol: float = 1e-9
) -> np.ndarray:
    """Exponent matrix: the ordered double sum over coefficient pairs.

    ``gram[j, k]`` is the 2x2 block pairing modes j and k; same-mode
    products keep the written operator order.  The result must come out
    Hermitian (it does whenever ``gram[j, k] = gram[k, j].T``); a relative
    deviation beyond ``herm_tol`` raises, flagging a broken block
    symmetry upstream.
    """
    mu = np.asarray(mu, dtype=float)
    gram = np.asarray(gram, dtype=float)
    if n_modes > 3:
        raise ValueError("dense oracle supports at most 3 modes")
    if gram.shape != (n_modes, n_modes, 2, 2) or len(mu) < n_modes:
        raise ValueError(
            f"need {n_modes} eigenvalues and a ({n_modes},{n_modes},2,2) "
            f"block array, got {len(mu)} and {gram.shape}"
        )
    ops = _pair_ops(n_modes, dim)
    total = np.zeros((dim**n_modes, dim**n_modes), dtype=complex)
    for j in range(n_modes):
        for k in range(n_modes):
            scale = np.sqrt(mu[j] * mu[k])
            if scale == 0.0:
                continue
            for r in range(2):
                for s in range(2):
                    coeff = scale * gram[j, k, r, s]
                    if coeff != 0.0:
                        total += coeff * (ops[j][r] @ ops[k][s])
    asym = np.linalg.norm(total - total.conj().T)
    if asym > herm_tol * max(np.linalg.norm(total), 1e-300):
        raise ToleranceError(
            f"assembled exponent asymmetry {asym:.3e}; block symmetry "
            "gram[j,k] = gram[k,j].T is violated"
        )
    return 0.5 * (total + total.conj().T)


def vacuum_exp(exponent: np.ndarray) -> float:
    """Vacuum expectation of ``exp(exponent)`` for a Hermitian exponent.

    Spectral evaluation: the (vacuum, vacuum) entry of the exponential,
    with the vacuum the first basis state of every factor.
    """
    w, v = np.linalg.eigh(exponent)
    amps = v[0, :]
    return float(np.sum(np.exp(w) * np.abs(amps) ** 2))


def oracle_qef_refined(
    mu: np.ndarray, gram: np.ndarray, n_modes: int, dim: int
) -> tuple[float, float]:
    """Brute-force cost value and its truncation-refinement delta.

    Evaluates at ``dim`` and ``dim - 8``; the difference estimates the
    Fock-truncation error of the returned (larger-``dim``) value.
    """
    value = vacuum_exp(assemble_exponent(mu, gram, n_modes, dim))
    coarse = vacuum_exp(assemble_exponent(mu, gram, n_modes, dim - 8))
    return value, abs(value - coarse)


def oracle_qef(
    mu: np.ndarray,
    gram: np.ndarray,
    n_modes: int,
    dim: int | None = None,
    refine_tol: float | None = 1e-6,
) -> float:
    """Exponential cost by dense Fock-space computation.

    An independent route to the same number as the determinant formula:
    no symplectic factorization is involved.  When ``refine_tol`` is set,
    the refinement delta (value at ``dim`` vs ``dim - 8``) exceeding it
    relative to the value raises, meaning ``dim`` is too small for the
    requested weight.
    """
    if dim is None:
        dim = DEFAULT_DIMS.get(n_modes, 14)
    value, delta = oracle_qef_refined(mu, gram, n_modes, dim)
    if refine_tol is not None and delta > refine_tol * max(abs(value), 1.0):
        raise ToleranceError(
            f"refinement delta {delta:.3e} exceeds {refine_tol:.0e}; "
            f"Fock truncation {dim} too small"
        )
    return value


def oracle_moments(n_modes: int, dim: int) -> np.ndarray:
    """Vacuum second moments of the stacked coefficient pairs.

    Returns the 2N x 2N matrix of vacuum expectations of ordered pair
    products; equals ``I ⊗ (I₂ + i J₂)`` exactly (different modes live on
    different tensor factors, so cross moments vanish).
    """
    if n_modes > 3:
        raise ValueError("dense oracle supports at most 3 modes")
    ops = _pair_ops(n_modes, dim)
    flat = [op for pair in ops for op in pair]
    out = np.empty((2 * n_modes, 2 * n_modes), dtype=complex)
    for a, op_a in enumerate(flat):
        for b, op_b in enumerate(flat):
            out[a, b] = op_a[0, :] @ op_b[:, 0]
    return out
