"""Dense linear algebra for small complex Hermitian matrices.

All operations take and return plain ``numpy.ndarray`` values; nothing is
mutated in place.  Matrices here are tiny (2x2 qubit, 3x3 probe mode, 6x6
joint), so clarity wins over any sparse or blocked cleverness.
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-10
PSD_CLAMP = 1e-8


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class NonHermitianInput(ValueError):
    """Matrix deviates from Hermitian beyond tolerance."""


class NotPSD(ValueError):
    """Matrix has an eigenvalue below the clamping tolerance."""


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, used to join system and probe-mode states."""
    return np.kron(np.asarray(a), np.asarray(b))


def hermiticity_deviation(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T)))


def hermitian_eig(h: np.ndarray, tol: float = HERMITICITY_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and the columns of
    ``v`` orthonormal eigenvectors, so ``(v * w) @ v.conj().T`` rebuilds the
    input.  The matrix is symmetrized as ``(h + h†)/2`` before decomposition
    to shed floating-point noise; a deviation beyond ``tol`` is rejected
    instead of silently averaged away.  Uses the dedicated Hermitian solver
    (LAPACK ``heevd``), never a general nonsymmetric one: the downstream
    fidelity differences of interest are ~1e-6, far below what a general
    solver guarantees near degenerate spectra.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {h.shape}")
    scale = 1.0 + float(np.max(np.abs(h))) if h.size else 1.0
    dev = hermiticity_deviation(h)
    if dev > tol * scale:
        raise NonHermitianInput(
            f"matrix is {dev:.3e} away from Hermitian (tolerance {tol:.1e})"
        )
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return w, v


def sqrt_psd(h: np.ndarray) -> np.ndarray:
    """Positive-semidefinite square root.

    Eigenvalues in ``[-PSD_CLAMP, 0)`` are clamped to zero: rank-deficient
    density matrices routinely pick up tiny negative eigenvalues in floating
    point.  Anything below the clamp is a genuinely indefinite input.
    """
    w, v = hermitian_eig(h)
    if w.size and w[0] < -PSD_CLAMP:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} is below -{PSD_CLAMP:.1e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``F = [Tr sqrt(sqrt(rho) sigma sqrt(rho))]**2``.

    Parameters
    ----------
    rho, sigma : ndarray
        Density matrices of equal dimension (Hermitian, unit trace, PSD
        within tolerance).

    Returns
    -------
    float
        Fidelity clamped to [0, 1].

    Notes
    -----
    Evaluated as the squared nuclear norm of ``sqrt(rho) @ sqrt(sigma)``:
    the trace of the outer square root equals the sum of singular values of
    that product.  This form never takes square roots of the near-zero
    eigenvalues of the rank-deficient inner product, which would otherwise
    bias the result by ~sqrt(eps) and swamp imbalances of order 1e-7.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    sigma = np.asarray(sigma, dtype=np.complex128)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(
            f"density matrices differ in shape: {rho.shape} vs {sigma.shape}"
        )
    a = sqrt_psd(rho) @ sqrt_psd(sigma)
    s = np.linalg.svd(a, compute_uv=False)
    f = float(s.sum()) ** 2
    return min(max(f, 0.0), 1.0)


def validate_density_matrix(
    rho: np.ndarray,
    hermiticity_tol: float = 1e-12,
    trace_tol: float = 1e-10,
    eig_tol: float = 1e-10,
) -> None:
    """Raise if ``rho`` is not a density matrix within tolerances."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {rho.shape}")
    scale = 1.0 + float(np.max(np.abs(rho)))
    if hermiticity_deviation(rho) > hermiticity_tol * scale:
        raise NonHermitianInput(
            f"density matrix is {hermiticity_deviation(rho):.3e} from Hermitian"
        )
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace is {tr}, expected 1")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w[0] < -eig_tol:
        raise NotPSD(f"density matrix has eigenvalue {w[0]:.3e}")
