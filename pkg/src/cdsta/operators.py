"""Dense complex linear algebra for Hamiltonians and propagators.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``.  Hermiticity
and unitarity are validated on demand by :func:`check_hermitian` and
:func:`check_unitary`.  Instantaneous spectra are carried by
:class:`EigenFrame`, whose eigenvector phases follow a continuity gauge so
that finite differences and discrete Berry phases are smooth in time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import RejectedInput
from .tolerances import DEFAULT

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise RejectedInput(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def _same_dim(a, b):
    a, b = as_operator(a), as_operator(b)
    if a.shape != b.shape:
        raise RejectedInput(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def hermitian_defect(a) -> float:
    """Entrywise ``max|A - A^dagger|`` relative to ``max|A|``."""
    a = as_operator(a)
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)) / scale)


def is_hermitian(a, tol: float = DEFAULT.hermitian) -> bool:
    return hermitian_defect(a) <= tol


def check_hermitian(a, tol: float = DEFAULT.hermitian, what: str = "operator") -> np.ndarray:
    a = as_operator(a)
    defect = hermitian_defect(a)
    if defect > tol:
        raise RejectedInput(f"{what} is not Hermitian (relative defect {defect:.3e} > {tol:.1e})")
    return a


def unitary_defect(u) -> float:
    u = as_operator(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_unitary(u, tol: float = DEFAULT.unitary, what: str = "operator") -> np.ndarray:
    u = as_operator(u)
    defect = unitary_defect(u)
    if defect > tol:
        raise RejectedInput(f"{what} is not unitary (defect {defect:.3e} > {tol:.1e})")
    return u


def hermitize(a) -> tuple[np.ndarray, float]:
    """Return ``(A + A^dagger)/2`` and the relative anti-Hermitian part that was dropped."""
    a = as_operator(a)
    h = 0.5 * (a + a.conj().T)
    norm = np.linalg.norm(h)
    anti = np.linalg.norm(0.5 * (a - a.conj().T))
    asym = float(anti / norm) if norm > 0 else float(anti)
    return h, asym


def commutator(a, b) -> np.ndarray:
    a, b = _same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = _same_dim(a, b)
    return a @ b + b @ a


def frobenius(a, b) -> complex:
    """Frobenius inner product ``tr(a^dagger b)``."""
    a, b = _same_dim(a, b)
    return complex(np.vdot(a, b))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_operator(a)))


def spectral_radius(h) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(as_operator(h)))))


def eigh(h):
    """``numpy.linalg.eigh`` that drops to the real solver for real-valued input."""
    if not np.any(h.imag):
        energies, vectors = np.linalg.eigh(h.real)
        return energies, vectors.astype(complex)
    return np.linalg.eigh(h)


def expm_unitary(h, dt: float, check: bool = True) -> np.ndarray:
    """Single-step propagator ``exp(-i h dt)`` for Hermitian ``h``.

    Built from the eigendecomposition of ``h`` so the result is unitary to
    round-off regardless of ``|h| dt``.
    """
    if not np.isfinite(dt):
        raise RejectedInput(f"time step must be finite, got {dt}")
    h = check_hermitian(h, what="generator") if check else as_operator(h)
    energies, vectors = eigh(h)
    return (vectors * np.exp(-1j * energies * dt)) @ vectors.conj().T


@dataclass(frozen=True)
class EigenFrame:
    """Instantaneous spectral decomposition ``h = sum_n E_n |n><n|``.

    Columns of ``vectors`` are the eigenvectors.  A frame built without a
    predecessor lists energies in ascending order; a frame built against a
    predecessor keeps the predecessor's level labels, so energies may be out
    of order after a level crossing.
    """

    time: float
    energies: np.ndarray
    vectors: np.ndarray
    gauge: str

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def vector(self, n: int) -> np.ndarray:
        return self.vectors[:, n]

    def projector(self, n: int) -> np.ndarray:
        v = self.vectors[:, n]
        return np.outer(v, v.conj())

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.energies) @ self.vectors.conj().T

    def rephased(self, phases) -> "EigenFrame":
        """Multiply eigenvector ``n`` by ``exp(i phases[n])``."""
        phases = np.asarray(phases, dtype=float)
        return EigenFrame(self.time, self.energies.copy(), self.vectors * np.exp(1j * phases), "custom")

    def orthonormality_defect(self) -> float:
        v = self.vectors
        return float(np.max(np.abs(v.conj().T @ v - np.eye(self.dim))))


def _degenerate_clusters(energies, tol):
    if not np.any(np.diff(energies) <= tol):
        return []
    clusters, current = [], [0]
    for i in range(1, len(energies)):
        if energies[i] - energies[i - 1] <= tol:
            current.append(i)
        else:
            clusters.append(current)
            current = [i]
    clusters.append(current)
    return [c for c in clusters if len(c) > 1]


def _align_clusters(energies, vectors, prev_vectors, tol):
    # Inside a (near-)degenerate eigenspace eigh returns an arbitrary basis;
    # rotate it onto the predecessor's vectors (unitary Procrustes).
    for cluster in _degenerate_clusters(energies, tol):
        vc = vectors[:, cluster]
        weight = np.linalg.norm(prev_vectors.conj().T @ vc, axis=1)
        chosen = np.sort(np.argsort(weight)[::-1][: len(cluster)])
        m = vc.conj().T @ prev_vectors[:, chosen]
        u, _, vh = np.linalg.svd(m)
        vectors[:, cluster] = vc @ (u @ vh)
    return vectors


def eigenframe(
    h,
    prev: Optional[EigenFrame] = None,
    time: float = 0.0,
    herm_tol: float = DEFAULT.hermitian,
    degeneracy_tol: float = DEFAULT.degeneracy,
) -> EigenFrame:
    """Gauge-fixed eigendecomposition of a Hermitian matrix.

    Without ``prev`` each eigenvector's largest-magnitude component is made
    real and positive.  With ``prev`` the columns are matched to the
    predecessor by maximal ``|overlap|`` and phased so each overlap
    ``<n_prev|n>`` is real and non-negative (parallel transport).
    """
    h = check_hermitian(h, herm_tol, what="Hamiltonian")
    energies, vectors = eigh(h)
    if prev is None:
        idx = np.argmax(np.abs(vectors), axis=0)
        lead = vectors[idx, np.arange(vectors.shape[1])]
        vectors = vectors * (np.abs(lead) / lead)
        return EigenFrame(float(time), energies, vectors, "largest-component-real-positive")

    if prev.dim != energies.shape[0]:
        raise RejectedInput(f"predecessor frame has dim {prev.dim}, expected {energies.shape[0]}")
    radius = max(float(np.max(np.abs(energies))), 1.0)
    vectors = _align_clusters(energies, vectors, prev.vectors, degeneracy_tol * radius)
    overlaps = prev.vectors.conj().T @ vectors
    rows, cols = linear_sum_assignment(-np.abs(overlaps))
    perm = cols[np.argsort(rows)]
    energies = energies[perm]
    vectors = vectors[:, perm]
    ov = np.einsum("ij,ij->j", prev.vectors.conj(), vectors)
    mag = np.abs(ov)
    phase = np.where(mag > 1e-12, mag / np.where(mag > 0, ov, 1.0), 1.0)
    vectors = vectors * phase
    return EigenFrame(float(time), energies, vectors, "continuity")


def eigenframes(h_of_t, times, first: Optional[EigenFrame] = None) -> list[EigenFrame]:
    """Continuity-gauged frames along a time grid."""
    frames = []
    prev = first
    for t in times:
        prev = eigenframe(h_of_t(t), prev=prev, time=t)
        frames.append(prev)
    return frames
