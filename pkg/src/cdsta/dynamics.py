"""Time-dependent Schroedinger propagation and trajectory diagnostics (hbar = 1)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DegeneracyError, NormDriftError, RejectedInput, TailGuardError
from .hamiltonians import ModelSpec
from .operators import PAULI, EigenFrame, check_hermitian, eigenframe, eigenframes, expm_unitary
from .tolerances import DEFAULT

TAIL_LEVELS = 4


def as_state(psi, tol: float = 1e-9) -> np.ndarray:
    """Validate a normalized state vector."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise RejectedInput(f"state must be a non-empty vector, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise RejectedInput(f"state is not normalized (norm {norm:.12f})")
    return psi


def uniform_grid(t0: float, t1: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise RejectedInput(f"need at least one step, got {steps}")
    return np.linspace(t0, t1, steps + 1)


def model_grid(model: ModelSpec, steps_per_unit: int = 4000, min_steps: int = 100) -> np.ndarray:
    """Default grid: ``steps_per_unit`` steps per unit of (normalized) time."""
    steps = max(min_steps, int(round(steps_per_unit * model.span)))
    return uniform_grid(*model.domain, steps)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), d)
    norm_drift: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def _step(h_of_t, t, dt, check):
    mid = t + 0.5 * dt
    h = h_of_t(mid)
    if check:
        try:
            check_hermitian(h)
        except RejectedInput as exc:
            raise RejectedInput(f"Hamiltonian at t={mid}: {exc}") from None
    return expm_unitary(h, dt, check=False)


def propagate(
    h_of_t: Callable[[float], np.ndarray],
    psi0,
    times: Sequence[float],
    check: bool = True,
    norm_abort: float = DEFAULT.norm_abort,
    tail_guard: Optional[float] = None,
) -> Trajectory:
    """Integrate ``i d_t psi = H(t) psi`` with exponential-midpoint steps.

    ``psi_{k+1} = exp(-i H(t_k + dt/2) dt) psi_k``.  The scheme is second
    order and unitary to round-off; the norm is monitored, never corrected.
    ``tail_guard``, when given, bounds the population of the top
    ``TAIL_LEVELS`` basis states (truncated Fock spaces).
    """
    psi = as_state(psi0).copy()
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise RejectedInput("time grid needs at least two points")
    if np.any(np.diff(times) <= 0):
        raise RejectedInput("time grid must be strictly increasing")
    states = np.empty((times.size, psi.size), dtype=complex)
    drift = np.empty(times.size)
    states[0], drift[0] = psi, abs(np.linalg.norm(psi) - 1.0)
    for k in range(times.size - 1):
        u = _step(h_of_t, times[k], times[k + 1] - times[k], check)
        if u.shape[0] != psi.size:
            raise RejectedInput(f"Hamiltonian dimension {u.shape[0]} != state dimension {psi.size}")
        psi = u @ psi
        states[k + 1] = psi
        drift[k + 1] = abs(np.linalg.norm(psi) - 1.0)
        if drift[k + 1] > norm_abort:
            raise NormDriftError(f"norm drift {drift[k + 1]:.3e} at t={times[k + 1]}")
        if tail_guard is not None:
            tail = float(np.sum(np.abs(psi[-TAIL_LEVELS:]) ** 2))
            if tail > tail_guard:
                raise TailGuardError(
                    f"population {tail:.3e} in top {TAIL_LEVELS} levels at t={times[k + 1]}; "
                    "increase the Fock dimension"
                )
    return Trajectory(times, states, drift)


def propagator(h_of_t, times, check: bool = True) -> list[np.ndarray]:
    """Cumulative evolution operators ``U(t_k, t_0)`` on the same stepping as :func:`propagate`."""
    times = np.asarray(times, dtype=float)
    u = None
    out = []
    for k in range(times.size):
        if k == 0:
            h = h_of_t(times[0])
            u = np.eye(h.shape[0], dtype=complex)
        else:
            u = _step(h_of_t, times[k - 1], times[k] - times[k - 1], check) @ u
        out.append(u)
    return out


def refine(times) -> np.ndarray:
    """Grid with every interval halved."""
    times = np.asarray(times, dtype=float)
    fine = np.empty(2 * times.size - 1)
    fine[0::2] = times
    fine[1::2] = 0.5 * (times[:-1] + times[1:])
    return fine


def step_halving_error(h_of_t, psi0, times) -> float:
    """``||psi_dt(T) - psi_{dt/2}(T)||``, a posteriori estimate of the stepping error."""
    coarse = propagate(h_of_t, psi0, times).final
    fine = propagate(h_of_t, psi0, refine(times)).final
    return float(np.linalg.norm(coarse - fine))


def fidelity(a, b) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


def populations(traj: Trajectory, h_of_t, frames: Optional[list] = None) -> np.ndarray:
    """``p[k, n] = |<n(t_k)|psi(t_k)>|^2`` on continuity-gauged eigenframes of ``h_of_t``."""
    if isinstance(h_of_t, ModelSpec):
        h_of_t = h_of_t.h0
    if frames is None:
        frames = eigenframes(h_of_t, traj.times)
    if frames[0].dim != traj.dim:
        raise RejectedInput(f"frame dimension {frames[0].dim} != state dimension {traj.dim}")
    amps = np.einsum("kin,ki->kn", np.array([f.vectors for f in frames]).conj(), traj.states)
    return np.abs(amps) ** 2


def _level_gap(frame: EigenFrame, n: int) -> float:
    others = np.delete(frame.energies, n)
    return float(np.min(np.abs(others - frame.energies[n]))) if others.size else np.inf


def discrete_berry_phase(frames: Sequence[EigenFrame], n: int, closed: bool = True) -> float:
    """``-arg prod_k <n_k|n_{k+1}>``, wrapped to ``(-pi, pi]``.

    With ``closed`` the last overlap is taken back onto the first frame, so the
    result is independent of every eigenvector phase convention.  Pass frames
    for distinct points only (do not repeat the starting point).
    """
    vecs = [f.vectors[:, n] for f in frames]
    if closed:
        vecs = vecs + [vecs[0]]
    total = 0.0
    for a, b in zip(vecs[:-1], vecs[1:]):
        total -= np.angle(np.vdot(a, b))
    return float(np.angle(np.exp(1j * total)))


def phases(traj: Trajectory, h_of_t, n: int, frames: Optional[list] = None, tol=DEFAULT):
    """Dynamical and geometric phase of level ``n`` along the trajectory's grid.

    ``xi_dyn(t) = -int_0^t E_n``; ``xi_geo(t) = i int_0^t <n|d_s n>``
    accumulated as ``-sum arg <n(t_k)|n(t_{k+1})>`` (unwrapped).
    """
    if isinstance(h_of_t, ModelSpec):
        h_of_t = h_of_t.h0
    if frames is None:
        frames = eigenframes(h_of_t, traj.times)
    energies = np.array([f.energies[n] for f in frames])
    min_gap = min(_level_gap(f, n) for f in frames)
    scale = max(float(np.max(np.abs(energies))), 1.0)
    if min_gap <= tol.degeneracy * scale:
        warnings.warn(f"level {n} is nearly degenerate along the path (gap {min_gap:.3e})", stacklevel=2)
    xi_dyn = -cumulative_trapezoid(energies, traj.times, initial=0.0)
    steps = [np.angle(np.vdot(a.vectors[:, n], b.vectors[:, n])) for a, b in zip(frames[:-1], frames[1:])]
    xi_geo = -np.concatenate([[0.0], np.cumsum(steps)])
    return xi_dyn, xi_geo


def bloch_vector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise RejectedInput(f"Bloch vector needs a two-level state, got shape {psi.shape}")
    return np.array([np.vdot(psi, s @ psi).real for s in PAULI])


def adiabaticity_measure(model: ModelSpec, t: float, m: int, n: int, tol=DEFAULT) -> float:
    """``|<m|d_t n> / (E_n - E_m)| = |<m|d_t H0|n>| / (E_n - E_m)^2``."""
    if m == n:
        raise RejectedInput("adiabaticity measure needs two distinct levels")
    frame = eigenframe(model.h0(t), time=t)
    gap = frame.energies[n] - frame.energies[m]
    scale = max(float(np.max(np.abs(frame.energies))), np.finfo(float).tiny)
    if abs(gap) <= tol.degeneracy * scale:
        raise DegeneracyError(f"levels {m} and {n} are degenerate at t={t}", pair=(m, n))
    element = np.vdot(frame.vectors[:, m], model.dh0_dt(t) @ frame.vectors[:, n])
    return float(abs(element) / gap**2)


def gaussian_overlap(omega_a: float, omega_b: float) -> float:
    """Squared overlap of two oscillator ground states, ``2 sqrt(ab) / (a + b)``."""
    if omega_a <= 0 or omega_b <= 0:
        raise RejectedInput(f"frequencies must be positive, got {omega_a}, {omega_b}")
    return float(2 * np.sqrt(omega_a * omega_b) / (omega_a + omega_b))


def ground_state(h) -> np.ndarray:
    return eigenframe(h).vectors[:, 0]
