"""Dynamical (Lewis-Riesenfeld) invariants ``i d_t I = [H, I]``.

An invariant is propagated by unitary conjugation ``I(t) = U I(0) U^dagger``
with the same exponential-midpoint steps as :func:`cdsta.dynamics.propagate`,
so its spectrum is conserved to round-off.  Its eigenvectors (the modes)
evolve without transitions, each picking up the phase ``alpha_n(t)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dynamics import Trajectory, propagator
from .errors import RejectedInput
from .operators import check_hermitian, commutator, eigenframe
from .tolerances import DEFAULT
from .cdrive import _checked_hermitize


@dataclass
class InvariantRecord:
    times: np.ndarray
    operators: np.ndarray  # shape (K, d, d)
    frames: list

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([f.energies for f in self.frames])

    @property
    def modes(self) -> np.ndarray:
        """Mode vectors, shape ``(K, d, d)``; ``modes[k][:, n]`` is ``|phi_n(t_k)>``."""
        return np.array([f.vectors for f in self.frames])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def hermitian_defect(self) -> float:
        return max(float(np.max(np.abs(op - op.conj().T))) for op in self.operators)

    def eigenvalue_drift(self) -> float:
        ev = self.eigenvalues
        return float(np.max(np.abs(ev - ev[0])))


def record_from_operators(times, operators) -> InvariantRecord:
    """Wrap a sequence of Hermitian operators (candidate invariant) into a record."""
    times = np.asarray(times, dtype=float)
    ops = np.array([check_hermitian(op, what="invariant") for op in operators])
    if ops.shape[0] != times.size:
        raise RejectedInput(f"{ops.shape[0]} operators for {times.size} times")
    frames = []
    prev = None
    for t, op in zip(times, ops):
        prev = eigenframe(op, prev=prev, time=t)
        frames.append(prev)
    return InvariantRecord(times, ops, frames)


def propagate_invariant(h_of_t: Callable[[float], np.ndarray], i0, times) -> InvariantRecord:
    i0 = check_hermitian(i0, what="initial invariant")
    us = propagator(h_of_t, times)
    ops = [u @ i0 @ u.conj().T for u in us]
    ops = [0.5 * (op + op.conj().T) for op in ops]
    return record_from_operators(times, ops)


def _time_derivative(values, times, k):
    """Second-order derivative at index ``k``; one-sided at the ends.  Returns ``(value, one_sided)``."""
    n = len(times)
    if n < 3:
        raise RejectedInput("need at least three grid points for a derivative")
    if 0 < k < n - 1:
        return (values[k + 1] - values[k - 1]) / (times[k + 1] - times[k - 1]), False
    if k == 0:
        h = times[1] - times[0]
        return (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h), True
    h = times[-1] - times[-2]
    return (values[-3] - 4 * values[-2] + 3 * values[-1]) / (2 * h), True


def di_residual(h_of_t, record: InvariantRecord, k: int, full_output: bool = False):
    """``|| i dI/dt - [H, I] ||_F / (||I||_F ||H||_F)`` at grid index ``k``.

    Interior points use a centered difference; the two end points fall back
    to a one-sided stencil, which is reported as ``one_sided=True``.
    """
    t = record.times[k]
    h = h_of_t(t)
    d_i, one_sided = _time_derivative(record.operators, record.times, k)
    op = record.operators[k]
    value = np.linalg.norm(1j * d_i - commutator(h, op))
    scale = np.linalg.norm(op) * np.linalg.norm(h)
    value = float(value / scale) if scale > 0 else float(value)
    return (value, one_sided) if full_output else value


def di_residuals(h_of_t, record: InvariantRecord, interior_only: bool = True) -> np.ndarray:
    idx = range(1, len(record.times) - 1) if interior_only else range(len(record.times))
    return np.array([di_residual(h_of_t, record, k) for k in idx])


def _check_grid(traj: Trajectory, record: InvariantRecord):
    if traj.times.shape != record.times.shape or not np.allclose(traj.times, record.times, rtol=0, atol=1e-12):
        raise RejectedInput("trajectory and invariant record use different time grids")


def expectation_series(traj: Trajectory, record: InvariantRecord) -> np.ndarray:
    _check_grid(traj, record)
    return np.einsum("ki,kij,kj->k", traj.states.conj(), record.operators, traj.states).real


def expectation_invariance(traj: Trajectory, record: InvariantRecord) -> float:
    """``max_t |<chi(t)|I(t)|chi(t)> - <chi(0)|I(0)|chi(0)>|``."""
    series = expectation_series(traj, record)
    return float(np.max(np.abs(series - series[0])))


def mode_populations(traj: Trajectory, record: InvariantRecord) -> np.ndarray:
    """``|c_n(t)|^2 = |<phi_n(t)|chi(t)>|^2``, shape ``(K, d)``."""
    _check_grid(traj, record)
    return np.abs(np.einsum("kin,ki->kn", record.modes.conj(), traj.states)) ** 2


def mode_population_drift(traj: Trajectory, record: InvariantRecord) -> float:
    pops = mode_populations(traj, record)
    return float(np.max(np.abs(pops - pops[0])))


def _check_mode(record, n, tol):
    ev = record.eigenvalues
    others = np.delete(ev, n, axis=1)
    if others.size:
        gap = float(np.min(np.abs(others - ev[:, [n]])))
        scale = max(float(np.max(np.abs(ev))), 1.0)
        if gap <= tol.degeneracy * scale:
            warnings.warn(f"invariant mode {n} is nearly degenerate (gap {gap:.3e})", stacklevel=3)


def lr_phase(record: InvariantRecord, h_of_t, n: int, tol=DEFAULT) -> np.ndarray:
    """Phase ``alpha_n(t) = int_0^t <phi_n|(i d_s - H)|phi_n> ds`` of mode ``n``.

    The ``-<H>`` part is integrated with the trapezoid rule; the connection
    part is accumulated from overlaps of successive mode vectors.
    """
    _check_mode(record, n, tol)
    modes = record.modes[:, :, n]
    energy = np.array([np.vdot(v, h_of_t(t) @ v).real for t, v in zip(record.times, modes)])
    dynamical = -cumulative_trapezoid(energy, record.times, initial=0.0)
    steps = [np.angle(np.vdot(a, b)) for a, b in zip(modes[:-1], modes[1:])]
    geometric = -np.concatenate([[0.0], np.cumsum(steps)])
    return dynamical + geometric


def mode_derivatives(record: InvariantRecord) -> np.ndarray:
    """``|d_t phi_n>`` at every grid point, shape ``(K, d, d)``."""
    modes = record.modes
    return np.array([_time_derivative(modes, record.times, k)[0] for k in range(len(record.times))])


def phase_rates(record: InvariantRecord, h_of_t) -> np.ndarray:
    """``alpha_dot_n = -<phi_n|H|phi_n> + i <phi_n|d_t phi_n>``, shape ``(K, d)``."""
    modes = record.modes
    deriv = mode_derivatives(record)
    hs = np.array([h_of_t(t) for t in record.times])
    expect = np.einsum("kin,kij,kjn->kn", modes.conj(), hs, modes).real
    connection = np.einsum("kin,kin->kn", modes.conj(), deriv)
    return -expect + (1j * connection).real


def hamiltonian_from_invariant(record: InvariantRecord, rates, tol=DEFAULT) -> np.ndarray:
    """Hamiltonian generating the modes: ``-sum alpha_dot_n P_n + i sum |d_t phi_n><phi_n|``."""
    rates = np.asarray(rates, dtype=float)
    modes = record.modes
    if rates.shape != modes.shape[:2]:
        raise RejectedInput(f"phase rates have shape {rates.shape}, expected {modes.shape[:2]}")
    deriv = mode_derivatives(record)
    out = np.empty_like(modes)
    for k in range(len(record.times)):
        v = modes[k]
        h = -(v * rates[k]) @ v.conj().T + 1j * deriv[k] @ v.conj().T
        out[k], _ = _checked_hermitize(h, tol.asymmetry_fail, f"reconstructed H at t={record.times[k]}")
    return out
