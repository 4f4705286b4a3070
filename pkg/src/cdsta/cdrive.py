"""Counterdiabatic Hamiltonians by four independent routes.

* :func:`cd_spectral` -- projector form ``i sum_n (1 - P_n)|d_t n><n|`` with
  eigenvector derivatives from finite differences of continuity-gauged frames.
* :func:`cd_matrix_element` -- off-diagonal elements
  ``i <m|d_t H0|n> / (E_n - E_m)`` from the analytic ``d_t H0``.
* :func:`cd_gauge_potential` -- ``i lam_dot (d_lam U) U^dagger`` from a
  diagonalizing unitary ``U(lam)``.
* :func:`cd_variational` -- least-squares fit of an operator ansatz to the
  commutator identity ``[H0, i d_t H0 - [H1, H0]] = 0``.

All routes return the zero-diagonal representative (no Berry-connection
component), so they can be compared entry by entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegeneracyError, FlatObjectiveError, GaugeDiscontinuityError, RejectedInput
from .hamiltonians import ModelSpec
from .operators import (
    EigenFrame,
    as_operator,
    check_hermitian,
    check_unitary,
    commutator,
    eigenframe,
    frobenius,
    frobenius_norm,
    hermitize,
)
from .tolerances import DEFAULT

FD_REL_STEP = 1e-5


def _checked_hermitize(a, fail_tol, what, floor=0.0):
    h, asym = hermitize(a)
    norm = frobenius_norm(h)
    if floor > norm:
        # below the noise floor a relative measure only reports round-off
        asym = asym * norm / floor if norm > 0 else frobenius_norm(0.5 * (a - a.conj().T)) / floor
    if asym > fail_tol:
        raise GaugeDiscontinuityError(f"{what}: anti-Hermitian part {asym:.3e} exceeds {fail_tol:.1e}")
    return h, asym


def cd_from_frames(frames: Sequence[EigenFrame], dt: float, stencil: str = "central", fail_tol=DEFAULT.asymmetry_fail):
    """Projector-form CD term from a three-frame stencil.

    ``stencil`` is ``"central"`` for frames at ``(t - dt, t, t + dt)``,
    ``"forward"`` for ``(t, t + dt, t + 2dt)`` and ``"backward"`` for
    ``(t - 2dt, t - dt, t)``.  Returns ``(H1, asymmetry)``.
    """
    a, b, c = (f.vectors for f in frames)
    if stencil == "central":
        mid, deriv = b, (c - a) / (2 * dt)
    elif stencil == "forward":
        mid, deriv = a, (-3 * a + 4 * b - c) / (2 * dt)
    elif stencil == "backward":
        mid, deriv = c, (a - 4 * b + 3 * c) / (2 * dt)
    else:
        raise RejectedInput(f"unknown stencil {stencil!r}")
    berry = np.einsum("ij,ij->j", mid.conj(), deriv)
    h1 = 1j * (deriv - mid * berry) @ mid.conj().T
    # round-off in the difference quotient is ~sqrt(eps)/dt; a gauge jump is ~1/dt
    return _checked_hermitize(h1, fail_tol, "spectral CD", floor=np.sqrt(np.finfo(float).eps) / dt)


def cd_spectral(model: ModelSpec, t: float, dt_fd: Optional[float] = None, full_output: bool = False,
                tol=DEFAULT):
    """CD term from finite differences of the instantaneous eigenvectors of ``H0``.

    Frames are built in time order, each gauged against its predecessor, so
    levels keep their labels through crossings.  One-sided second-order
    stencils are used within ``dt_fd`` of the model's domain edges.
    """
    dt = FD_REL_STEP * model.span if dt_fd is None else float(dt_fd)
    if dt <= 0:
        raise RejectedInput(f"finite-difference step must be positive, got {dt}")
    lo, hi = model.domain
    if t - dt < lo:
        stencil, times = "forward", (t, t + dt, t + 2 * dt)
    elif t + dt > hi:
        stencil, times = "backward", (t - 2 * dt, t - dt, t)
    else:
        stencil, times = "central", (t - dt, t, t + dt)
    frames = []
    prev = None
    for s in times:
        prev = eigenframe(model.h0(s), prev=prev, time=s, degeneracy_tol=tol.degeneracy)
        frames.append(prev)
    h1, asym = cd_from_frames(frames, dt, stencil, tol.asymmetry_fail)
    return (h1, asym) if full_output else h1


def cd_from_derivative(h0, dh0, gap_tol: float = DEFAULT.degeneracy) -> np.ndarray:
    """``i sum_{m != n} <m|dH0|n> / (E_n - E_m) |m><n|``.

    Degenerate pairs are allowed only when ``dH0`` does not couple them
    (e.g. levels in decoupled symmetry blocks); they contribute nothing.
    A coupled degenerate pair raises :class:`DegeneracyError`.
    """
    frame = eigenframe(h0)
    dh0 = check_hermitian(dh0, what="dH0/dt")
    v, e = frame.vectors, frame.energies
    radius = max(float(np.max(np.abs(e))), np.finfo(float).tiny)
    gaps = e[None, :] - e[:, None]  # gaps[m, n] = E_n - E_m
    elements = v.conj().T @ dh0 @ v
    off = ~np.eye(len(e), dtype=bool)
    close = off & (np.abs(gaps) <= gap_tol * radius)
    if np.any(close):
        coupling_floor = gap_tol * max(frobenius_norm(dh0), np.finfo(float).tiny)
        coupled = close & (np.abs(elements) > coupling_floor)
        if np.any(coupled):
            m, n = np.argwhere(coupled)[0]
            raise DegeneracyError(
                f"levels {m} and {n} are degenerate (gap {abs(gaps[m, n]):.3e}) and coupled by dH0/dt; "
                "CD driving with degenerate spectra is not supported",
                pair=(int(m), int(n)),
            )
    use = off & ~close
    h1_eig = np.zeros_like(elements)
    h1_eig[use] = 1j * elements[use] / gaps[use]
    return v @ h1_eig @ v.conj().T


def cd_matrix_element(model: ModelSpec, t: float, tol=DEFAULT) -> np.ndarray:
    """CD term from the matrix elements of the analytic ``d_t H0``."""
    return cd_from_derivative(model.h0(t), model.dh0_dt(t), tol.degeneracy)


@dataclass(frozen=True)
class GaugeFrame:
    """Moving frame ``U(lam)`` with gauge potential ``A = i U^dagger d_lam U``."""

    unitary: np.ndarray
    gauge_potential: np.ndarray
    berry_connection: np.ndarray  # diagonal of A, i.e. i<n|d_lam n>


def gauge_frame(u_of_lambda: Callable[[float], np.ndarray], lam: float, dlam: float = 1e-5,
                tol=DEFAULT) -> GaugeFrame:
    u0 = check_unitary(u_of_lambda(lam), tol.unitary, what="U(lambda)")
    up = check_unitary(u_of_lambda(lam + dlam), tol.unitary, what="U(lambda + d)")
    um = check_unitary(u_of_lambda(lam - dlam), tol.unitary, what="U(lambda - d)")
    du = (up - um) / (2 * dlam)
    a_tilde, _ = _checked_hermitize(1j * u0.conj().T @ du, tol.asymmetry_fail, "gauge potential")
    return GaugeFrame(u0, a_tilde, np.diag(a_tilde).copy())


def cd_gauge_potential(u_of_lambda: Callable[[float], np.ndarray], lam: float, lam_dot: float,
                       dlam: float = 1e-5, remove_berry: bool = True, tol=DEFAULT) -> np.ndarray:
    """Lab-frame CD term ``i lam_dot (d_lam U) U^dagger``.

    With ``remove_berry`` the Berry-connection diagonal of the moving-frame
    gauge potential is dropped first, giving the zero-diagonal representative.
    """
    frame = gauge_frame(u_of_lambda, lam, dlam, tol)
    a = frame.gauge_potential
    if remove_berry:
        a = a - np.diag(frame.berry_connection)
    u = frame.unitary
    return lam_dot * (u @ a @ u.conj().T)


def cd_gauge_model(model: ModelSpec, t: float, dlam: float = 1e-5, tol=DEFAULT) -> np.ndarray:
    if model.gauge is None:
        raise RejectedInput(f"model {model.name!r} has no diagonalizing gauge path")
    g = model.gauge
    return cd_gauge_potential(g.unitary, g.lam(t), g.lam_dot(t), dlam, tol=tol)


@dataclass(frozen=True)
class VariationalAnsatz:
    basis: tuple
    coefficients: np.ndarray
    residual: float
    baseline: float = field(default=float("nan"))  # residual at c = 0

    def operator(self) -> np.ndarray:
        return sum(c * b for c, b in zip(self.coefficients, self.basis))


def commutator_defect(h0, dh0, h1) -> float:
    """``|| [H0, i dH0 - [H1, H0]] ||_F``; zero for an exact CD term."""
    return frobenius_norm(commutator(h0, 1j * dh0 - commutator(h1, h0)))


def variational_fit(h0, dh0, basis: Sequence, tol=DEFAULT, window: Optional[int] = None) -> VariationalAnsatz:
    """Real coefficients minimizing ``|| [H0, i dH0 - [sum c_k B_k, H0]] ||_F^2``.

    The objective is quadratic in ``c``; the normal equations are solved
    with Tikhonov damping ``tol.tikhonov`` relative to the Gram diagonal.
    ``window`` restricts the norm to the leading ``window x window`` block,
    which keeps truncation-edge artifacts of a cut-off basis out of the fit.
    """
    if len(basis) == 0:
        raise RejectedInput("variational basis is empty")
    h0 = check_hermitian(h0, what="H0")
    basis = tuple(check_hermitian(b, what=f"basis operator {k}") for k, b in enumerate(basis))
    for b in basis:
        if b.shape != h0.shape:
            raise RejectedInput(f"basis operator shape {b.shape} does not match H0 {h0.shape}")
    if window is None:
        window = h0.shape[0]
    if not 1 <= window <= h0.shape[0]:
        raise RejectedInput(f"window {window} outside [1, {h0.shape[0]}]")
    cut = slice(0, window)

    def objective(x):
        return commutator(h0, x)[cut, cut]

    def defect(h1):
        return frobenius_norm(objective(1j * as_operator(dh0) - commutator(h1, h0)))

    target = objective(1j * as_operator(dh0))
    images = [objective(commutator(b, h0)) for b in basis]
    scale = frobenius_norm(h0) ** 2
    if all(frobenius_norm(m) <= 1e-12 * scale * max(frobenius_norm(b), 1e-300) for m, b in zip(images, basis)):
        raise FlatObjectiveError("every basis operator commutes with H0; objective is flat")
    gram = np.array([[frobenius(mk, ml).real for ml in images] for mk in images])
    rhs = np.array([frobenius(mk, target).real for mk in images])
    damping = tol.tikhonov * max(float(np.max(np.diag(gram))), np.finfo(float).tiny)
    coeffs = np.linalg.solve(gram + damping * np.eye(len(basis)), rhs)
    h1 = sum(c * b for c, b in zip(coeffs, basis))
    return VariationalAnsatz(
        basis=basis,
        coefficients=coeffs,
        residual=defect(h1),
        baseline=frobenius_norm(target),
    )


def cd_variational(model: ModelSpec, t: float, basis: Sequence, tol=DEFAULT, window="auto") -> VariationalAnsatz:
    """Variational CD term; ``window="auto"`` fits truncated Fock models on their lowest half."""
    if window == "auto":
        window = model.dim // 2 if model.fock else None
    return variational_fit(model.h0(t), model.dh0_dt(t), basis, tol, window)


@dataclass
class CDReport:
    """Diagnostics of a candidate CD term against the defining identities.

    ``absolute`` holds raw metrics, ``relative`` the scale-free versions used
    for pass/fail.
    """

    absolute: dict
    relative: dict
    passed: dict
    notes: list

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def verify_cd(h0, dh0, h1, tol=DEFAULT) -> CDReport:
    h0, dh0, h1 = as_operator(h0), as_operator(dh0), as_operator(h1)
    n_h0, n_dh0, n_h1 = frobenius_norm(h0), frobenius_norm(dh0), frobenius_norm(h1)

    def rel(x, *norms):
        denom = float(np.prod(norms))
        return x / denom if denom > 0 else x

    notes = []
    absolute, relative = {}, {}
    frame = eigenframe(h0)
    e = frame.energies
    radius = max(float(np.max(np.abs(e))), np.finfo(float).tiny)
    if len(e) > 1 and np.min(np.diff(e)) <= tol.degeneracy * radius:
        notes.append("H0 is degenerate; zero-diagonal check skipped")
    else:
        diag = np.einsum("in,ij,jn->n", frame.vectors.conj(), h1, frame.vectors)
        absolute["diagonal"] = float(np.max(np.abs(diag)))
        relative["diagonal"] = rel(absolute["diagonal"], n_h1)
    absolute["orth_h0"] = abs(frobenius(h0, h1))
    relative["orth_h0"] = rel(absolute["orth_h0"], n_h0, n_h1)
    absolute["orth_dh0"] = abs(frobenius(dh0, h1))
    relative["orth_dh0"] = rel(absolute["orth_dh0"], n_dh0, n_h1)
    absolute["defect"] = commutator_defect(h0, dh0, h1)
    relative["defect"] = rel(absolute["defect"], n_h0, n_dh0)
    limits = {"diagonal": tol.cd_identity, "orth_h0": tol.cd_identity,
              "orth_dh0": tol.cd_identity, "defect": tol.cd_defect}
    passed = {k: relative[k] <= limits[k] for k in relative}
    return CDReport(absolute, relative, passed, notes)


def route_table(model: ModelSpec, t: float, variational_basis: Optional[Sequence] = None, tol=DEFAULT) -> dict:
    """Every applicable CD route evaluated at ``t``."""
    routes = {
        "spectral": cd_spectral(model, t, tol=tol),
        "matrix-element": cd_matrix_element(model, t, tol),
    }
    if model.gauge is not None:
        routes["gauge"] = cd_gauge_model(model, t, tol=tol)
    if model.cd_analytic is not None:
        routes["analytic"] = model.cd_analytic(t)
    if variational_basis is not None:
        routes["variational"] = cd_variational(model, t, variational_basis, tol).operator()
    return routes


def default_variational_basis(model: ModelSpec) -> list:
    """A minimal ansatz containing the exact CD generator of each built-in model."""
    from .hamiltonians import XY_YX, oscillator_operators, quadratic_operators
    from .operators import SIGMA_Y

    if model.name == "spin1":
        return [SIGMA_Y]
    if model.name == "spin2":
        return [0.5 * XY_YX]
    if model.name == "oscillator":
        return [quadratic_operators(model.dim)["dilation"]]
    if model.name == "moving_trap":
        return [oscillator_operators(model.dim)[1]]
    raise RejectedInput(f"no default variational basis for model {model.name!r}")


def route_spread(routes: dict, floor: float = 0.0) -> tuple[float, tuple]:
    """Largest pairwise relative Frobenius distance between CD routes.

    Each difference is divided by ``max(||A||, ||B||, floor)``; the floor
    keeps points where the CD term vanishes from dominating the ratio.
    """
    names = sorted(routes)
    worst, pair = 0.0, ()
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            scale = max(frobenius_norm(routes[a]), frobenius_norm(routes[b]), floor)
            err = frobenius_norm(routes[a] - routes[b]) / scale if scale > 0 else 0.0
            if err > worst or not pair:
                worst, pair = err, (a, b)
    return worst, pair
