"""Catalog of driven models with analytic schedules and closed-form CD terms.

Units: hbar = 1, m = 1, and for the single spin the gyromagnetic factor is
absorbed into the adiabaticity parameter ``T`` (normalized time on [0, 1]).
The oscillator models live in the number basis of the reference frequency
``omega0`` with length unit ``sqrt(1/omega0)``.

Models
------
``spin1``        single spin swept along a meridian of the Bloch sphere
``spin2``        two coupled spins with a block-diagonal Hamiltonian
``oscillator``   harmonic trap with a time-dependent frequency
``moving_trap``  harmonic trap transported along ``q0(t)``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from .errors import RejectedInput, SingularityError
from .operators import SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z, check_hermitian

_DOMAIN_SLACK = 1e-12

Operator = Callable[[float], np.ndarray]


def _check_domain(t, lo, hi, what):
    if not (lo - _DOMAIN_SLACK <= t <= hi + _DOMAIN_SLACK):
        raise RejectedInput(f"{what}: t={t} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class ParameterSchedule:
    """Named control parameters ``lambda(t)`` with first and second derivatives."""

    value: Callable[[float], dict]
    derivative: Callable[[float], dict]
    domain: tuple
    second: Optional[Callable[[float], dict]] = None

    @classmethod
    def numeric(cls, value, domain, rel_step: float = 1e-4) -> "ParameterSchedule":
        """Wrap a user schedule; derivatives come from central differences."""
        span = domain[1] - domain[0]
        step = rel_step * span

        def derivative(t):
            hi, lo = value(t + step), value(t - step)
            return {k: (hi[k] - lo[k]) / (2 * step) for k in hi}

        def second(t):
            hi, mid, lo = value(t + step), value(t), value(t - step)
            return {k: (hi[k] - 2 * mid[k] + lo[k]) / step**2 for k in hi}

        return cls(value, derivative, tuple(domain), second)

    def derivative_error(self, points: int = 1000, step: float = 1e-5) -> float:
        """Largest scaled mismatch between the analytic and central-difference derivative."""
        lo, hi = self.domain
        worst = 0.0
        for t in np.linspace(lo + step, hi - step, points):
            plus, minus, d = self.value(t + step), self.value(t - step), self.derivative(t)
            for k, dk in d.items():
                numeric = (plus[k] - minus[k]) / (2 * step)
                worst = max(worst, abs(numeric - dk) / max(1.0, abs(dk)))
        return worst


@dataclass(frozen=True)
class GaugePath:
    """Diagonalizing unitary ``U(lambda)`` together with the path ``lambda(t)``."""

    unitary: Callable[[float], np.ndarray]
    lam: Callable[[float], float]
    lam_dot: Callable[[float], float]
    name: str = "lambda"


@dataclass(frozen=True)
class ModelSpec:
    name: str
    dim: int
    params: dict
    domain: tuple
    h0: Operator
    dh0_dt: Operator
    schedule: ParameterSchedule
    cd_analytic: Optional[Operator] = None
    gauge: Optional[GaugePath] = None
    fock: bool = False
    initial_level: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def span(self) -> float:
        return self.domain[1] - self.domain[0]

    def h_total(self, t: float, cd_scale: float = 1.0) -> np.ndarray:
        if self.cd_analytic is None:
            raise RejectedInput(f"model {self.name!r} has no analytic CD term")
        return self.h0(t) + cd_scale * self.cd_analytic(t)

    def dh0_error(self, points: int = 1000, rel_step: float = 1e-5) -> float:
        """Worst relative mismatch of ``dh0_dt`` against central differences of ``h0``."""
        lo, hi = self.domain
        step = rel_step * self.span
        worst = 0.0
        for t in np.linspace(lo + step, hi - step, points):
            numeric = (self.h0(t + step) - self.h0(t - step)) / (2 * step)
            analytic = self.dh0_dt(t)
            scale = max(1.0, float(np.max(np.abs(analytic))))
            worst = max(worst, float(np.max(np.abs(numeric - analytic))) / scale)
        return worst


def frozen(model: ModelSpec, t0: float) -> ModelSpec:
    """Copy of ``model`` with every parameter held at its value at ``t0``."""
    h_fixed = model.h0(t0)
    zero = np.zeros_like(h_fixed)
    value = model.schedule.value(t0)
    schedule = ParameterSchedule(
        lambda t: dict(value),
        lambda t: {k: 0.0 for k in value},
        model.domain,
        lambda t: {k: 0.0 for k in value},
    )
    return ModelSpec(
        name=f"{model.name}-frozen",
        dim=model.dim,
        params=dict(model.params, frozen_at=t0),
        domain=model.domain,
        h0=lambda t: h_fixed,
        dh0_dt=lambda t: zero,
        schedule=schedule,
        cd_analytic=lambda t: zero,
        fock=model.fock,
        initial_level=model.initial_level,
    )


# ---------------------------------------------------------------------------
# single spin


def spin1_angles(t: float) -> tuple[float, float, float]:
    """Polar angle ``theta = pi sin^2(pi t / 2)`` and its first two derivatives."""
    theta = np.pi * np.sin(np.pi * t / 2) ** 2
    theta_dot = 0.5 * np.pi**2 * np.sin(np.pi * t)
    theta_ddot = 0.5 * np.pi**3 * np.cos(np.pi * t)
    return float(theta), float(theta_dot), float(theta_ddot)


def spin1_h0(t: float, T: float) -> np.ndarray:
    """``T b0(t) . S`` with ``b0`` on the meridian ``phi = 0``."""
    _check_domain(t, 0.0, 1.0, "spin1_h0")
    theta, _, _ = spin1_angles(t)
    return 0.5 * T * (np.sin(theta) * SIGMA_X + np.cos(theta) * SIGMA_Z)


def spin1_dh0_dt(t: float, T: float) -> np.ndarray:
    _check_domain(t, 0.0, 1.0, "spin1_dh0_dt")
    theta, theta_dot, _ = spin1_angles(t)
    return 0.5 * T * theta_dot * (np.cos(theta) * SIGMA_X - np.sin(theta) * SIGMA_Z)


def spin1_cd_analytic(t: float) -> np.ndarray:
    _check_domain(t, 0.0, 1.0, "spin1_cd_analytic")
    return 0.25 * np.pi**2 * np.sin(np.pi * t) * SIGMA_Y


def spin1_effective_field(t: float, T: float) -> np.ndarray:
    """Field ``B`` with ``H0 + H1 = B . S``."""
    _check_domain(t, 0.0, 1.0, "spin1_effective_field")
    theta, _, _ = spin1_angles(t)
    return np.array([T * np.sin(theta), 0.5 * np.pi**2 * np.sin(np.pi * t), T * np.cos(theta)])


def spin1_population_analytic(t: float, T: float) -> tuple[float, float]:
    """Populations of the CD-driven state on the eigenstates of the total Hamiltonian."""
    _check_domain(t, 0.0, 1.0, "spin1_population_analytic")
    p0 = 0.5 + T / np.sqrt(4 * T**2 + np.pi**4 * np.sin(np.pi * t) ** 2)
    return float(p0), float(1.0 - p0)


def spin1_unitary(theta: float, phi: float = 0.0) -> np.ndarray:
    """Columns are the lower and upper eigenvectors of ``b0(theta, phi) . S``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    return np.array([[-s, c], [e * c, e * s]], dtype=complex)


def spin1_model(T: float = 2.0) -> ModelSpec:
    if T <= 0:
        raise RejectedInput(f"T must be positive, got {T}")

    def value(t):
        return {"theta": spin1_angles(t)[0]}

    schedule = ParameterSchedule(
        value,
        lambda t: {"theta": spin1_angles(t)[1]},
        (0.0, 1.0),
        lambda t: {"theta": spin1_angles(t)[2]},
    )
    gauge = GaugePath(
        unitary=spin1_unitary,
        lam=lambda t: spin1_angles(t)[0],
        lam_dot=lambda t: spin1_angles(t)[1],
        name="theta",
    )
    return ModelSpec(
        name="spin1",
        dim=2,
        params={"T": float(T)},
        domain=(0.0, 1.0),
        h0=lambda t: spin1_h0(t, T),
        dh0_dt=lambda t: spin1_dh0_dt(t, T),
        schedule=schedule,
        cd_analytic=spin1_cd_analytic,
        gauge=gauge,
    )


# ---------------------------------------------------------------------------
# two spins

XX = np.kron(SIGMA_X, SIGMA_X)
YY = np.kron(SIGMA_Y, SIGMA_Y)
ZSUM = np.kron(SIGMA_Z, SIGMA_0) + np.kron(SIGMA_0, SIGMA_Z)
XY_YX = np.kron(SIGMA_X, SIGMA_Y) + np.kron(SIGMA_Y, SIGMA_X)


def spin2_controls(t: float, v: float) -> dict:
    """``J_x = tanh^2(vt)``, ``J_y = -tanh(vt)``, ``h = tanh(vt) - 1`` and derivatives."""
    u = np.tanh(v * t)
    s = 1.0 - u * u
    return {
        "Jx": u * u,
        "Jy": -u,
        "h": u - 1.0,
        "dJx": 2 * v * u * s,
        "dJy": -v * s,
        "dh": v * s,
        "ddJx": 2 * v * v * s * (s - 2 * u * u),
        "ddJy": 2 * v * v * u * s,
        "ddh": -2 * v * v * u * s,
    }


def _spin2_matrix(jx, jy, h):
    return jx * XX + jy * YY + h * ZSUM


def spin2_h0(t: float, v: float = 5.0) -> np.ndarray:
    """Two-spin Hamiltonian in the binary basis ``|00>, |01>, |10>, |11>``.

    The transverse term is ``h (sz1 + sz2)``, which gives the block structure
    ``2h sz + (Jx - Jy) sx`` on ``{|00>, |11>}`` and ``(Jx + Jy) sx`` on
    ``{|01>, |10>}``.
    """
    c = spin2_controls(t, v)
    return _spin2_matrix(c["Jx"], c["Jy"], c["h"])


def spin2_dh0_dt(t: float, v: float = 5.0) -> np.ndarray:
    c = spin2_controls(t, v)
    return _spin2_matrix(c["dJx"], c["dJy"], c["dh"])


def spin2_cd_field(t: float, v: float = 5.0) -> float:
    """Coefficient ``F`` of the CD term ``F sy`` on the ``{|00>, |11>}`` block."""
    c = spin2_controls(t, v)
    delta = c["Jx"] - c["Jy"]
    denom = 4 * c["h"] ** 2 + delta**2
    if denom < 1e-300:
        raise SingularityError(f"spin2 CD field: vanishing gap denominator at t={t}")
    return float((c["h"] * (c["dJx"] - c["dJy"]) - c["dh"] * delta) / denom)


def spin2_cd_analytic(t: float, v: float = 5.0) -> np.ndarray:
    return 0.5 * spin2_cd_field(t, v) * XY_YX


def spin2_mixing_angle(t: float, v: float = 5.0) -> tuple[float, float]:
    """Angle ``beta`` of the ``{|00>, |11>}`` block field and its rate ``2F``."""
    c = spin2_controls(t, v)
    x, y = 2 * c["h"], c["Jx"] - c["Jy"]
    beta = np.mod(np.arctan2(y, x), 2 * np.pi)
    beta_dot = (x * (c["dJx"] - c["dJy"]) - y * 2 * c["dh"]) / (x * x + y * y)
    return float(beta), float(beta_dot)


def spin2_unitary(beta: float) -> np.ndarray:
    """Diagonalizing frame: rotated ``{|00>, |11>}`` block, fixed ``{|01>, |10>}`` block."""
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    r = 1 / np.sqrt(2)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0], u[3, 0] = -s, c
    u[1, 1], u[2, 1] = r, -r
    u[1, 2], u[2, 2] = r, r
    u[0, 3], u[3, 3] = c, s
    return u


def spin2_model(v: float = 5.0, T: float = 2.0) -> ModelSpec:
    if v <= 0 or T <= 0:
        raise RejectedInput(f"v and T must be positive, got v={v}, T={T}")
    keys = ("Jx", "Jy", "h")
    schedule = ParameterSchedule(
        lambda t: {k: spin2_controls(t, v)[k] for k in keys},
        lambda t: {k: spin2_controls(t, v)["d" + k] for k in keys},
        (-T, T),
        lambda t: {k: spin2_controls(t, v)["dd" + k] for k in keys},
    )
    gauge = GaugePath(
        unitary=spin2_unitary,
        lam=lambda t: spin2_mixing_angle(t, v)[0],
        lam_dot=lambda t: spin2_mixing_angle(t, v)[1],
        name="beta",
    )
    return ModelSpec(
        name="spin2",
        dim=4,
        params={"v": float(v), "T": float(T)},
        domain=(-T, T),
        h0=lambda t: spin2_h0(t, v),
        dh0_dt=lambda t: spin2_dh0_dt(t, v),
        schedule=schedule,
        cd_analytic=lambda t: spin2_cd_analytic(t, v),
        gauge=gauge,
    )


# ---------------------------------------------------------------------------
# oscillators in a truncated number basis


def _ladder(N):
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), k=1).astype(complex)


def oscillator_operators(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum ``(a + a^dagger)/sqrt2``, ``i(a^dagger - a)/sqrt2`` on ``N`` levels."""
    if N < 8:
        raise RejectedInput(f"Fock dimension must be at least 8, got {N}")
    a = _ladder(N)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2), 1j * (ad - a) / np.sqrt(2)


def quadratic_operators(N: int) -> dict:
    """Exact truncations of ``q^2``, ``p^2`` and the dilation generator ``pq + qp``.

    Built from normal-ordered ladder products, so the top-corner artifacts of
    squaring truncated ``q`` and ``p`` are absent.
    """
    if N < 8:
        raise RejectedInput(f"Fock dimension must be at least 8, got {N}")
    a = _ladder(N)
    ad = a.conj().T
    a2, ad2 = a @ a, ad @ ad
    num = np.diag(np.arange(N, dtype=float)).astype(complex)
    eye = np.eye(N, dtype=complex)
    return {
        "q2": 0.5 * (a2 + ad2 + 2 * num + eye),
        "p2": 0.5 * (-a2 - ad2 + 2 * num + eye),
        "dilation": 1j * (ad2 - a2),
    }


def oscillator_schedule(t: float, T: float = 0.3, omega0: float = 1.0) -> tuple[float, float, float, float]:
    """``omega(t) = omega0 (1 + tanh^3(t/T)/3)`` with derivatives and the localized frequency.

    Returns ``(omega, omega_dot, omega_ddot, omega_prime)`` where
    ``omega_prime^2 = omega^2 - 3 omega_dot^2 / (4 omega^2) + omega_ddot / (2 omega)``.
    """
    _check_domain(t, 0.0, 5 * T, "oscillator_schedule")
    u = np.tanh(t / T)
    s = 1.0 - u * u
    omega = omega0 * (1 + u**3 / 3)
    omega_dot = omega0 * u * u * s / T
    omega_ddot = omega0 * 2 * u * s * (s - u * u) / T**2
    radicand = omega**2 - 0.75 * omega_dot**2 / omega**2 + 0.5 * omega_ddot / omega
    if radicand <= 0:
        raise SingularityError(f"localized frequency undefined at t={t}: radicand {radicand:.3e}")
    return float(omega), float(omega_dot), float(omega_ddot), float(np.sqrt(radicand))


def oscillator_cd(t: float, T: float = 0.3, omega0: float = 1.0, N: int = 64) -> np.ndarray:
    """``-(omega_dot / 4 omega)(pq + qp)`` on ``N`` levels."""
    omega, omega_dot, _, _ = oscillator_schedule(t, T, omega0)
    return -(omega_dot / (4 * omega)) * quadratic_operators(N)["dilation"]


def scale_invariant_cd(gamma, gamma_dot, f, f_dot, q, p) -> np.ndarray:
    """CD term of a dilated and translated potential.

    ``(gamma_dot / 2 gamma)[(q - f)p + p(q - f)] + f_dot p``
    """
    if gamma <= 0:
        raise RejectedInput(f"dilation gamma must be positive, got {gamma}")
    q = check_hermitian(q, what="q")
    p = check_hermitian(p, what="p")
    shifted = q - f * np.eye(q.shape[0])
    return (gamma_dot / (2 * gamma)) * (shifted @ p + p @ shifted) + f_dot * p


def oscillator_model(T: float = 0.3, omega0: float = 1.0, N: int = 64) -> ModelSpec:
    if T <= 0 or omega0 <= 0:
        raise RejectedInput(f"T and omega0 must be positive, got T={T}, omega0={omega0}")
    ops = quadratic_operators(N)
    q2, p2, dil = ops["q2"], ops["p2"], ops["dilation"]

    def sched(t):
        return oscillator_schedule(t, T, omega0)

    schedule = ParameterSchedule(
        lambda t: {"omega": sched(t)[0]},
        lambda t: {"omega": sched(t)[1]},
        (0.0, 5 * T),
        lambda t: {"omega": sched(t)[2]},
    )

    def h0(t):
        w = sched(t)[0]
        return 0.5 * p2 + 0.5 * w * w * q2

    def dh0(t):
        w, wd, _, _ = sched(t)
        return w * wd * q2

    def cd(t):
        w, wd, _, _ = sched(t)
        return -(wd / (4 * w)) * dil

    def h_local(t):
        wp = sched(t)[3]
        return 0.5 * p2 + 0.5 * wp * wp * q2

    def localizing_unitary(t):
        w, wd, _, _ = sched(t)
        return expm(1j * wd / (4 * w) * q2)

    # U(lam) = exp(i lam D / 2) with lam = ln(omega/omega0)/2 diagonalizes h0
    gauge = GaugePath(
        unitary=lambda lam: expm(0.5j * lam * dil),
        lam=lambda t: 0.5 * np.log(sched(t)[0] / omega0),
        lam_dot=lambda t: 0.5 * sched(t)[1] / sched(t)[0],
        name="log-dilation",
    )
    return ModelSpec(
        name="oscillator",
        dim=N,
        params={"T": float(T), "omega0": float(omega0), "N": int(N)},
        domain=(0.0, 5 * T),
        h0=h0,
        dh0_dt=dh0,
        schedule=schedule,
        cd_analytic=cd,
        gauge=gauge,
        fock=True,
        extras={"h_local": h_local, "localizing_unitary": localizing_unitary},
    )


def trap_path(t: float, distance: float = 2.0, duration: float = 2.0) -> tuple[float, float, float]:
    """Quintic transport ``q0 = d (10 s^3 - 15 s^4 + 6 s^5)``, ``s = t / duration``.

    Velocity and acceleration vanish at both ends.
    """
    _check_domain(t, 0.0, duration, "trap_path")
    s = t / duration
    q0 = distance * (10 * s**3 - 15 * s**4 + 6 * s**5)
    q0_dot = distance * 30 * s**2 * (1 - s) ** 2 / duration
    q0_ddot = distance * 60 * s * (1 - s) * (1 - 2 * s) / duration**2
    return float(q0), float(q0_dot), float(q0_ddot)


def moving_trap_terms(t: float, path: Callable, omega: float = 1.0, N: int = 64):
    """``(h0, cd_nonlocal, cd_local)`` for a trap centred at ``q0(t)``.

    ``path(t)`` returns ``(q0, q0_dot, q0_ddot)``.  ``cd_nonlocal = q0_dot p``
    is the translation generator; ``cd_local = -q0_ddot q`` is its
    gauge-equivalent position-only form.
    """
    q, p = oscillator_operators(N)
    q2 = quadratic_operators(N)["q2"]
    q0, q0_dot, q0_ddot = path(t)
    eye = np.eye(N, dtype=complex)
    h0 = 0.5 * quadratic_operators(N)["p2"] + 0.5 * omega**2 * (q2 - 2 * q0 * q + q0 * q0 * eye)
    return h0, q0_dot * p, -q0_ddot * q


def moving_trap_model(
    omega: float = 1.0,
    N: int = 64,
    distance: float = 2.0,
    duration: float = 2.0,
    variant: str = "nonlocal",
) -> ModelSpec:
    if omega <= 0 or duration <= 0:
        raise RejectedInput(f"omega and duration must be positive, got {omega}, {duration}")
    if variant not in ("nonlocal", "local"):
        raise RejectedInput(f"unknown CD variant {variant!r}")
    q, p = oscillator_operators(N)
    ops = quadratic_operators(N)
    q2, p2 = ops["q2"], ops["p2"]
    eye = np.eye(N, dtype=complex)

    def path(t):
        return trap_path(t, distance, duration)

    schedule = ParameterSchedule(
        lambda t: {"q0": path(t)[0]},
        lambda t: {"q0": path(t)[1]},
        (0.0, duration),
        lambda t: {"q0": path(t)[2]},
    )

    def h0(t):
        q0 = path(t)[0]
        return 0.5 * p2 + 0.5 * omega**2 * (q2 - 2 * q0 * q + q0 * q0 * eye)

    def dh0(t):
        q0, q0_dot, _ = path(t)
        return -(omega**2) * q0_dot * (q - q0 * eye)

    if variant == "nonlocal":
        def cd(t):
            return path(t)[1] * p
    else:
        def cd(t):
            return -path(t)[2] * q

    gauge = GaugePath(
        unitary=lambda q0: expm(-1j * q0 * p),
        lam=lambda t: path(t)[0],
        lam_dot=lambda t: path(t)[1],
        name="q0",
    )
    return ModelSpec(
        name="moving_trap",
        dim=N,
        params={"omega": float(omega), "N": int(N), "distance": float(distance),
                "duration": float(duration), "variant": variant},
        domain=(0.0, duration),
        h0=h0,
        dh0_dt=dh0,
        schedule=schedule,
        cd_analytic=cd,
        gauge=gauge,
        fock=True,
        extras={"path": path, "q": q, "p": p},
    )


def build_model(name: str, **params) -> ModelSpec:
    factories = {
        "spin1": spin1_model,
        "spin2": spin2_model,
        "oscillator": oscillator_model,
        "moving_trap": moving_trap_model,
    }
    if name not in factories:
        raise RejectedInput(f"unknown model {name!r}; choose from {sorted(factories)}")
    return factories[name](**params)
