"""Property suite behind ``cdsta verify``.

Each check measures one scalar and compares it with a threshold.  The
``fast`` suite skips the 64-level Fock runs; ``all`` adds them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import cdrive
from .dynamics import discrete_berry_phase, fidelity, gaussian_overlap, model_grid, propagate, refine, uniform_grid
from .errors import CDError
from .hamiltonians import (
    ModelSpec,
    moving_trap_model,
    oscillator_model,
    oscillator_schedule,
    spin1_model,
    spin1_population_analytic,
    spin2_model,
)
from .invariant import (
    di_residuals,
    expectation_invariance,
    mode_population_drift,
    propagate_invariant,
    record_from_operators,
)
from .operators import SIGMA_X, SIGMA_Y, eigenframe, eigenframes
from .tolerances import DEFAULT, Tolerances

SUITES = ("fast", "all")


@dataclass(frozen=True)
class Check:
    name: str
    metric: float
    tolerance: float
    passed: bool
    relation: str = "<="

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name:<46} {self.metric:.6e} {self.relation:>2} {self.tolerance:<8.3g}  {status}"


def at_most(name, metric, tolerance) -> Check:
    metric = float(metric)
    return Check(name, metric, tolerance, bool(metric <= tolerance), "<=")


def at_least(name, metric, threshold) -> Check:
    metric = float(metric)
    return Check(name, metric, threshold, bool(metric >= threshold), ">=")


def above(name, metric, threshold) -> Check:
    metric = float(metric)
    return Check(name, metric, threshold, bool(metric > threshold), ">")


@dataclass
class VerifyReport:
    suite: str
    checks: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        out = [c.line() for c in self.checks]
        verdict = "PASS" if self.passed else "FAIL"
        out.append(f"overall: {verdict} ({len(self.checks) - len(self.failures())}/{len(self.checks)} checks, {self.elapsed:.1f} s)")
        return out


def _cd_driven(model: ModelSpec, scale: float):
    return lambda t: model.h0(t) + scale * model.cd_analytic(t)


def _ground_fidelity_loss(model: ModelSpec, h_of_t, times, tail_guard=None) -> float:
    frames = eigenframes(model.h0, times)
    level = model.initial_level
    traj = propagate(h_of_t, frames[0].vectors[:, level], times, tail_guard=tail_guard)
    pops = np.array([fidelity(f.vectors[:, level], s) for f, s in zip(frames, traj.states)])
    return float(1.0 - pops.min())


def spin1_transitionless(tol: Tolerances, scale: float) -> list[Check]:
    checks = []
    for T in (2.0, 10.0, 20.0):
        model = spin1_model(T)
        loss = _ground_fidelity_loss(model, _cd_driven(model, scale), uniform_grid(0.0, 1.0, 4000))
        checks.append(at_most(f"spin1 transitionless T={T:g}", loss, tol.transitionless))
    return checks


def spin1_populations(tol: Tolerances, scale: float) -> list[Check]:
    """Full-Hamiltonian populations against the closed form on a 1000-point grid."""
    checks = []
    grid = np.linspace(0.0, 1.0, 1000)
    for T in (2.0, 10.0, 20.0):
        model = spin1_model(T)
        h = _cd_driven(model, scale)
        times = np.union1d(uniform_grid(0.0, 1.0, 4000), grid)
        psi0 = eigenframe(model.h0(0.0)).vectors[:, 0]
        traj = propagate(h, psi0, times)
        idx = np.searchsorted(times, grid)
        frames = eigenframes(h, times[idx])
        measured = np.array([fidelity(f.vectors[:, 0], traj.states[k]) for f, k in zip(frames, idx)])
        exact = np.array([spin1_population_analytic(t, T)[0] for t in grid])
        checks.append(at_most(f"spin1 p0 closed form T={T:g}", np.max(np.abs(measured - exact)), 1e-6))
    p_half = spin1_population_analytic(0.5, 2.0)[0]
    checks.append(at_most("spin1 p0(1/2) T=2 spot value", abs(p_half - 0.68780), 1e-5))
    return checks


def route_agreement(model: ModelSpec, times, tol: Tolerances = DEFAULT) -> float:
    """Worst pairwise relative spread of every CD route over ``times``.

    Distances are floored at 1e-3 of the peak analytic CD norm so that
    points where the CD term vanishes compare on an absolute scale.
    """
    basis = cdrive.default_variational_basis(model)
    lo, hi = model.domain
    peak = max(np.linalg.norm(model.cd_analytic(t)) for t in np.linspace(lo, hi, 1001)[1:-1])
    return max(cdrive.route_spread(cdrive.route_table(model, t, basis, tol), 1e-3 * peak)[0] for t in times)


def route_checks(tol: Tolerances, samples: int = 100) -> list[Check]:
    spin1 = spin1_model(2.0)
    spin2 = spin2_model()
    fit = cdrive.cd_variational(spin2, 0.0, cdrive.default_variational_basis(spin2), tol)
    return [
        at_most("routes agree spin1", route_agreement(spin1, np.linspace(0.005, 0.995, samples), tol), 1e-5),
        at_most("routes agree spin2", route_agreement(spin2, np.linspace(-2.0, 2.0, samples), tol), 1e-5),
        at_most("spin2 variational F(0) = -1.25", abs(fit.coefficients[0] + 1.25), 1e-6),
    ]


def identity_checks(tol: Tolerances, models: list[ModelSpec], samples: int = 20) -> list[Check]:
    """Zero diagonal and Frobenius orthogonality of every route on every model."""
    checks = []
    for model in models:
        lo, hi = model.domain
        basis = cdrive.default_variational_basis(model)
        worst = {"diagonal": 0.0, "orth_h0": 0.0, "orth_dh0": 0.0}
        for t in np.linspace(lo, hi, samples + 2)[1:-1]:
            routes = cdrive.route_table(model, t, basis, tol)
            if model.fock:
                routes = _fock_block(routes, model)
                h0, dh0 = (_fock_block({"x": model.h0(t), "y": model.dh0_dt(t)}, model)[k] for k in "xy")
            else:
                h0, dh0 = model.h0(t), model.dh0_dt(t)
            for h1 in routes.values():
                report = cdrive.verify_cd(h0, dh0, h1, tol)
                for key in worst:
                    worst[key] = max(worst[key], report.relative.get(key, 0.0))
        for key, value in worst.items():
            checks.append(at_most(f"{model.name} N={model.dim} {key}", value, tol.cd_identity))
    return checks


def fock_block_size(model: ModelSpec) -> int:
    """Levels of a truncated Fock model that are free of truncation-edge effects."""
    return 3 * model.dim // 8


def _fock_block(ops: dict, model: ModelSpec) -> dict:
    k = fock_block_size(model)
    return {name: op[:k, :k] for name, op in ops.items()}


def spin2_checks(tol: Tolerances, scale: float) -> list[Check]:
    model = spin2_model()
    times = model_grid(model)
    target = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
    psi0 = np.array([1, 0, 0, 0], dtype=complex)
    traj = propagate(_cd_driven(model, scale), psi0, times)
    leak = np.max(np.sum(np.abs(traj.states[:, 1:3]) ** 2, axis=1))
    bare = _ground_fidelity_loss(model, model.h0, times)
    return [
        at_least("spin2 GHZ fidelity", fidelity(target, traj.final), 0.999),
        at_most("spin2 middle-block leakage", leak, 1e-10),
        above("spin2 bare max(1-p0)", bare, 0.05),
    ]


def invariant_checks(tol: Tolerances, scale: float) -> list[Check]:
    model = spin1_model(2.0)
    times = model_grid(model)
    h_cd = _cd_driven(model, scale)
    record = propagate_invariant(h_cd, model.h0(0.0), times)
    psi0 = np.array([0.6, 0.8j])
    traj = propagate(h_cd, psi0, times)
    h0_record = record_from_operators(times, [model.h0(t) for t in times])
    return [
        at_most("invariant eigenvalue drift", record.eigenvalue_drift(), 1e-8),
        at_most("invariant expectation drift", expectation_invariance(traj, record), 1e-6),
        at_most("invariant mode-population drift", mode_population_drift(traj, record), 1e-6),
        at_most("I=H0 residual under CD", np.max(di_residuals(h_cd, h0_record)), 1e-5),
        above("I=H0 residual under bare H0", np.max(di_residuals(model.h0, h0_record)), 0.1),
    ]


def latitude_frames(theta: float = np.pi / 2, points: int = 2000, phases=None) -> list:
    """Eigenframes of ``n(theta, phi) . sigma`` around a closed latitude loop."""
    frames = []
    for k, phi in enumerate(np.linspace(0.0, 2 * np.pi, points, endpoint=False)):
        h = np.sin(theta) * (np.cos(phi) * SIGMA_X + np.sin(phi) * SIGMA_Y)
        h = h + np.cos(theta) * np.diag([1.0, -1.0])
        frame = eigenframe(h, time=phi)
        if phases is not None:
            frame = frame.rephased(phases[k])
        frames.append(frame)
    return frames


def berry_checks() -> list[Check]:
    phase = discrete_berry_phase(latitude_frames(), 0)
    # distance from -pi on the circle
    dist = abs(np.angle(np.exp(1j * (phase + np.pi))))
    rng = np.random.default_rng(7)
    scrambled = discrete_berry_phase(latitude_frames(phases=rng.uniform(0, 2 * np.pi, (2000, 2))), 0)
    return [
        at_most("Berry phase latitude loop = -pi", dist, 1e-4),
        at_most("Berry phase gauge invariance", abs(np.angle(np.exp(1j * (scrambled - phase)))), 1e-6),
    ]


def integrator_checks(tol: Tolerances) -> list[Check]:
    model = spin1_model(2.0)
    h = _cd_driven(model, 1.0)
    psi0 = eigenframe(model.h0(0.0)).vectors[:, 0]
    drift = propagate(h, psi0, uniform_grid(0.0, 1.0, 10_000)).norm_drift.max()
    coarse = uniform_grid(0.0, 1.0, 200)
    finals = [propagate(model.h0, psi0, grid).final for grid in (coarse, refine(coarse), refine(refine(coarse)))]
    order = np.log2(np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2]))
    return [
        at_most("norm drift per 1e4 steps", drift, 1e-10),
        at_most("convergence order |p - 2|", abs(order - 2.0), 0.2),
    ]


def oscillator_checks(tol: Tolerances, scale: float) -> list[Check]:
    model = oscillator_model(T=0.3, omega0=1.0, N=64)
    times = model_grid(model)
    loss = _ground_fidelity_loss(model, _cd_driven(model, scale), times, tail_guard=tol.tail_guard)
    h_local = model.extras["h_local"]
    overlaps = []
    for t in np.linspace(*model.domain, 61):
        w, _, _, wp = oscillator_schedule(t, model.params["T"], model.params["omega0"])
        g, gp = eigenframe(model.h0(t)).vectors[:, 0], eigenframe(h_local(t)).vectors[:, 0]
        overlaps.append((fidelity(g, gp), gaussian_overlap(w, wp)))
    overlaps = np.array(overlaps)
    return [
        at_most("oscillator CD fidelity loss", loss, 1e-3),
        at_most("oscillator ground-state overlap formula", np.max(np.abs(overlaps[:, 0] - overlaps[:, 1])), 1e-4),
        at_most("oscillator overlap = 1 at endpoints", max(abs(1 - overlaps[0, 0]), abs(1 - overlaps[-1, 0])), 1e-6),
    ]


def trap_checks(tol: Tolerances, scale: float, N: int = 64) -> list[Check]:
    checks = []
    for variant in ("nonlocal", "local"):
        model = moving_trap_model(N=N, variant=variant)
        times = model_grid(model)
        h = (lambda m: (lambda t: m.h0(t) + scale * m.cd_analytic(t)))(model)
        start, end = (eigenframe(model.h0(t), time=t).vectors[:, 0] for t in model.domain)
        traj = propagate(h, start, times, tail_guard=tol.tail_guard)
        loss = 1.0 - fidelity(end, traj.final)
        checks.append(at_most(f"moving trap {variant} final fidelity loss N={N}", loss, tol.transitionless))
    return checks


def _guarded(builder: Callable[[], list[Check]], name: str) -> list[Check]:
    try:
        return builder()
    except CDError as exc:
        return [Check(f"{name} ({type(exc).__name__}: {exc})", float("nan"), 0.0, False, "ok")]


def verify(suite: str = "fast", tol: Tolerances = DEFAULT, inject_cd_scale: float = 1.0) -> VerifyReport:
    """Run a suite; ``inject_cd_scale`` rescales every propagated CD term (defect probe)."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    start = time.perf_counter()
    scale = float(inject_cd_scale)
    fock_n = 64 if suite == "all" else 32
    groups = [
        ("spin1 transitionless", lambda: spin1_transitionless(tol, scale)),
        ("spin1 populations", lambda: spin1_populations(tol, scale)),
        ("CD routes", lambda: route_checks(tol, 100 if suite == "all" else 40)),
        ("CD identities", lambda: identity_checks(
            tol, [spin1_model(2.0), spin2_model(), oscillator_model(N=fock_n), moving_trap_model(N=fock_n)])),
        ("spin2", lambda: spin2_checks(tol, scale)),
        ("invariant", lambda: invariant_checks(tol, scale)),
        ("Berry phase", berry_checks),
        ("integrator", lambda: integrator_checks(tol)),
    ]
    if suite == "all":
        groups += [
            ("oscillator", lambda: oscillator_checks(tol, scale)),
            ("moving trap", lambda: trap_checks(tol, scale)),
        ]
    report = VerifyReport(suite)
    for name, builder in groups:
        report.checks.extend(_guarded(builder, name))
    report.elapsed = time.perf_counter() - start
    return report
