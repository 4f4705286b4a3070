"""Scenario execution and CSV serialization used by the command line."""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import cdrive
from .dynamics import bloch_vector, fidelity, model_grid, propagate, uniform_grid
from .errors import RejectedInput
from .hamiltonians import ModelSpec, build_model
from .operators import PAULI, eigenframes
from .tolerances import DEFAULT, Tolerances

SCENARIOS = ("spin1", "spin2", "oscillator", "moving_trap")
CD_MODES = ("none", "exact-spectral", "exact-matrix-element", "gauge", "variational", "analytic")
STEPS_PER_UNIT = 4000

# scenario defaults; "T" is the adiabaticity parameter for spin1/oscillator,
# the half-window for spin2 and the transport duration for moving_trap
DEFAULTS = {
    "spin1": {"T": 2.0},
    "spin2": {"T": 2.0, "v": 5.0},
    "oscillator": {"T": 0.3, "omega0": 1.0, "fock_dim": 64},
    "moving_trap": {"T": 2.0, "omega0": 1.0, "fock_dim": 64},
}


@dataclass
class RunConfig:
    scenario: str = "spin1"
    cd: str = "analytic"
    T: Optional[float] = None
    v: Optional[float] = None
    omega0: Optional[float] = None
    fock_dim: Optional[int] = None
    steps: Optional[int] = None
    trap_cd: str = "nonlocal"
    out: Optional[str] = None
    inject_cd_scale: float = 1.0
    tolerances: dict = field(default_factory=dict)

    def resolved(self) -> "RunConfig":
        """Copy with scenario defaults filled in and every field validated."""
        if self.scenario not in SCENARIOS:
            raise RejectedInput(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.cd not in CD_MODES:
            raise RejectedInput(f"unknown cd mode {self.cd!r}; choose from {CD_MODES}")
        if self.trap_cd not in ("nonlocal", "local"):
            raise RejectedInput(f"trap_cd must be 'nonlocal' or 'local', got {self.trap_cd!r}")
        values = asdict(self)
        for key, default in DEFAULTS[self.scenario].items():
            if values.get(key) is None:
                values[key] = default
        cfg = RunConfig(**values)
        for name in ("T", "v", "omega0"):
            val = getattr(cfg, name)
            if val is not None and not val > 0:
                raise RejectedInput(f"{name} must be positive, got {val}")
        if cfg.fock_dim is not None and cfg.fock_dim < 8:
            raise RejectedInput(f"fock_dim must be at least 8, got {cfg.fock_dim}")
        if cfg.steps is not None and cfg.steps < 100:
            raise RejectedInput(f"steps must be at least 100, got {cfg.steps}")
        DEFAULT.with_overrides(**cfg.tolerances)
        return cfg

    def canonical(self) -> str:
        """Stable ``key=value`` serialization (sorted keys, ``;``-separated)."""
        items = asdict(self)
        tols = items.pop("tolerances")
        items.update({f"tol_{k}": v for k, v in tols.items()})
        items.pop("out")
        return ";".join(f"{k}={_fmt_value(items[k])}" for k in sorted(items) if items[k] is not None)

    def tol(self) -> Tolerances:
        return DEFAULT.with_overrides(**self.tolerances)


def _fmt_value(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def build_scenario(cfg: RunConfig) -> ModelSpec:
    cfg = cfg.resolved()
    if cfg.scenario == "spin1":
        return build_model("spin1", T=cfg.T)
    if cfg.scenario == "spin2":
        return build_model("spin2", v=cfg.v, T=cfg.T)
    if cfg.scenario == "oscillator":
        return build_model("oscillator", T=cfg.T, omega0=cfg.omega0, N=cfg.fock_dim)
    return build_model("moving_trap", omega=cfg.omega0, N=cfg.fock_dim, duration=cfg.T, variant=cfg.trap_cd)


def cd_function(model: ModelSpec, mode: str, tol: Tolerances = DEFAULT):
    """``t -> H1(t)`` for the chosen route, or ``None`` for bare driving."""
    if mode == "none":
        return None
    if mode == "analytic":
        if model.cd_analytic is None:
            raise RejectedInput(f"model {model.name!r} has no analytic CD term")
        return model.cd_analytic
    if mode == "exact-spectral":
        return lambda t: cdrive.cd_spectral(model, t, tol=tol)
    if mode == "exact-matrix-element":
        return lambda t: cdrive.cd_matrix_element(model, t, tol)
    if mode == "gauge":
        if model.gauge is None:
            raise RejectedInput(f"model {model.name!r} has no gauge path")
        return lambda t: cdrive.cd_gauge_model(model, t, tol=tol)
    if mode == "variational":
        basis = cdrive.default_variational_basis(model)
        return lambda t: cdrive.cd_variational(model, t, basis, tol).operator()
    raise RejectedInput(f"unknown cd mode {mode!r}")


def total_hamiltonian(model: ModelSpec, mode: str, scale: float = 1.0, tol: Tolerances = DEFAULT):
    h1 = cd_function(model, mode, tol)
    if h1 is None:
        return model.h0
    return lambda t: model.h0(t) + scale * h1(t)


@dataclass
class RunResult:
    config: RunConfig
    header: list
    rows: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.header.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        buf.write(",".join(self.header) + "\n")
        buf.write(f"# config: {self.config.canonical()}\n")
        for row in self.rows:
            buf.write(",".join(format(float(x), ".17g") for x in row) + "\n")
        return buf.getvalue()

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())
        return path


def run(cfg: RunConfig) -> RunResult:
    """Propagate the scenario's initial eigenstate and collect per-step diagnostics."""
    cfg = cfg.resolved()
    tol = cfg.tol()
    model = build_scenario(cfg)
    if cfg.steps is None:
        times = model_grid(model, STEPS_PER_UNIT)
    else:
        times = uniform_grid(*model.domain, cfg.steps)
    h_total = total_hamiltonian(model, cfg.cd, cfg.inject_cd_scale, tol)
    frames0 = eigenframes(model.h0, times)
    psi0 = frames0[0].vectors[:, model.initial_level]
    traj = propagate(h_total, psi0, times, norm_abort=tol.norm_abort,
                     tail_guard=tol.tail_guard if model.fock else None)
    vecs = np.array([f.vectors for f in frames0])
    pops = np.abs(np.einsum("kin,ki->kn", vecs.conj(), traj.states)) ** 2
    frames_total = eigenframes(h_total, times)
    level = model.initial_level
    fid_total = np.array([fidelity(f.vectors[:, level], s) for f, s in zip(frames_total, traj.states)])
    header = ["t"] + [f"p_{n}" for n in range(model.dim)] + ["fidelity_total", "norm_drift"]
    columns = [times[:, None], pops, fid_total[:, None], traj.norm_drift[:, None]]
    if model.dim == 2:
        bloch = np.array([bloch_vector(s) for s in traj.states])
        field_vec = np.array([[np.trace(h_total(t) @ s).real for s in PAULI] for t in times])
        amp = np.linalg.norm(field_vec, axis=1)
        amp_norm = amp / amp[0] if amp[0] > 0 else np.full_like(amp, np.nan)
        header += ["bloch_x", "bloch_y", "bloch_z", "field_x", "field_y", "field_z", "field_amp_norm"]
        columns += [bloch, field_vec, amp_norm[:, None]]
    return RunResult(cfg, header, np.hstack(columns))
