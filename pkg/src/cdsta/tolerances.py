"""Default numerical tolerances.

Every threshold used by the engine lives here so that the CLI can override
them in one place.
"""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    unitary: float = 1e-10
    orthonormal: float = 1e-10
    eig_residual: float = 1e-10
    degeneracy: float = 1e-8
    asymmetry_warn: float = 1e-6
    asymmetry_fail: float = 1e-4
    tikhonov: float = 1e-12
    cd_identity: float = 1e-8
    cd_defect: float = 1e-6
    norm_abort: float = 1e-6
    tail_guard: float = 1e-8
    transitionless: float = 1e-6

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


DEFAULT = Tolerances()
