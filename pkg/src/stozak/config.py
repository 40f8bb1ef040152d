"""Run configuration: strict JSON schema, dataclass-backed.

Unknown keys are rejected at every level; the fully resolved config is
embedded in all outputs so a run can be reproduced from its artifacts alone.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Schema violation; the CLI maps this to exit code 2."""


def _take(d: dict, cls, what: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}; "
                          f"allowed: {sorted(allowed)}")
    return cls(**d)


@dataclass(frozen=True)
class GridSpec:
    n: int = 32
    length: float = 8.0 * math.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ConfigError(f"grid.n must be a power of two >= 4, got {self.n}")


@dataclass(frozen=True)
class IntegratorSpec:
    dt: float = 2e-3
    scheme: str = "strang_split"
    dealias: bool = True
    K: int = 32
    threshold_factor: float = 50.0
    use_real_part: bool = True
    save_every: int = 10

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("integrator.dt must be positive")
        if self.scheme not in ("strang_split", "lawson_rk4", "euler_maruyama"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.K < 32 or (self.K & (self.K - 1)) != 0:
            raise ConfigError("integrator.K must be a dyadic integer >= 32")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "zero"  # zero | gaussian | nonconservative
    n_schrodinger: int = 4
    n_wave: int = 2
    amplitude: float = 0.1
    wave_amplitude: float = 0.05
    width: float = 2.0
    im_phi: float = 0.0
    re_phi: float = 0.0
    synthetic_rates: tuple = ()  # nonempty: deterministic beta_k(t) = rate_k t

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian", "nonconservative"):
            raise ConfigError(f"unknown noise.kind {self.kind!r}")
        object.__setattr__(self, "synthetic_rates", tuple(self.synthetic_rates))


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "gaussian"  # gaussian | ground_state_fraction
    amplitude: float = 0.6
    width: float = 3.0
    fraction: float = 0.5
    well_prepared: bool = True
    momentum: tuple = ()

    def __post_init__(self):
        if self.kind not in ("gaussian", "ground_state_fraction"):
            raise ConfigError(f"unknown initial.kind {self.kind!r}")
        object.__setattr__(self, "momentum", tuple(self.momentum))


@dataclass(frozen=True)
class McSpec:
    im_phi_levels: tuple = (0.0, 5.0, 20.0)
    trajectories_per_level: int = 100

    def __post_init__(self):
        object.__setattr__(self, "im_phi_levels", tuple(self.im_phi_levels))
        if self.trajectories_per_level < 1:
            raise ConfigError("mc.trajectories_per_level must be >= 1")


@dataclass(frozen=True)
class EquivalenceSpec:
    dt_ladder: tuple = (0.02, 0.01, 0.005)
    K_pair: tuple = (32, 64)
    T: float = 0.2
    amplitude: float = 0.1
    synthetic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "dt_ladder", tuple(self.dt_ladder))
        object.__setattr__(self, "K_pair", tuple(self.K_pair))


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "deterministic-small"
    grid: GridSpec = field(default_factory=GridSpec)
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    T: float = 1.0
    seed: int = 0
    trajectories: int = 1
    alpha: float = 1.0
    output_dir: str = ""
    mc: McSpec = field(default_factory=McSpec)
    equivalence: EquivalenceSpec = field(default_factory=EquivalenceSpec)
    subsonic_alphas: tuple = (1.0, 2.0, 4.0, 8.0)

    SCENARIOS = ("deterministic-small", "below-threshold", "blowup-nls",
                 "blowup-zakharov", "pathwise", "nonconservative")

    def __post_init__(self):
        object.__setattr__(self, "subsonic_alphas", tuple(self.subsonic_alphas))
        if self.trajectories < 1:
            raise ConfigError("trajectories must be >= 1")
        if self.T <= 0:
            raise ConfigError("T must be positive")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        sub = {
            "grid": (GridSpec, "grid"),
            "integrator": (IntegratorSpec, "integrator"),
            "noise": (NoiseSpec, "noise"),
            "initial": (InitialSpec, "initial"),
            "mc": (McSpec, "mc"),
            "equivalence": (EquivalenceSpec, "equivalence"),
        }
        kw = {}
        for key, (klass, what) in sub.items():
            if key in raw:
                block = raw.pop(key)
                if not isinstance(block, dict):
                    raise ConfigError(f"{what} must be an object")
                kw[key] = _take(block, klass, what)
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        kw.update(raw)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def resolved_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def sha256(self) -> str:
        return hashlib.sha256(self.resolved_json().encode()).hexdigest()[:16]
