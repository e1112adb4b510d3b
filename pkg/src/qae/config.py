"""Run configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

TOPOLOGIES = ("complete", "grid-like")
DECOMPOSERS = ("perturbation", "energy-impact")
LAMBDA_UPDATES = ("best", "repeat")
SIGMA_SCHEDULES = ("repeat", "sweep")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Workflow parameters for one QAE run.

    ``K``, ``gamma`` and ``total_repeats`` default to the 9x9 setting; use
    :meth:`for_dim` for the per-size defaults.
    """

    K: int = 10
    gamma: int = 3
    total_repeats: int = 30
    reads_per_anneal: int = 1000
    chain_strength_factor: float = 0.9
    topology: str = "complete"
    topology_size: int = 0
    seed: int = 0
    precision_target: float = 1e-5
    decomposer: str = "perturbation"
    local_search: bool = False
    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    lambda_update: str = "best"
    sigma_schedule: str = "repeat"
    early_exit: bool = False

    def __post_init__(self):
        for name in ("K", "gamma", "total_repeats", "reads_per_anneal", "sweeps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not 0.5 <= self.chain_strength_factor <= 2.0:
            raise ConfigError("chain_strength_factor must lie in [0.5, 2.0]")
        if self.topology_size < 0:
            raise ConfigError("topology_size must be >= 0 (0 picks a size automatically)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.precision_target > 0:
            raise ConfigError("precision_target must be positive")
        if not 0 < self.beta_start < self.beta_end:
            raise ConfigError("need 0 < beta_start < beta_end")
        for name, allowed in (
            ("topology", TOPOLOGIES),
            ("decomposer", DECOMPOSERS),
            ("lambda_update", LAMBDA_UPDATES),
            ("sigma_schedule", SIGMA_SCHEDULES),
        ):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")

    @classmethod
    def for_dim(cls, dim: int, **overrides) -> "RunConfig":
        """Defaults for a ``dim``-sized matrix: 9 -> (gamma 3, 30 Repeats), 16 -> (4, 45)."""
        if dim >= 16:
            base = {"gamma": 4, "total_repeats": 45}
        else:
            base = {"gamma": min(3, dim), "total_repeats": 30}
        base.update(overrides)
        return cls(**base)

    def validate_for(self, dim: int) -> None:
        if self.gamma > dim:
            raise ConfigError(f"gamma={self.gamma} exceeds the basis size {dim}")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = type(getattr(RunConfig(), name))
    if kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    base = base or RunConfig()
    return base.replace(**values)


def load_config(path, dim: int | None = None) -> RunConfig:
    """Read a config file; keys absent from the file take the defaults for ``dim``."""
    base = RunConfig.for_dim(dim) if dim is not None else RunConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name, value in cfg.as_dict().items():
        lines.append(f"{name} = {str(value).lower() if isinstance(value, bool) else value}")
    return "\n".join(lines) + "\n"
