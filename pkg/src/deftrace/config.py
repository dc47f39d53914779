"""Run configuration shared by the CLI and the acceptance suite."""

import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .scanner import GridSpec

OUT_ENV = "DEFTRACE_OUT"
DEFAULT_OUT = "deftrace-out"

DEFAULT_GRIDS = {
    "phi": "0:3:13,-2:2:13",
    "upsilon": "-1:2:13,-2:3:11",
}


@dataclass(frozen=True)
class Tolerances:
    """Every tolerance in one place; each is exposed as ``--tol.<name>``."""

    #: relative, scalar identities (round trip, exponent identities)
    scalar: float = 1e-9
    #: relative, matrix identities (three forms of phi, batch kernel)
    matrix: float = 1e-8
    #: relative, Richardson-extrapolated derivative checks
    derivative: float = 1e-9
    #: Young defect, times (Tr A + Tr B)
    young: float = 1e-9
    #: relative crossing of the variational bound by any iterate
    variational: float = 1e-6
    #: relative, objective at X = Y versus the analytic value
    equality: float = 1e-10
    #: absolute floor on the relative-entropy gap, times the trace scale
    entropy: float = 1e-10
    #: midpoint defect, times (1 + |f(A1)| + |f(A2)|)
    midpoint: float = 1e-8
    #: block embedding, relative
    embed: float = 1e-9
    #: counterexample threshold, times the value scale
    search: float = 1e-6
    #: counterexample recomputation agreement, times the value scale
    reverify: float = 1e-8

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ConfigError(f"tolerance {f.name} must be positive")

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    dims: tuple = (2, 3, 4)
    trials: int = 200
    tolerances: Tolerances = field(default_factory=Tolerances)
    out_dir: str = None
    grid: str = None
    target: str = "phi"

    def __post_init__(self):
        if self.trials <= 0:
            raise ConfigError("trials must be positive")
        if not self.dims or any(int(d) < 1 for d in self.dims):
            raise ConfigError("dims must be positive integers")
        if self.target not in DEFAULT_GRIDS:
            raise ConfigError(f"target must be one of {sorted(DEFAULT_GRIDS)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            self.grid_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def output_dir(self):
        return self.out_dir or os.environ.get(OUT_ENV, DEFAULT_OUT)

    def grid_spec(self):
        return GridSpec.parse(self.grid or DEFAULT_GRIDS[self.target])
