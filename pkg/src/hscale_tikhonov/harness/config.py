"""Experiment configuration and its TOML representation.

Every table and key is optional; missing entries take the defaults of the
dataclasses below.  Example::

    [problem]
    kind = "linear-integration"
    n = 256

    [indices]
    a = 1.0
    s = 0.0
    u = 1.0

    [noise]
    deltas = [1e-2, 1e-3, 1e-4]

    [rule]
    name = "apriori-det"
"""

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional, Union

from ..errors import InvalidIndicesError, InvalidParameterError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ProblemSpec",
    "TruthSpec",
    "IndexSpec",
    "IndexFunctionSpec",
    "NoisePlan",
    "RuleSpec",
    "SolverSpec",
    "OutputSpec",
    "ExperimentConfig",
    "load_config",
]

RULES = ("apriori-det", "lepskij", "apriori-stoch")


@dataclass
class ProblemSpec:
    kind: str = "linear-integration"
    n: int = 256
    T: float = 1.0
    c0: float = 1.0
    c1: float = 1.0
    domain: str = "full"


@dataclass
class TruthSpec:
    """``profile`` is ``"auto"`` (chosen by operator kind), ``"spectral"``,
    ``"constant"``, ``"sine"`` or ``"values"`` (then ``values`` is used)."""

    profile: str = "auto"
    seed: int = 0
    values: Optional[List[float]] = None


@dataclass
class IndexSpec:
    a: float = 1.0
    s: float = 0.0
    u: float = 1.0


@dataclass
class IndexFunctionSpec:
    kind: str = "hoelder"
    gamma: float = 1.0
    mu: float = 1.0


@dataclass
class NoisePlan:
    deltas: List[float] = field(default_factory=lambda: [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5])
    sigmas: List[float] = field(default_factory=lambda: [0.0])
    replications: int = 1
    base_seed: int = 0
    xi: Union[str, List[float]] = "rough"
    v_index: float = 1.0


@dataclass
class RuleSpec:
    """``alpha_scale`` multiplies the a priori parameter (the rules fix it only up to a constant)."""

    name: str = "apriori-det"
    r: float = 2.0
    theta: float = 0.5
    alpha_scale: float = 1.0


@dataclass
class SolverSpec:
    """``initial_guess = "auto"`` starts from zero, except for autoconvolution
    (where zero is a stationary point) which starts from the constant 1/2."""

    max_outer_iterations: int = 100
    gradient_tolerance: float = 1e-10
    inner_tolerance: float = 1e-12
    initial_guess: Union[str, float] = "auto"
    multistart: int = 0
    multistart_seed: int = 0


@dataclass
class OutputSpec:
    csv: str = ""
    plot: str = ""


@dataclass
class ExperimentConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    truth: TruthSpec = field(default_factory=TruthSpec)
    indices: IndexSpec = field(default_factory=IndexSpec)
    index_function: IndexFunctionSpec = field(default_factory=IndexFunctionSpec)
    noise: NoisePlan = field(default_factory=NoisePlan)
    rule: RuleSpec = field(default_factory=RuleSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        a, s, u = self.indices.a, self.indices.s, self.indices.u
        if not (a >= 0 and 0 <= s < u <= 2 * s + a and -a < s):
            raise InvalidIndicesError(
                f"indices must satisfy a >= 0, 0 <= s < u <= 2s + a, got a={a}, s={s}, u={u}")
        if self.rule.name not in RULES:
            raise InvalidParameterError(f"unknown rule {self.rule.name!r}; expected one of {RULES}")
        if self.rule.name == "lepskij" and not self.rule.r > 1:
            raise InvalidParameterError("the balancing principle needs r > 1")
        if self.rule.name == "apriori-stoch" and not 0 < self.rule.theta < 1:
            raise InvalidParameterError("theta must lie in (0, 1)")
        noise = self.noise
        if any(d < 0 for d in noise.deltas) or any(x < 0 for x in noise.sigmas):
            raise InvalidParameterError("noise levels must be nonnegative")
        if not noise.deltas or not noise.sigmas or noise.replications < 1:
            raise InvalidParameterError("noise plan needs at least one delta, sigma and replication")
        if self.workers < 1:
            raise InvalidParameterError("workers must be >= 1")

    def with_updates(self, **tables) -> "ExperimentConfig":
        """Copy with some tables replaced, e.g. ``with_updates(rule=RuleSpec(...))``."""
        return replace(self, **tables)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kwargs = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            value = data[f.name]
            sub = f.default_factory if f.default_factory is not None else None  # type: ignore[misc]
            if isinstance(value, dict) and sub is not None:
                table_cls = type(sub())
                known = {tf.name for tf in fields(table_cls)}
                unknown = set(value) - known
                if unknown:
                    raise KeyError(f"unknown keys in [{f.name}]: {sorted(unknown)}")
                kwargs[f.name] = table_cls(**value)
            else:
                kwargs[f.name] = value
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise KeyError(f"unknown configuration tables: {sorted(unknown)}")
        return cls(**kwargs)


def load_config(path) -> ExperimentConfig:
    """Read an :class:`ExperimentConfig` from a TOML file."""
    with Path(path).open("rb") as fh:
        return ExperimentConfig.from_dict(tomllib.load(fh))
