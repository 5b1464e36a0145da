"""Experiment manifests.

Manifests are INI files (``key = value`` under ``[section]`` headers)::

    [topology]
    kind = circulant        ; fixed-file | circulant | periodic-tight | random
    learners = 8
    degree = 4

    [run]
    horizon = 100000
    replicates = 1
    seed = 0
    init = constant:1.0     ; uniform | constant:<v> | comma-separated learner values
    truth_position = 0
    ratio = 1.25

    [output]
    dir = out/circulant

Command-line flags override file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from confidyn.errors import InvalidParameterError

TOPOLOGIES = ("fixed-file", "circulant", "periodic-tight", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "circulant"
    learners: int | None = None
    degree: int | None = None
    period: int | None = None
    n: int | None = None
    m: int | None = None
    graph: str | None = None
    truth: int = 0
    horizon: int = 100_000
    replicates: int = 1
    seed: int = 0
    init: str = "uniform"
    truth_position: float = 0.0
    ratio: float = 1.25
    fit_lo: int | None = None
    fit_hi: int | None = None
    out: str = "out"

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise InvalidParameterError(f"unknown topology {self.topology!r}; expected one of {TOPOLOGIES}")
        if self.replicates < 1:
            raise InvalidParameterError(f"replicates must be >= 1, got {self.replicates}")
        if self.horizon < 1:
            raise InvalidParameterError(f"horizon must be >= 1, got {self.horizon}")
        if self.seed < 0:
            raise InvalidParameterError(f"seed must be nonnegative, got {self.seed}")
        if self.ratio <= 1:
            raise InvalidParameterError(f"ratio must exceed 1, got {self.ratio}")
        need = {
            "fixed-file": ("graph",),
            "circulant": ("learners", "degree"),
            "periodic-tight": ("learners", "degree", "period"),
            "random": ("n", "m"),
        }[self.topology]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise InvalidParameterError(f"topology {self.topology} needs {', '.join(missing)}")
        if self.topology == "random" and not 1 <= self.m <= self.n:
            raise InvalidParameterError(f"random topology needs 1 <= m <= n, got m={self.m}, n={self.n}")
        parse_init(self.init)

    def fit_window(self) -> tuple[int, int] | None:
        if self.fit_lo is None and self.fit_hi is None:
            return None
        hi = self.fit_hi if self.fit_hi is not None else self.horizon
        lo = self.fit_lo if self.fit_lo is not None else max(1, hi // 100)
        return lo, hi

    def with_overrides(self, **kwargs) -> ExperimentConfig:
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def parse_init(spec: str):
    """Return ``("uniform", None)``, ``("constant", v)`` or ``("list", [...])``."""
    s = spec.strip()
    if s == "uniform":
        return "uniform", None
    if s.startswith("constant:"):
        try:
            return "constant", float(s.split(":", 1)[1])
        except ValueError:
            raise InvalidParameterError(f"bad constant init {spec!r}") from None
    try:
        values = [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise InvalidParameterError(f"bad init {spec!r}") from None
    if not values:
        raise InvalidParameterError("empty init list")
    return "list", values


_INT_KEYS = {"learners", "degree", "period", "n", "m", "truth", "horizon", "replicates", "seed", "fit_lo", "fit_hi"}
_FLOAT_KEYS = {"truth_position", "ratio"}
_SECTION_KEYS = {
    "topology": {"kind", "learners", "degree", "period", "n", "m", "graph", "truth"},
    "run": {"horizon", "replicates", "seed", "init", "truth_position", "ratio", "fit_lo", "fit_hi"},
    "output": {"dir"},
}


def read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    path = Path(path)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise InvalidParameterError(f"{path}: {exc}") from None
    return parser


def _convert(key: str, raw: str):
    raw = raw.strip()
    if raw == "":
        return None
    try:
        if key in _INT_KEYS:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise InvalidParameterError(f"bad value for {key}: {raw!r}") from None
    return raw


def load_experiment(path) -> ExperimentConfig:
    parser = read_ini(path)
    values: dict = {}
    for section in parser.sections():
        allowed = _SECTION_KEYS.get(section)
        if allowed is None:
            raise InvalidParameterError(f"unknown section [{section}] in {path}")
        for key, raw in parser.items(section):
            if key not in allowed:
                raise InvalidParameterError(f"unknown key {key!r} in [{section}]")
            name = {"kind": "topology", "dir": "out"}.get(key, key)
            value = _convert(key, raw)
            if value is not None:
                values[name] = value
    if "graph" in values:
        values["graph"] = str(Path(path).parent / values["graph"])
    return ExperimentConfig(**values)


@dataclass(frozen=True)
class BWRConfig:
    graph: str = "star"
    steps: int = 10
    replicates: int = 10_000
    seed: int = 0
    signal_tau: float = 1.0
    prior_tau: float = 1.0
    truth_value: float = 0.0
    init: list = field(default_factory=lambda: [1.0, -1.0])
    out: str = "out/bwr"

    def __post_init__(self):
        if self.steps < 1 or self.replicates < 1:
            raise InvalidParameterError("steps and replicates must be >= 1")
        if self.signal_tau <= 0:
            raise InvalidParameterError(f"signal_tau must be positive, got {self.signal_tau}")
        if self.prior_tau <= 0:
            raise InvalidParameterError("prior_tau must be positive: learners with zero precision cannot emit signals")


@dataclass(frozen=True)
class BanditConfig:
    theta: list = field(default_factory=lambda: [0.0, 1.0])
    sigma: float = 1.0
    horizon: int = 100
    replicates: int = 10_000
    seed: int = 0
    out: str = "out/bandit"

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidParameterError("replicates must be >= 1")
        if self.horizon < len(self.theta):
            raise InvalidParameterError("horizon must cover every arm once")


def _floats(raw: str) -> list:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise InvalidParameterError(f"bad number list {raw!r}") from None


def load_bwr(path) -> BWRConfig:
    parser = read_ini(path)
    kw: dict = {}
    if parser.has_section("bwr"):
        sec = parser["bwr"]
        for key in ("steps", "replicates", "seed"):
            if key in sec:
                kw[key] = int(sec[key])
        for key in ("signal_tau", "prior_tau", "truth_value"):
            if key in sec:
                kw[key] = float(sec[key])
        if "graph" in sec:
            g = sec["graph"].strip()
            kw["graph"] = g if g == "star" or Path(g).is_absolute() else str(Path(path).parent / g)
        if "init" in sec:
            kw["init"] = _floats(sec["init"])
    if parser.has_section("output") and "dir" in parser["output"]:
        kw["out"] = parser["output"]["dir"]
    return BWRConfig(**kw)


def load_bandit(path) -> BanditConfig:
    parser = read_ini(path)
    kw: dict = {}
    if parser.has_section("bandit"):
        sec = parser["bandit"]
        for key in ("horizon", "replicates", "seed"):
            if key in sec:
                kw[key] = int(sec[key])
        if "sigma" in sec:
            kw["sigma"] = float(sec["sigma"])
        if "theta" in sec:
            kw["theta"] = _floats(sec["theta"])
    if parser.has_section("output") and "dir" in parser["output"]:
        kw["out"] = parser["output"]["dir"]
    return BanditConfig(**kw)
