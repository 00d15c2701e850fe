"""Run configuration: TOML sections mapped onto dataclasses, validated strictly.

Every section is a dataclass; keys not declared there are rejected. Options
specific to one subcommand live in a section named after it, e.g. ``[supconv]``.
"""

from __future__ import annotations

import dataclasses
import math
import sys
import typing
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .domain import GridError, build_grid
from .ergodic import DEFAULT_LAMBDAS
from .expr import Expression, ExpressionError
from .parabolic import ProblemError, check_exponents


class ConfigError(ValueError):
    pass


@dataclass
class ProblemConfig:
    domain: str = "interval:0:1"
    n: int = 256
    p: float = 2.0
    q: float = 3.0
    lam: float = 1.0
    f: str = "0"
    g: str = "0"
    u0: str = "0"
    T: float = 1.0


@dataclass
class ControlConfig:
    sigma: float = 0.5
    g_cap: typing.Optional[float] = None
    snapshot_dt: typing.Optional[float] = None
    max_steps: int = 50_000_000
    tol: typing.Optional[float] = None
    lambdas: list = field(default_factory=lambda: list(DEFAULT_LAMBDAS))


@dataclass
class OutputConfig:
    dir: str = "out"
    prefix: str = ""


@dataclass
class ParabolicOptions:
    pass


@dataclass
class StationaryOptions:
    state_constraint: bool = False
    M2: typing.Optional[float] = None


@dataclass
class ErgodicOptions:
    x0: typing.Optional[int] = None
    M2: typing.Optional[float] = None


@dataclass
class BarrierOptions:
    C: float = 1.0
    delta: typing.Optional[float] = None
    dim: int = 2
    sample_count: int = 4000


@dataclass
class SupconvOptions:
    input: str = ""
    alpha: float = 0.5


@dataclass
class HolderOptions:
    input: str = ""
    beta: typing.Optional[float] = None


@dataclass
class SlopeOptions:
    input: str = ""
    window_fraction: float = 0.5


@dataclass
class CompareOptions:
    count: int = 50


@dataclass
class AcceptanceOptions:
    only: list = field(default_factory=list)


OPTIONS = {
    "solve-parabolic": ParabolicOptions,
    "solve-stationary": StationaryOptions,
    "ergodic": ErgodicOptions,
    "verify-barrier": BarrierOptions,
    "supconv": SupconvOptions,
    "holder": HolderOptions,
    "slope": SlopeOptions,
    "compare": CompareOptions,
    "acceptance": AcceptanceOptions,
}


@dataclass
class RunConfig:
    command: str
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    options: object = None
    seed: int = 0

    def as_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed,
                "problem": dataclasses.asdict(self.problem),
                "control": dataclasses.asdict(self.control),
                "output": dataclasses.asdict(self.output),
                self.command: dataclasses.asdict(self.options)}


def _coerce(section: str, key: str, hint, value):
    where = f"[{section}].{key}"
    optional = typing.get_origin(hint) is typing.Union
    if optional:
        if value is None:
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where} must be a number, got a boolean")
    if hint is int:
        if not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if hint is float:
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{where} must be a finite number")
        return float(value)
    if hint is str:
        if isinstance(value, (int, float)):
            return str(value)
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if hint is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return value
    raise ConfigError(f"{where}: unsupported type")


def _fill(cls, section: str, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"[{section}] must be a table")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    return cls(**{k: _coerce(section, k, hints[k], v) for k, v in data.items()})


def from_mapping(command: str, data: dict, seed: int = 0) -> RunConfig:
    if command not in OPTIONS:
        raise ConfigError(f"unknown subcommand {command!r}")
    allowed = {"problem", "control", "output", command}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown section(s) for {command}: {', '.join(unknown)}")
    cfg = RunConfig(command=command,
                    problem=_fill(ProblemConfig, "problem", data.get("problem", {})),
                    control=_fill(ControlConfig, "control", data.get("control", {})),
                    output=_fill(OutputConfig, "output", data.get("output", {})),
                    options=_fill(OPTIONS[command], command, data.get(command, {})),
                    seed=seed)
    validate(cfg)
    return cfg


def load(path, command: str, overrides: dict | None = None, seed: int = 0) -> RunConfig:
    data = {}
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        data.setdefault(section, {})[key] = value
    return from_mapping(command, data, seed)


def parse_override(text: str) -> tuple[str, object]:
    """``section.key=value`` with the value read as a TOML scalar or list."""
    key, sep, raw = text.partition("=")
    if not sep:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip(), value


def validate(cfg: RunConfig) -> None:
    pr, ct = cfg.problem, cfg.control
    try:
        check_exponents(pr.p, pr.q)
    except ProblemError as exc:
        raise ConfigError(str(exc)) from None
    if pr.n < 2:
        raise ConfigError("[problem].n must be at least 2")
    if not pr.T > 0:
        raise ConfigError("[problem].T must be positive")
    if not pr.lam > 0:
        raise ConfigError("[problem].lam must be positive")
    try:
        build_grid(pr.domain, max(pr.n, 4))
    except (GridError, ValueError) as exc:
        raise ConfigError(f"[problem].domain: {exc}") from None
    for key in ("f", "g", "u0"):
        try:
            Expression(getattr(pr, key))
        except ExpressionError as exc:
            raise ConfigError(f"[problem].{key}: {exc}") from None
    if not 0 < ct.sigma <= 1:
        raise ConfigError("[control].sigma must lie in (0, 1]")
    lams = ct.lambdas
    if not lams or any(isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0
                       for v in lams) or any(b >= a for a, b in zip(lams, lams[1:])):
        raise ConfigError("[control].lambdas must be positive and strictly decreasing")
    opts = cfg.options
    if cfg.command in ("supconv", "holder", "slope") and not opts.input:
        raise ConfigError(f"[{cfg.command}].input is required")
    if cfg.command == "supconv" and not 0 < opts.alpha <= 1:
        raise ConfigError("[supconv].alpha must lie in (0, 1]")
    if cfg.command == "slope" and not 0 < opts.window_fraction < 1:
        raise ConfigError("[slope].window_fraction must lie in (0, 1)")
    if cfg.command == "verify-barrier":
        if opts.dim not in (1, 2) or opts.sample_count < 1000:
            raise ConfigError("[verify-barrier] needs dim in {1, 2} and sample_count >= 1000")
        if opts.delta is not None and not opts.delta > 0:
            raise ConfigError("[verify-barrier].delta must be positive")
    if cfg.command == "acceptance" and any(k not in range(1, 12) for k in opts.only):
        raise ConfigError("[acceptance].only lists criterion numbers 1..11")
