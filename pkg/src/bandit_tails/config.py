"""Experiment configuration files (YAML).

Example::

    env: [ber(0.6), ber(0.5)]
    class:                    # needed by gcl / gclb
      - [ber(0.6), ber(0.5)]
      - [ber(0.5), ber(0.6)]
    policies: [ucb1(0.5), ucbh(0.5), gclstar(0.6)]
    checkpoints: [100, 1000]
    reps: 10000
    seed: 0
    workers: 1
    out: results
    stats:
      mean: true
      tail: {num: 101}            # or {thresholds: [...]} / {start, stop, num}
      pmf: {bandwidth: auto, grid_size: 512}
      fcheck: {C: 4.0, C_tilde: 4.0, rate: power, param: 1.0}
      plot: false
    sweep: {family: ucb1, rho: [0.1, 0.2, 0.5]}

Unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .env import DistributionError, Environment, EnvironmentClass
from .policies import UCB1, UCBH, PolicyConfig, PolicyError, parse_policy


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"env", "class", "misspecified", "policies", "checkpoints", "reps", "seed", "workers", "out", "stats", "sweep"}
_STAT_KEYS = {"mean", "tail", "pmf", "fcheck", "plot"}


@dataclass(frozen=True)
class TailRequest:
    thresholds: tuple[float, ...] | None = None
    start: float | None = None
    stop: float | None = None
    num: int = 101


@dataclass(frozen=True)
class PmfRequest:
    bandwidth: float | str = "auto"
    grid_size: int = 512


@dataclass(frozen=True)
class FCheckRequest:
    C: float
    C_tilde: float
    rate: str = "power"
    param: float = 1.0


@dataclass(frozen=True)
class StatsRequest:
    mean: bool = True
    tail: TailRequest | None = field(default_factory=TailRequest)
    pmf: PmfRequest | None = field(default_factory=PmfRequest)
    fcheck: FCheckRequest | None = None
    plot: bool = False


@dataclass(frozen=True)
class SweepRequest:
    family: str
    rho: tuple[float, ...]

    def policies(self) -> list[PolicyConfig]:
        ctor = {"ucb1": UCB1, "ucbh": UCBH}.get(self.family)
        if ctor is None:
            raise ConfigError(f"sweep family must be ucb1 or ucbh, got {self.family!r}")
        try:
            return [ctor(r) for r in self.rho]
        except PolicyError as e:
            raise ConfigError(str(e)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    env: Environment
    policies: tuple[PolicyConfig, ...]
    checkpoints: tuple[int, ...]
    cls: EnvironmentClass | None = None
    misspecified: bool = False
    reps: int = 10_000
    seed: int = 0
    workers: int = 1
    out: Path = Path("results")
    stats: StatsRequest = field(default_factory=StatsRequest)
    sweep: SweepRequest | None = None

    def with_overrides(self, **kw: Any) -> "ExperimentConfig":
        vals = {k: v for k, v in kw.items() if v is not None}
        if not vals:
            return self
        d = dict(self.__dict__)
        d.update(vals)
        if "out" in vals:
            d["out"] = Path(vals["out"])
        cfg = ExperimentConfig(**d)
        _validate_numbers(cfg)
        return cfg


def _as_env(spec: Any, what: str) -> Environment:
    try:
        if isinstance(spec, str):
            return Environment.parse(spec)
        if isinstance(spec, list) and all(isinstance(s, str) for s in spec):
            return Environment.parse(spec)
    except (DistributionError, ValueError) as e:
        raise ConfigError(f"{what}: {e}") from None
    raise ConfigError(f"{what}: expected a list of arm literals, got {spec!r}")


def _mapping(raw: Any, what: str, keys: set[str]) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{what} must be a mapping")
    extra = set(raw) - keys
    if extra:
        raise ConfigError(f"unknown {what} keys: {sorted(extra)}")
    return raw


def _stats(raw: Any) -> StatsRequest:
    d = _mapping(raw, "stats", _STAT_KEYS)
    if not d:
        return StatsRequest()
    tail = pmf = fcheck = None
    if d.get("tail", True) not in (None, False):
        t = _mapping(d.get("tail") if isinstance(d.get("tail"), dict) else {}, "stats.tail",
                     {"thresholds", "start", "stop", "num"})
        th = t.get("thresholds")
        tail = TailRequest(
            tuple(float(x) for x in th) if th is not None else None,
            None if t.get("start") is None else float(t["start"]),
            None if t.get("stop") is None else float(t["stop"]),
            int(t.get("num", 101)),
        )
        if tail.num < 2:
            raise ConfigError("stats.tail.num must be at least 2")
    if d.get("pmf", True) not in (None, False):
        p = _mapping(d.get("pmf") if isinstance(d.get("pmf"), dict) else {}, "stats.pmf", {"bandwidth", "grid_size"})
        bw = p.get("bandwidth", "auto")
        pmf = PmfRequest(bw if bw == "auto" else float(bw), int(p.get("grid_size", 512)))
    if d.get("fcheck") is not None:
        f = _mapping(d["fcheck"], "stats.fcheck", {"C", "C_tilde", "rate", "param"})
        if "C" not in f or "C_tilde" not in f:
            raise ConfigError("stats.fcheck needs C and C_tilde")
        fcheck = FCheckRequest(float(f["C"]), float(f["C_tilde"]), str(f.get("rate", "power")), float(f.get("param", 1.0)))
        if fcheck.rate not in ("power", "polylog"):
            raise ConfigError(f"stats.fcheck.rate must be power or polylog, got {fcheck.rate!r}")
    return StatsRequest(bool(d.get("mean", True)), tail, pmf, fcheck, bool(d.get("plot", False)))


def _validate_numbers(cfg: ExperimentConfig) -> None:
    if cfg.reps < 1:
        raise ConfigError("reps must be at least 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")


def parse_config(raw: Any) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a parsed YAML document."""
    d = _mapping(raw, "top-level", _TOP_KEYS)
    if "env" not in d:
        raise ConfigError("config needs an env")
    env = _as_env(d["env"], "env")
    cls = None
    if d.get("class") is not None:
        if not isinstance(d["class"], list) or not d["class"]:
            raise ConfigError("class must be a non-empty list of environments")
        try:
            cls = EnvironmentClass(tuple(_as_env(m, "class member") for m in d["class"]))
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if cls.n_arms != env.n_arms:
            raise ConfigError("class members and env disagree on the number of arms")
    misspecified = bool(d.get("misspecified", False))

    sweep = None
    if d.get("sweep") is not None:
        s = _mapping(d["sweep"], "sweep", {"family", "rho"})
        rho = s.get("rho")
        if not isinstance(rho, list) or not rho:
            raise ConfigError("sweep.rho must be a non-empty list")
        sweep = SweepRequest(str(s.get("family", "ucb1")).lower(), tuple(float(r) for r in rho))
        sweep.policies()

    lits = d.get("policies", [])
    if isinstance(lits, str):
        lits = [lits]
    if not isinstance(lits, list) or (not lits and sweep is None):
        raise ConfigError("policies must be a non-empty list of policy literals")
    policies = []
    for lit in lits:
        try:
            policies.append(parse_policy(str(lit), cls))
        except PolicyError as e:
            raise ConfigError(str(e)) from None
    needs_class = any(str(p).strip().lower() in ("gcl", "gclb") for p in lits)
    if needs_class and not misspecified and env not in cls.members:
        raise ConfigError("the generating env is not a member of the class (set misspecified: true to allow)")

    ck = d.get("checkpoints")
    if not isinstance(ck, list) or not ck:
        raise ConfigError("checkpoints must be a non-empty list of horizons")
    try:
        checkpoints = tuple(sorted({int(n) for n in ck}))
    except (TypeError, ValueError):
        raise ConfigError(f"checkpoints must be integers, got {ck!r}") from None
    if checkpoints[0] < env.n_arms:
        raise ConfigError(f"checkpoint {checkpoints[0]} is below the number of arms {env.n_arms}")

    try:
        cfg = ExperimentConfig(
            env=env,
            policies=tuple(policies),
            checkpoints=checkpoints,
            cls=cls,
            misspecified=misspecified,
            reps=int(d.get("reps", 10_000)),
            seed=int(d.get("seed", 0)),
            workers=int(d.get("workers", 1)),
            out=Path(str(d.get("out", "results"))),
            stats=_stats(d.get("stats")),
            sweep=sweep,
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    _validate_numbers(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from None
    return parse_config(raw)
