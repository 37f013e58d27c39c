"""Experiment configuration: one YAML file, validated before any compute.

Schema (every key optional except ``experiment``)::

    experiment: separation      # separation | hm | distinguish | learn-fq | learn-mf | verify
    n: [2, 4, 6, 8]
    seed: 0
    strategies: [shadow, fourier, leaky]
    ell: null                   # copies per record; null means 10 n^2
    m_budget: null              # record budget in bits; null means 3 n ell
    leaky_override: false       # allow the leaky arm above n = 8
    label_mode: full_x          # full_x | parity
    f_source: uniform           # uniform | prf
    trials: {f: 100, protocol: 1, hm: 1000, distinguish: 1000}
    criteria: {eps: 0.5, delta: 0.5, p_succ: 0.5}
    exact: true
    shots: 10000
    protocols: [quantum, "classical:c=8", "reduction:shadow"]   # hm only
    x: null                     # hex hidden string for learn-*; null draws one
    suites: null                # verify only; null runs all
    transcript: false           # hm only; write per-game JSONL

Command-line flags override file values. ``out`` and ``threads`` are
execution settings: they never change a result and are left out of the
echoed configuration and its hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .concepts import FSource, LabelMode
from .errors import ConfigError
from .evaluation import EvalCriteria
from .mflearner import StrategyKind, default_ell

__all__ = [
    "EXPERIMENTS",
    "LEAKY_MAX_N",
    "ExperimentConfig",
    "parse_config",
    "load_yaml",
    "parse_protocol",
]

EXPERIMENTS = ("separation", "hm", "distinguish", "learn-fq", "learn-mf", "verify")
LEAKY_MAX_N = 8
TRIAL_DEFAULTS = {"f": 100, "protocol": 1, "hm": 1000, "distinguish": 1000}
CRITERIA_DEFAULTS = {"eps": 0.5, "delta": 0.5, "p_succ": 0.5}


class _UniqueKeyLoader(yaml.SafeLoader):
    pass


def _mapping(loader: yaml.SafeLoader, node: yaml.MappingNode, deep: bool = False) -> dict:
    seen: dict[Any, int] = {}
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        line = key_node.start_mark.line + 1
        if key in seen:
            raise ConfigError(f"line {line}: duplicate key {key!r} (first defined on line {seen[key]})")
        seen[key] = line
    return loader.construct_mapping(node, deep=deep)


_UniqueKeyLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping)


def load_yaml(text: str, source: str = "<config>") -> tuple[dict, dict[str, int]]:
    """Parse YAML, rejecting duplicate keys. Returns the mapping and top-level key lines."""
    try:
        root = yaml.compose(text, Loader=_UniqueKeyLoader)
        data = yaml.load(text, Loader=_UniqueKeyLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{source}: {where}: {exc.problem}") from None
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    lines = {k.value: k.start_mark.line + 1 for k, _ in root.value if isinstance(k, yaml.ScalarNode)}
    return data, lines


def parse_protocol(spec: str) -> tuple[str, dict[str, str]]:
    """``"classical:c=8"`` -> ``("classical", {"c": "8"})``; ``"reduction:shadow"`` -> strategy."""
    name, _, rest = spec.strip().partition(":")
    params: dict[str, str] = {}
    if name == "reduction":
        params["strategy"] = rest or "shadow"
    elif rest:
        for part in rest.split(","):
            k, eq, v = part.partition("=")
            if not eq:
                raise ConfigError(f"protocol {spec!r}: expected key=value, got {part!r}")
            params[k.strip()] = v.strip()
    if name not in ("quantum", "classical", "reduction", "guess"):
        raise ConfigError(f"unknown protocol {name!r}; expected quantum, classical:c=K, reduction:STRATEGY or guess")
    if name == "classical":
        try:
            if int(params.get("c", "")) < 2:
                raise ValueError
        except ValueError:
            raise ConfigError(f"protocol {spec!r}: classical needs an integer budget c >= 2") from None
    if name == "reduction":
        try:
            StrategyKind(params["strategy"])
        except ValueError:
            raise ConfigError(f"protocol {spec!r}: unknown strategy {params['strategy']!r}") from None
    return name, params


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: tuple[int, ...] = (2, 4, 6, 8)
    seed: int = 0
    strategies: tuple[str, ...] = ("shadow", "fourier", "leaky")
    ell: int | None = None
    m_budget: int | None = None
    leaky_override: bool = False
    label_mode: str = "full_x"
    f_source: str = "uniform"
    trials: dict = field(default_factory=lambda: dict(TRIAL_DEFAULTS))
    criteria: dict = field(default_factory=lambda: dict(CRITERIA_DEFAULTS))
    exact: bool = True
    shots: int = 10_000
    protocols: tuple[str, ...] = ("quantum", "classical:c=8", "reduction:shadow")
    x: str | None = None
    suites: tuple[str, ...] | None = None
    transcript: bool = False
    # execution settings, not echoed
    out: str = "runs"
    threads: int = 1

    def ell_for(self, n: int) -> int:
        return default_ell(n) if self.ell is None else self.ell

    def eval_criteria(self) -> EvalCriteria:
        return EvalCriteria(**self.criteria)

    def echo(self) -> dict:
        """Configuration as echoed into every artifact (execution settings removed)."""
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        return json.loads(json.dumps(d))

    def config_hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _where(lines: dict[str, int], key: str) -> str:
    return f"line {lines[key]}: " if key in lines else ""


def _int_list(value, key: str, lines) -> tuple[int, ...]:
    vals = value if isinstance(value, (list, tuple)) else [value]
    if not vals or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in vals):
        raise ConfigError(f"{_where(lines, key)}{key} must be a positive integer or a list of them, got {value!r}")
    return tuple(vals)


def _validate(raw: dict, lines: dict[str, int]) -> ExperimentConfig:
    unknown = sorted(set(raw) - _FIELDS)
    if unknown:
        k = unknown[0]
        raise ConfigError(f"{_where(lines, k)}unknown key {k!r}; allowed keys: {', '.join(sorted(_FIELDS))}")
    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'")
    exp = raw["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError(f"{_where(lines, 'experiment')}experiment must be one of {', '.join(EXPERIMENTS)}, got {exp!r}")
    kw: dict[str, Any] = {"experiment": exp}

    if "n" in raw:
        kw["n"] = _int_list(raw["n"], "n", lines)
    for key in ("seed", "shots", "threads"):
        if key in raw:
            v = raw[key]
            if not isinstance(v, int) or isinstance(v, bool) or v < (0 if key == "seed" else 1):
                raise ConfigError(f"{_where(lines, key)}{key} must be a {'non-negative' if key == 'seed' else 'positive'} integer, got {v!r}")
            kw[key] = v
    for key in ("ell", "m_budget"):
        if raw.get(key) is not None:
            kw[key] = _int_list(raw[key], key, lines)[0]
    for key in ("leaky_override", "exact", "transcript"):
        if key in raw:
            if not isinstance(raw[key], bool):
                raise ConfigError(f"{_where(lines, key)}{key} must be true or false, got {raw[key]!r}")
            kw[key] = raw[key]
    if "strategies" in raw:
        vals = raw["strategies"] if isinstance(raw["strategies"], list) else [raw["strategies"]]
        for v in vals:
            try:
                StrategyKind(v)
            except ValueError:
                raise ConfigError(f"{_where(lines, 'strategies')}unknown strategy {v!r}; expected shadow, fourier or leaky") from None
        kw["strategies"] = tuple(vals)
    if "label_mode" in raw:
        try:
            kw["label_mode"] = LabelMode(raw["label_mode"]).value
        except ValueError:
            raise ConfigError(f"{_where(lines, 'label_mode')}label_mode must be full_x or parity, got {raw['label_mode']!r}") from None
    if "f_source" in raw:
        try:
            kw["f_source"] = FSource(raw["f_source"]).value
        except ValueError:
            raise ConfigError(f"{_where(lines, 'f_source')}f_source must be uniform or prf, got {raw['f_source']!r}") from None
    for key, defaults in (("trials", TRIAL_DEFAULTS), ("criteria", CRITERIA_DEFAULTS)):
        if key in raw:
            sub = raw[key]
            if not isinstance(sub, dict):
                raise ConfigError(f"{_where(lines, key)}{key} must be a mapping")
            bad = sorted(set(sub) - set(defaults))
            if bad:
                raise ConfigError(f"{_where(lines, key)}unknown {key} key {bad[0]!r}; allowed: {', '.join(defaults)}")
            kw[key] = {**defaults, **sub}
    for k, v in kw.get("trials", TRIAL_DEFAULTS).items():
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{_where(lines, 'trials')}trials.{k} must be a positive integer, got {v!r}")
    for k, v in kw.get("criteria", CRITERIA_DEFAULTS).items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
            raise ConfigError(f"{_where(lines, 'criteria')}criteria.{k}={v!r} is outside [0, 1]")
    if "criteria" in kw:
        kw["criteria"] = {k: float(v) for k, v in kw["criteria"].items()}
    if "protocols" in raw:
        vals = raw["protocols"]
        if isinstance(vals, str):
            vals = _split_protocols(vals)
        for v in vals:
            parse_protocol(v)
        kw["protocols"] = tuple(vals)
    if raw.get("x") is not None:
        kw["x"] = str(raw["x"])
    if raw.get("suites") is not None:
        from .verify import SUITES

        vals = raw["suites"] if isinstance(raw["suites"], list) else [raw["suites"]]
        bad = [v for v in vals if v not in SUITES]
        if bad:
            raise ConfigError(f"{_where(lines, 'suites')}unknown suite {bad[0]!r}; available: {', '.join(SUITES)}")
        kw["suites"] = tuple(vals)
    if "out" in raw:
        kw["out"] = str(raw["out"])

    cfg = ExperimentConfig(**kw)
    _check_contradictions(cfg, lines)
    return cfg


def _split_protocols(text: str) -> list[str]:
    """Split ``quantum,classical:c=8,reduction:shadow`` on commas that start a new protocol."""
    out: list[str] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if out and "=" in part and ":" not in part:
            out[-1] += "," + part
        else:
            out.append(part)
    return out


def _check_contradictions(cfg: ExperimentConfig, lines: dict[str, int]) -> None:
    uses_leaky = "leaky" in cfg.strategies and cfg.experiment in ("separation", "distinguish", "learn-mf")
    uses_leaky |= cfg.experiment == "hm" and any(p.replace(" ", "") == "reduction:leaky" for p in cfg.protocols)
    big = [n for n in cfg.n if n > LEAKY_MAX_N]
    if uses_leaky and big and not cfg.leaky_override:
        raise ConfigError(
            f"{_where(lines, 'strategies') or _where(lines, 'n')}the leaky strategy records 2^n bits and is capped at "
            f"n <= {LEAKY_MAX_N}, but n includes {big}; drop it from strategies or set leaky_override: true"
        )
    if cfg.experiment in ("separation", "learn-fq", "learn-mf") and cfg.exact and max(cfg.n) > 12:
        raise ConfigError(
            f"{_where(lines, 'n')}exact TV is limited to n <= 12; use exact: false (or --empirical) for n = {max(cfg.n)}"
        )
    if cfg.x is not None:
        try:
            x = int(cfg.x, 16)
        except ValueError:
            raise ConfigError(f"{_where(lines, 'x')}x must be a hex string, got {cfg.x!r}") from None
        if len(cfg.n) != 1 or x == 0 or x >= 1 << cfg.n[0]:
            raise ConfigError(f"{_where(lines, 'x')}x={cfg.x} needs a single n with 0 < x < 2^n")


def parse_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Load ``path`` (if any), apply flag ``overrides``, fill defaults and validate."""
    raw: dict = {}
    lines: dict[str, int] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        raw, lines = load_yaml(p.read_text(), str(p))
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
            lines.pop(k, None)
    return _validate(raw, lines)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    """Re-validate a config with some fields replaced."""
    new = replace(cfg, **kw)
    _check_contradictions(new, {})
    return new
