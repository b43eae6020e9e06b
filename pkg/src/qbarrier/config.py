"""Job configuration files: INI sections describing a circuit or a search
instance, the regions, and the synthesis/solver settings.

Grammar (see the README for the full reference):

    [circuit]
    qubits   = 2
    map.u0   = CX 0 1          ; factors separated by ';' apply in order
    map.u1   = CZ 0 1
    schedule = periodic u0 u1  ; or: constant u0

    [regions]
    init   = prob(0) >= 0.9
    unsafe = prob(1)+prob(2)+prob(3) >= 0.5
    global =                   ; optional, defaults to the whole sphere

    [synthesis]
    flavor  = hybrid           ; invariant | k-inductive | hybrid | finite-horizon
    degree  = 2
    samples = 20000
    seed    = 7
    k       = 2
    epsilon = 0.01             ; or: free
    gamma   = 0.01             ; or: free
    horizon = 6                ; finite-horizon only
    ...

    [smt]
    solver  = builtin          ; or a command template with {file} {timeout_s}
    timeout = 300

Grover angle-model jobs replace [circuit]/[regions] with a [grover] section
(fields: qubits, solutions, err, eta, steps, samples, seed).

Region constraints are comma-separated predicates over prob(j), re(j), im(j);
gate tokens are the standard names plus HE (tunable mixing gate, with an
optional parameter interval) and GROVER (full-state search step over marked
indices).
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .grover import GroverError, GroverInstance
from .lp import LPError, SynthesisConfig
from .quantum import (
    Dynamics,
    QuantumError,
    Schedule,
    StepMap,
    grover_operator,
    hadamard_uncertain,
    lift,
    standard_gate,
)
from .regions import Region, RegionError, full_sphere, parse_region


class ConfigError(ValueError):
    pass


@dataclass
class SMTSettings:
    solver: str = "builtin"
    timeout: float = 300.0
    jobs: int = 1


@dataclass
class JobConfig:
    name: str
    kind: str  # "circuit" | "grover"
    synthesis: SynthesisConfig
    smt: SMTSettings
    dynamics: Dynamics | None = None
    init_region: Region | None = None
    unsafe_region: Region | None = None
    global_region: Region | None = None
    grover: GroverInstance | None = None
    raw: dict = field(default_factory=dict)


def _parse_factor(token: str, n: int):
    """One gate application: NAME q... , HE q [lo,hi] , or GROVER s0,s1,..."""
    parts = token.split()
    if not parts:
        raise ConfigError("empty gate token")
    name = parts[0].upper()
    if name == "GROVER":
        if len(parts) < 2:
            raise ConfigError("GROVER needs marked indices, e.g. 'GROVER 3'")
        sols = []
        for p in parts[1:]:
            for piece in p.split(","):
                if piece:
                    sols.append(int(piece))
        return grover_operator(n, sols)
    if name == "HE":
        if len(parts) < 2:
            raise ConfigError("HE needs a target qubit")
        q = int(parts[1])
        lo, hi = 0.9, 1.1
        if len(parts) >= 3:
            spec = "".join(parts[2:]).strip("[]")
            lo_s, _, hi_s = spec.partition(",")
            lo, hi = float(lo_s), float(hi_s)
        return (hadamard_uncertain(lo, hi), (q,))
    gate = standard_gate(name)
    targets = [int(p) for p in parts[1:]]
    if len(targets) != gate.m:
        raise ConfigError(
            f"gate {name} takes {gate.m} qubit(s), got targets {targets}"
        )
    for q in targets:
        if not 0 <= q < n:
            raise ConfigError(f"qubit index {q} out of range for {n} qubits")
    return lift(gate, targets, n)


def _parse_map(value: str, n: int) -> StepMap:
    factors = []
    for token in value.split(";"):
        token = token.strip()
        if token:
            factors.append(_parse_factor(token, n))
    if not factors:
        raise ConfigError("step map needs at least one gate")
    return StepMap(n=n, factors=tuple(factors))


def _parse_circuit(section) -> Dynamics:
    try:
        n = section.getint("qubits")
    except (TypeError, ValueError):
        raise ConfigError("[circuit] qubits must be an integer") from None
    if n is None or n < 1:
        raise ConfigError("[circuit] qubits must be >= 1")
    maps: dict[str, StepMap] = {}
    for key, value in section.items():
        if key.startswith("map."):
            label = key[4:]
            try:
                maps[label] = _parse_map(value, n)
            except (QuantumError, ValueError) as exc:
                raise ConfigError(f"[circuit] {key}: {exc}") from exc
    if not maps:
        raise ConfigError("[circuit] needs at least one map.<label> entry")
    sched_text = section.get("schedule", "").split()
    if not sched_text:
        if len(maps) == 1:
            order = [0]
            labels = list(maps)
        else:
            raise ConfigError("[circuit] schedule is required with several maps")
    else:
        mode, labels = sched_text[0], sched_text[1:]
        if mode not in ("constant", "periodic"):
            raise ConfigError(f"[circuit] schedule mode {mode!r} unknown")
        if mode == "constant" and len(labels) != 1:
            raise ConfigError("[circuit] constant schedule takes one map label")
        if not labels:
            raise ConfigError("[circuit] schedule needs map labels")
        order = []
        ordered_labels = list(maps)
        for lab in labels:
            if lab not in maps:
                raise ConfigError(f"[circuit] schedule references unknown map {lab!r}")
            order.append(ordered_labels.index(lab))
        labels = ordered_labels
    return Dynamics(maps=tuple(maps.values()), schedule=Schedule(tuple(order)))


def _parse_regions(section, dim: int):
    def region_of(key, fallback_sphere=False):
        text = section.get(key, "") if section is not None else ""
        specs = [s for s in (text or "").split(",") if s.strip()]
        if not specs:
            if fallback_sphere:
                return full_sphere(dim, name=key)
            raise ConfigError(f"[regions] {key} is required")
        try:
            return parse_region(specs, dim, name=key)
        except RegionError as exc:
            raise ConfigError(f"[regions] {key}: {exc}") from exc

    return (
        region_of("init"),
        region_of("unsafe"),
        region_of("global", fallback_sphere=True),
    )


def _parse_synthesis(section) -> SynthesisConfig:
    if section is None:
        raise ConfigError("[synthesis] section is required")

    def num(key, default):
        raw = section.get(key, None)
        if raw is None:
            return default
        if raw.strip() == "free":
            return "free"
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[synthesis] {key} must be a number") from None

    try:
        cfg = SynthesisConfig(
            flavor=section.get("flavor", "invariant"),
            degree=section.getint("degree", 2),
            samples=section.getint("samples", 1000),
            seed=section.getint("seed", 1),
            k=section.getint("k", 1),
            eps=num("epsilon", 0.01),
            gamma=num("gamma", 0.01),
            horizon=section.getint("horizon", None),
            margin=float(section.get("margin", 1e-4)),
            coeff_bound=float(section.get("coeff-bound", 100.0)),
            max_terms=section.getint("max-terms", None),
            resample_rounds=section.getint("resample-rounds", 10),
            uncertainty_samples=section.getint("uncertainty-samples", 5),
            on_unknown=section.get("on-unknown", "stop"),
        )
    except (ValueError, LPError) as exc:
        raise ConfigError(f"[synthesis] {exc}") from exc
    if cfg.on_unknown not in ("stop", "continue"):
        raise ConfigError("[synthesis] on-unknown must be 'stop' or 'continue'")
    return cfg


def _parse_grover(section) -> GroverInstance:
    try:
        return GroverInstance(
            n=section.getint("qubits"),
            solutions=section.getfloat("solutions"),
            err=section.getfloat("err", 0.0),
            eta=section.getfloat("eta", 0.0),
            steps=section.getint("steps", None),
        )
    except (TypeError, ValueError, GroverError) as exc:
        raise ConfigError(f"[grover] {exc}") from exc


def load_config(path: str | Path) -> JobConfig:
    """Parse and validate a job file; raises ConfigError with the offending
    section/field named."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    smt = SMTSettings(
        solver=parser.get("smt", "solver", fallback="builtin"),
        timeout=parser.getfloat("smt", "timeout", fallback=300.0),
        jobs=parser.getint("smt", "jobs", fallback=1),
    )
    name = path.stem
    raw = {s: dict(parser[s]) for s in parser.sections()}

    if parser.has_section("grover"):
        synth = _parse_synthesis(
            parser["synthesis"] if parser.has_section("synthesis") else None
        )
        g = _parse_grover(parser["grover"])
        return JobConfig(
            name=name, kind="grover", synthesis=synth, smt=smt, grover=g, raw=raw
        )

    if not parser.has_section("circuit"):
        raise ConfigError(f"{path}: needs a [circuit] or [grover] section")
    dynamics = _parse_circuit(parser["circuit"])
    regions = _parse_regions(
        parser["regions"] if parser.has_section("regions") else None, dynamics.dim
    )
    synth = _parse_synthesis(
        parser["synthesis"] if parser.has_section("synthesis") else None
    )
    if synth.flavor == "finite-horizon" and synth.horizon is None:
        raise ConfigError("[synthesis] finite-horizon flavor needs horizon")
    return JobConfig(
        name=name,
        kind="circuit",
        synthesis=synth,
        smt=smt,
        dynamics=dynamics,
        init_region=regions[0],
        unsafe_region=regions[1],
        global_region=regions[2],
        raw=raw,
    )
