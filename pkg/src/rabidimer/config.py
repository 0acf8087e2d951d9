"""Run configuration: a flat ``key = value`` text format with dotted sections.

Example::

    # Fig. 2(b)-like run
    model.g = 0.3
    drive.L.F = 20
    drive.R.F = 10
    propagation.t_end = 400
    sweep.drive.L.Phi = [pi/2, pi/6, 2*pi/3]

Values are numbers, bare words, or small arithmetic expressions in ``pi``.
``sweep.<key> = [v1, v2, ...]`` scans ``<key>``; several sweep keys expand to
their Cartesian product. Unknown keys are errors.
"""
from __future__ import annotations

import ast
import itertools
import math
import operator
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .ansatz import NOISE_RADIUS
from .integrator import GUARD_RATE, WARMUP_DT, WARMUP_TIME, PropagationConfig
from .oracle import FockConfig
from .params import DriveParams, ModelParams

OUTPUT_ENV = "RABIDIMER_OUTPUT_DIR"
MODES = ("run", "sweep", "oracle-compare", "spectrum", "diagram")
QUBIT_STATES = {"up-up": 0, "up-down": 1, "down-up": 2, "down-down": 3}


class ConfigError(ValueError):
    pass


# key -> (default, type, constraint text or None)
DEFAULTS = {
    "model.omega_r": (10.0, float, "omega_r > 0"),
    "model.g": (0.3, float, "g ≥ 0"),
    "model.J": (0.01, float, "J ≥ 0"),
    "model.omega_ph": (0.0, float, "omega_ph ≥ 0"),
    "model.alpha": (0.0, float, "alpha ≥ 0"),
    "drive.L.F": (0.0, float, None),
    "drive.L.Omega": (0.05, float, None),
    "drive.L.Phi": (0.0, float, None),
    "drive.R.F": (0.0, float, None),
    "drive.R.Omega": (0.05, float, None),
    "drive.R.Phi": (0.0, float, None),
    "init.M": (6, int, "M ≥ 1"),
    "init.n_photons": (20.0, float, "n_photons ≥ 0"),
    "init.side": ("L", str, "side ∈ {L, R}"),
    "init.qubits": ("down-down", str, "qubits ∈ {up-up, up-down, down-up, down-down}"),
    "init.seed": (0, int, None),
    "init.noise": (NOISE_RADIUS, float, "noise > 0"),
    "init.seed_around": ("occupied", str, "seed_around ∈ {occupied, vacuum}"),
    "propagation.dt": (PropagationConfig.dt, float, "dt > 0"),
    "propagation.t_end": (PropagationConfig.t_end, float, "t_end ≥ 0"),
    "propagation.output_stride": (PropagationConfig.output_stride, int, "output_stride ≥ 1"),
    "propagation.svd_cutoff": (PropagationConfig.svd_cutoff, float, "svd_cutoff > 0"),
    "propagation.norm_tolerance": (PropagationConfig.norm_tolerance, float, "norm_tolerance > 0"),
    "propagation.guard": (GUARD_RATE, float, "guard ≥ 0"),
    "propagation.warmup_time": (WARMUP_TIME, float, "warmup_time ≥ 0"),
    "propagation.warmup_dt": (WARMUP_DT, float, "warmup_dt > 0"),
    "oracle.n_max_L": (12, int, "n_max_L ≥ 0"),
    "oracle.n_max_R": (12, int, "n_max_R ≥ 0"),
    "oracle.n_max_ph": (8, int, "n_max_ph ≥ 0"),
    "oracle.dt": (0.0005, float, "oracle dt > 0"),
    "oracle.tolerance": (2e-3, float, "tolerance > 0"),
    "analysis.arp_threshold": (0.25, float, "arp_threshold > 0"),
    "analysis.guard_band": (0.5, float, "guard_band ≥ 0"),
    "analysis.n_show": (3, int, "n_show ≥ 1"),
    "analysis.t_min": (0.0, float, "t_min ≥ 0"),
    "analysis.input": ("", str, None),
    "run.mode": ("run", str, "mode ∈ {" + ", ".join(MODES) + "}"),
    "run.output_dir": ("out", str, None),
    "run.workers": (0, int, "workers ≥ 0"),
}

_CHECKS = {
    "model.omega_r": lambda v: v > 0,
    "model.g": lambda v: v >= 0,
    "model.J": lambda v: v >= 0,
    "model.omega_ph": lambda v: v >= 0,
    "model.alpha": lambda v: v >= 0,
    "init.M": lambda v: v >= 1,
    "init.n_photons": lambda v: v >= 0,
    "init.side": lambda v: v in ("L", "R"),
    "init.qubits": lambda v: v in QUBIT_STATES,
    "init.noise": lambda v: v > 0,
    "init.seed_around": lambda v: v in ("occupied", "vacuum"),
    "propagation.dt": lambda v: v > 0,
    "propagation.t_end": lambda v: v >= 0,
    "propagation.output_stride": lambda v: v >= 1,
    "propagation.svd_cutoff": lambda v: v > 0,
    "propagation.norm_tolerance": lambda v: v > 0,
    "propagation.guard": lambda v: v >= 0,
    "propagation.warmup_time": lambda v: v >= 0,
    "propagation.warmup_dt": lambda v: v > 0,
    "oracle.n_max_L": lambda v: v >= 0,
    "oracle.n_max_R": lambda v: v >= 0,
    "oracle.n_max_ph": lambda v: v >= 0,
    "oracle.dt": lambda v: v > 0,
    "oracle.tolerance": lambda v: v > 0,
    "analysis.arp_threshold": lambda v: v > 0,
    "analysis.guard_band": lambda v: v >= 0,
    "analysis.n_show": lambda v: v >= 1,
    "analysis.t_min": lambda v: v >= 0,
    "run.mode": lambda v: v in MODES,
    "run.workers": lambda v: v >= 0,
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi}


def _eval_number(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_number(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_number(node.left), _eval_number(node.right))
    raise ValueError("not a number")


def parse_value(text: str):
    """Number, ``pi`` arithmetic, bracketed list of those, or a bare string."""
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [parse_value(p) for p in inner.split(",")] if inner else []
    try:
        return _eval_number(ast.parse(text, mode="eval").body)
    except (SyntaxError, ValueError):
        return text.strip("\"'")


def _coerce(key: str, value):
    default, typ, constraint = DEFAULTS[key]
    try:
        if typ is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            v = int(value)
        elif typ is float:
            v = float(value)
        else:
            v = str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {value!r}") from None
    check = _CHECKS.get(key)
    if check is not None and not check(v):
        raise ConfigError(f"{key} = {v!r} violates {constraint}")
    return v


def read_pairs(text: str, origin: str = "config") -> list[tuple[str, str, str]]:
    """(key, raw value, origin) for every non-comment line."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        out.append((key, val, origin))
    return out


@dataclass
class InitialCondition:
    M: int = 6
    n_photons: float = 20.0
    side: str = "L"
    qubits: str = "down-down"
    seed: int = 0
    noise: float = NOISE_RADIUS
    seed_around: str = "occupied"


@dataclass
class RunConfig:
    values: dict
    provenance: dict
    sweep: dict = field(default_factory=dict)
    label: str = ""

    def __getitem__(self, key):
        return self.values[key]

    @property
    def mode(self) -> str:
        return self.values["run.mode"]

    @property
    def output_dir(self) -> Path:
        return Path(self.values["run.output_dir"])

    @property
    def model(self) -> ModelParams:
        v = self.values
        drives = {
            side: DriveParams(v[f"drive.{side}.F"], v[f"drive.{side}.Omega"], v[f"drive.{side}.Phi"])
            for side in "LR"
        }
        return ModelParams(
            omega_r=v["model.omega_r"], g=v["model.g"], J=v["model.J"],
            omega_ph=v["model.omega_ph"], alpha=v["model.alpha"],
            drive_L=drives["L"], drive_R=drives["R"],
        )

    @property
    def propagation(self) -> PropagationConfig:
        v = self.values
        try:
            return PropagationConfig(
                dt=v["propagation.dt"], t_end=v["propagation.t_end"],
                output_stride=v["propagation.output_stride"],
                svd_cutoff=v["propagation.svd_cutoff"],
                norm_tolerance=v["propagation.norm_tolerance"],
                guard=v["propagation.guard"],
                warmup_time=v["propagation.warmup_time"],
                warmup_dt=v["propagation.warmup_dt"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def initial(self) -> InitialCondition:
        v = self.values
        return InitialCondition(v["init.M"], v["init.n_photons"], v["init.side"],
                                v["init.qubits"], v["init.seed"], v["init.noise"],
                                v["init.seed_around"])

    @property
    def fock(self) -> FockConfig:
        v = self.values
        return FockConfig(v["oracle.n_max_L"], v["oracle.n_max_R"], v["oracle.n_max_ph"])

    def with_values(self, updates: dict, origin: str = "sweep", label: str = "") -> "RunConfig":
        values = dict(self.values)
        prov = dict(self.provenance)
        for k, raw in updates.items():
            values[k] = _coerce(k, raw)
            prov[k] = origin
        return replace(self, values=values, provenance=prov, sweep={}, label=label)

    def manifest_lines(self) -> list[str]:
        width = max(len(k) for k in self.values)
        lines = []
        for k in sorted(self.values):
            lines.append(f"{k:<{width}} = {self.values[k]!r:<24} # {self.provenance[k]}")
        for k in sorted(self.sweep):
            lines.append(f"sweep.{k} = {self.sweep[k]!r}")
        return lines


def resolve(pairs, env=None) -> RunConfig:
    """Apply (key, raw, origin) pairs on top of the defaults, in order."""
    values = {k: d[0] for k, d in DEFAULTS.items()}
    prov = {k: "default" for k in DEFAULTS}
    sweep = {}
    for key, raw, origin in pairs:
        val = parse_value(raw) if isinstance(raw, str) else raw
        if key.startswith("sweep."):
            target = key[len("sweep."):]
            if target not in DEFAULTS:
                raise ConfigError(f"unknown sweep key '{target}'")
            vals = val if isinstance(val, list) else [val]
            if not vals:
                raise ConfigError(f"{key}: empty sweep list")
            sweep[target] = [_coerce(target, x) for x in vals]
            continue
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key '{key}'")
        if isinstance(val, list):
            raise ConfigError(f"{key}: lists are only allowed in sweep.* keys")
        values[key] = _coerce(key, val)
        prov[key] = origin
    env = os.environ if env is None else env
    if env.get(OUTPUT_ENV):
        values["run.output_dir"] = env[OUTPUT_ENV]
        prov["run.output_dir"] = "env"
    return RunConfig(values, prov, sweep)


def parse_config(path=None, overrides=(), env=None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``key=value`` override strings."""
    pairs = []
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        pairs += read_pairs(p.read_text(), str(p))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not key=value")
        k, v = item.split("=", 1)
        pairs.append((k.strip(), v.strip(), "flag"))
    return resolve(pairs, env)


def expand_sweep(config: RunConfig) -> list[RunConfig]:
    """One resolved config per point of the Cartesian product of sweep lists."""
    if not config.sweep:
        return [replace(config, sweep={}, label="point000")]
    keys = sorted(config.sweep)
    out = []
    for i, combo in enumerate(itertools.product(*(config.sweep[k] for k in keys))):
        out.append(config.with_values(dict(zip(keys, combo)), "sweep", f"point{i:03d}"))
    return out
