"""Run configuration: YAML schema, validation with line numbers, dict round-trip.

Example::

    model:
      family: slt            # lohe_sphere | lohe_matrix | sl | rotational_sl | slm | slt | lohe_tensor
      dims: [3, 3, 3]
      agents: 4
      kappa: {"000": 1.0, "011": 0.5}   # number for sl / rotational_sl
      # kappa0, kappa1 for lohe_sphere, lohe_matrix, slm
    free_flow:
      kind: spectral         # none | spectral | dense
      eigenvalues: null      # per-axis lists; default is the free Fourier spectrum
      generator: null        # text matrix file for kind: dense
    initial:
      kind: random           # random | file | bipolar | phase_family
      seed: 0
      normalize: true
      n: 1                   # bipolar split
      phases: null           # phase_family angles (random if omitted)
      path: null             # snapshot file for kind: file
    integrate:
      dt: 0.001
      t_end: 10.0
      record_stride: 10
      conservation_tol: 1.0e-6
      method: full           # full | split
    outputs:
      directory: null
      diagnostics: [R, diameter, norm_drift_max, flux]
      snapshot_stride: 0     # write every k-th record to snapshots/ (0 = off)
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import UsageError
from .models import FAMILIES, FAMILY_RANK, LIFTINGS
from .tensor import MAX_ELEMENTS, MAX_RANK

SERIES_DIAGNOSTICS = ("R", "diameter", "diameter_sum", "norm_drift_max", "flux")
DEFAULT_DIAGNOSTICS = ("R", "diameter", "norm_drift_max", "flux")
SCALAR_KAPPA = ("sl", "rotational_sl")
PAIR_KAPPA = ("lohe_sphere", "lohe_matrix", "slm")
MAP_KAPPA = ("slt", "lohe_tensor")


class ConfigError(UsageError):
    """Configuration problem, reported with the source line when known."""


@dataclass
class ModelConfig:
    family: str
    dims: tuple
    agents: int
    kappa: object = None
    kappa0: float = 0.0
    kappa1: float = 0.0


@dataclass
class FreeFlowConfig:
    kind: str
    eigenvalues: list | None = None
    generator: str | None = None


@dataclass
class InitialConfig:
    kind: str = "random"
    seed: int = 0
    normalize: bool = True
    n: int | None = None
    phases: list | None = None
    path: str | None = None


@dataclass
class IntegrateConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    record_stride: int = 10
    conservation_tol: float = 1e-6
    method: str = "full"


@dataclass
class OutputConfig:
    directory: str | None = None
    diagnostics: list = field(default_factory=lambda: list(DEFAULT_DIAGNOSTICS))
    snapshot_stride: int = 0


@dataclass
class RunConfig:
    model: ModelConfig
    free_flow: FreeFlowConfig
    initial: InitialConfig
    integrate: IntegrateConfig
    outputs: OutputConfig

    @property
    def rank(self) -> int:
        return len(self.model.dims)

    def to_dict(self) -> dict:
        """Plain nested dict that :meth:`from_dict` maps back to an equal config."""
        out = asdict(self)
        model = out["model"]
        model["dims"] = list(self.model.dims)
        if self.model.family in PAIR_KAPPA:
            del model["kappa"]
        else:
            del model["kappa0"], model["kappa1"]
        for name in ("free_flow", "initial", "outputs"):
            out[name] = {k: v for k, v in out[name].items() if v is not None}
        return out

    @classmethod
    def from_dict(cls, data, lines=None, source=None) -> "RunConfig":
        return _Reader(data, lines or {}, source).run_config()

    def replace_path(self, path: str, value) -> "RunConfig":
        """Copy with one dotted field set (``model.kappa``, ``model.kappa.01``, ...)."""
        data = self.to_dict()
        keys = path.split(".")
        node = data
        for key in keys[:-1]:
            if not isinstance(node, dict) or key not in node or not isinstance(node[key], dict):
                raise UsageError(f"{path!r} does not name a numeric config field")
            node = node[key]
        last = keys[-1]
        if not isinstance(node, dict) or last not in node:
            raise UsageError(f"{path!r} does not name a numeric config field")
        old = node[last]
        if isinstance(old, bool) or not isinstance(old, (int, float)):
            raise UsageError(f"{path!r} is not numeric (current value {old!r})")
        if isinstance(old, int):
            if not float(value).is_integer():
                raise UsageError(f"{path!r} takes integers, got {value!r}")
            node[last] = int(value)
        else:
            node[last] = float(value)
        return RunConfig.from_dict(data)


# -- parsing ----------------------------------------------------------------

def _line_map(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            sub = path + (str(key.value),)
            out[sub] = key.start_mark.line + 1
            _line_map(value, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            sub = path + (i,)
            out[sub] = value.start_mark.line + 1
            _line_map(value, sub, out)
    return out


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: invalid YAML ({getattr(exc, 'problem', None) or exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping")
    return RunConfig.from_dict(data, _line_map(node), source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


class _Reader:
    def __init__(self, data, lines, source):
        self.data = copy.deepcopy(data)
        self.lines = lines
        self.source = source or "<config>"

    def fail(self, path, message):
        line = None
        p = tuple(path)
        while p and line is None:
            line = self.lines.get(p)
            p = p[:-1]
        where = f"{self.source}:{line}" if line is not None else self.source
        dotted = ".".join(str(k) for k in path)
        raise ConfigError(f"{where}: {dotted}: {message}")

    def section(self, name, required=False):
        value = self.data.get(name)
        if value is None:
            if required:
                self.fail((name,), "section is required")
            return {}
        if not isinstance(value, dict):
            self.fail((name,), "must be a mapping")
        return self.drop_nulls(value)

    @staticmethod
    def drop_nulls(sec):
        return {k: v for k, v in sec.items() if v is not None}

    def check_keys(self, name, sec, allowed):
        prefix = (name,) if name else ()
        for key in sec:
            if key not in allowed:
                self.fail(prefix + (key,), f"unknown key; expected one of {', '.join(allowed)}")

    def number(self, path, value, positive=False, nonneg=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"must be a number, got {value!r}")
        value = float(value)
        if not np.isfinite(value):
            self.fail(path, "must be finite")
        if positive and value <= 0:
            self.fail(path, f"must be positive, got {value}")
        if nonneg and value < 0:
            self.fail(path, f"must be nonnegative, got {value}")
        return value

    def integer(self, path, value, minimum=None):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            else:
                self.fail(path, f"must be an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be at least {minimum}, got {value}")
        return int(value)

    def choice(self, path, value, options):
        if value not in options:
            self.fail(path, f"must be one of {', '.join(options)}, got {value!r}")
        return value

    def run_config(self) -> RunConfig:
        self.check_keys("", self.data, ("model", "free_flow", "initial", "integrate", "outputs"))
        model = self.model()
        return RunConfig(model, self.free_flow(model), self.initial(model), self.integrate(),
                         self.outputs())

    def model(self) -> ModelConfig:
        sec = self.section("model", required=True)
        self.check_keys("model", sec, ("family", "rank", "dims", "agents", "kappa", "kappa0", "kappa1"))
        family = self.choice(("model", "family"), sec.get("family"), FAMILIES)
        dims = sec.get("dims")
        if not isinstance(dims, list) or not dims:
            self.fail(("model", "dims"), "must be a nonempty list of positive integers")
        dims = tuple(self.integer(("model", "dims", i), d, minimum=1) for i, d in enumerate(dims))
        if len(dims) > MAX_RANK:
            self.fail(("model", "dims"), f"rank {len(dims)} exceeds the cap {MAX_RANK}")
        if int(np.prod(dims)) > MAX_ELEMENTS:
            self.fail(("model", "dims"), f"{int(np.prod(dims))} entries exceed the cap {MAX_ELEMENTS}")
        if "rank" in sec and self.integer(("model", "rank"), sec["rank"], 1) != len(dims):
            self.fail(("model", "rank"), f"does not match dims of length {len(dims)}")
        if family in FAMILY_RANK and len(dims) != FAMILY_RANK[family]:
            self.fail(("model", "dims"), f"{family} has rank {FAMILY_RANK[family]}")
        agents = self.integer(("model", "agents"), sec.get("agents"), minimum=1)
        kappa, k0, k1 = None, 0.0, 0.0
        if family in SCALAR_KAPPA:
            kappa = self.number(("model", "kappa"), sec.get("kappa"), nonneg=True)
        elif family in PAIR_KAPPA:
            k0 = self.number(("model", "kappa0"), sec.get("kappa0", 0.0), nonneg=True)
            k1 = self.number(("model", "kappa1"), sec.get("kappa1", 0.0), nonneg=True)
        else:
            raw = sec.get("kappa")
            if not isinstance(raw, dict) or not raw:
                self.fail(("model", "kappa"), "must map bitmask strings to strengths")
            kappa = {}
            for key, value in raw.items():
                key_s = str(key)
                path = ("model", "kappa", key_s)
                if len(key_s) != len(dims) or any(c not in "01" for c in key_s):
                    self.fail(path, f"bitmask must be {len(dims)} characters of 0/1 "
                                    "(quote keys such as \"01\" so YAML keeps them as strings)")
                kappa[key_s] = self.number(path, value, nonneg=True)
            kappa = dict(sorted(kappa.items(), key=lambda kv: int(kv[0], 2)))
        for key in ("kappa0", "kappa1") if family not in PAIR_KAPPA else ():
            if key in sec:
                self.fail(("model", key), f"not used by {family}")
        return ModelConfig(family, dims, agents, kappa, k0, k1)

    def free_flow(self, model: ModelConfig) -> FreeFlowConfig:
        sec = self.section("free_flow")
        self.check_keys("free_flow", sec, ("kind", "eigenvalues", "generator"))
        default = "spectral" if model.family in LIFTINGS else "none"
        kind = self.choice(("free_flow", "kind"), sec.get("kind", default), ("none", "spectral", "dense"))
        if model.family in LIFTINGS and kind != "spectral":
            self.fail(("free_flow", "kind"), f"{model.family} needs a spectral (separable) free flow")
        eig = sec.get("eigenvalues")
        if eig is not None:
            if kind != "spectral":
                self.fail(("free_flow", "eigenvalues"), "only used with kind: spectral")
            if not isinstance(eig, list) or len(eig) != len(model.dims):
                self.fail(("free_flow", "eigenvalues"), f"need {len(model.dims)} per-axis lists")
            out = []
            for k, (axis, d) in enumerate(zip(eig, model.dims)):
                if not isinstance(axis, list) or len(axis) != d:
                    self.fail(("free_flow", "eigenvalues", k), f"axis {k + 1} needs {d} values")
                out.append([self.number(("free_flow", "eigenvalues", k, i), e) for i, e in enumerate(axis)])
            eig = out
        gen = sec.get("generator")
        if kind == "dense":
            if not isinstance(gen, str) or not gen:
                self.fail(("free_flow", "generator"), "kind: dense needs a generator file path")
        elif gen is not None:
            self.fail(("free_flow", "generator"), "only used with kind: dense")
        return FreeFlowConfig(kind, eig, gen)

    def initial(self, model: ModelConfig) -> InitialConfig:
        sec = self.section("initial")
        self.check_keys("initial", sec, ("kind", "seed", "normalize", "n", "phases", "path"))
        kind = self.choice(("initial", "kind"), sec.get("kind", "random"),
                           ("random", "file", "bipolar", "phase_family"))
        seed = self.integer(("initial", "seed"), sec.get("seed", 0), minimum=0)
        normalize = sec.get("normalize", True)
        if not isinstance(normalize, bool):
            self.fail(("initial", "normalize"), "must be true or false")
        if model.family in LIFTINGS and not normalize and kind == "random":
            self.fail(("initial", "normalize"), f"{model.family} agents must be normalized")
        n = phases = path = None
        if kind == "bipolar":
            n = self.integer(("initial", "n"), sec.get("n"))
            if not 1 <= n <= model.agents - 1:
                self.fail(("initial", "n"), f"bipolar split needs 1 <= n <= {model.agents - 1}")
        elif "n" in sec:
            self.fail(("initial", "n"), "only used with kind: bipolar")
        if kind == "phase_family":
            if len(model.dims) != 1:
                self.fail(("initial", "kind"), "phase_family requires rank 1")
            raw = sec.get("phases")
            if raw is not None:
                if not isinstance(raw, list) or len(raw) != model.agents:
                    self.fail(("initial", "phases"), f"need {model.agents} angles")
                phases = [self.number(("initial", "phases", i), p) for i, p in enumerate(raw)]
        elif sec.get("phases") is not None:
            self.fail(("initial", "phases"), "only used with kind: phase_family")
        if kind == "file":
            path = sec.get("path")
            if not isinstance(path, str) or not path:
                self.fail(("initial", "path"), "kind: file needs a snapshot path")
        elif sec.get("path") is not None:
            self.fail(("initial", "path"), "only used with kind: file")
        return InitialConfig(kind, seed, normalize, n, phases, path)

    def integrate(self) -> IntegrateConfig:
        sec = self.section("integrate")
        self.check_keys("integrate", sec, ("dt", "t_end", "record_stride", "conservation_tol", "method"))
        d = IntegrateConfig()
        dt = self.number(("integrate", "dt"), sec.get("dt", d.dt), positive=True)
        t_end = self.number(("integrate", "t_end"), sec.get("t_end", d.t_end), positive=True)
        if dt > t_end:
            self.fail(("integrate", "dt"), f"exceeds t_end={t_end}")
        n = round(t_end / dt)
        if abs(n * dt - t_end) > 1e-9 * t_end:
            self.fail(("integrate", "t_end"), f"must be an integer multiple of dt={dt}")
        stride = self.integer(("integrate", "record_stride"), sec.get("record_stride", d.record_stride), 1)
        tol = self.number(("integrate", "conservation_tol"),
                          sec.get("conservation_tol", d.conservation_tol), positive=True)
        method = self.choice(("integrate", "method"), sec.get("method", d.method), ("full", "split"))
        return IntegrateConfig(dt, t_end, stride, tol, method)

    def outputs(self) -> OutputConfig:
        sec = self.section("outputs")
        self.check_keys("outputs", sec, ("directory", "diagnostics", "snapshot_stride"))
        directory = sec.get("directory")
        if directory is not None and not isinstance(directory, str):
            self.fail(("outputs", "directory"), "must be a path string")
        diags = sec.get("diagnostics", list(DEFAULT_DIAGNOSTICS))
        if not isinstance(diags, list):
            self.fail(("outputs", "diagnostics"), "must be a list")
        for i, name in enumerate(diags):
            self.choice(("outputs", "diagnostics", i), name, SERIES_DIAGNOSTICS)
        diags = [name for name in SERIES_DIAGNOSTICS if name in diags]
        stride = self.integer(("outputs", "snapshot_stride"), sec.get("snapshot_stride", 0), 0)
        return OutputConfig(directory, diags, stride)
