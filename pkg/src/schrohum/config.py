"""Experiment configuration: INI files with named sections.

Schema (every key optional unless marked)::

    [problem]
    L = 1
    control = 0.25, 0.75        ; x_lo, x_hi; omit for the whole domain
    T = 0.4                     ; required
    y0 = sin_pi                 ; or file:<path> with one value (or "re,im") per interior node

    [distribution]
    family = normal             ; required; remaining keys are law parameters
    mean = 0
    variance = 1

    [discretization]
    Nx = 40
    Nt = 80
    n_modes = 39                ; spectral truncation, default Nx - 1
    scheme = backward_euler     ; or crank_nicolson

    [ensemble]
    M = 50
    seed = 0

    [hum]
    tol = 1e-5
    k_max = 100
    z_guess = sin_pi            ; or zero

    [backend]
    kind = mc_fd                ; spectral | mc_fd | both
    threads = 1
    same_level_adjoint = false

    [probes]
    names =                     ; comma list of probe names
    n_max = 40
    scan_range = -5, 5
    scan_resolution = 1e-3
    T_ladder =                  ; comma list, default T * (1, 0.75, 0.5, 0.375, 0.25)

    [output]
    figures = true
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import DistributionSpec, Family, ParameterError
from .fd_solver import Scheme
from .grids import SpatialGrid

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PROBE_NAMES",
    "load_config",
    "parse_config",
    "preset",
    "PRESETS",
    "initial_state",
]

PROBE_NAMES = ("decay", "exact_obs_defect", "simultaneous_zero_scan", "spectral_inequality", "cost_blowup")
BACKENDS = ("spectral", "mc_fd", "both")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is the 1-based line of the offending entry when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class ExperimentConfig:
    T: float
    distribution: DistributionSpec
    L: float = 1.0
    control: tuple[float, float] | None = None
    y0: str = "sin_pi"
    Nx: int = 40
    Nt: int = 80
    n_modes: int | None = None
    scheme: Scheme = Scheme.BACKWARD_EULER
    M: int = 50
    seed: int = 0
    tol: float = 1e-5
    k_max: int = 100
    z_guess: str = "sin_pi"
    backend: str = "mc_fd"
    threads: int = 1
    same_level_adjoint: bool = False
    probes: tuple[str, ...] = ()
    n_max: int = 40
    scan_range: tuple[float, float] = (-5.0, 5.0)
    scan_resolution: float = 1e-3
    T_ladder: tuple[float, ...] = ()
    figures: bool = True
    name: str = "custom"
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if self.control is not None and not 0 <= self.control[0] < self.control[1] <= self.L:
            raise ValueError("control region needs 0 <= x_lo < x_hi <= L")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.Nx < 4:
            raise ValueError("Nx must be >= 4")
        if self.Nt < 1:
            raise ValueError("Nt must be >= 1")
        if self.n_modes is not None and not 1 <= self.n_modes <= self.Nx - 1:
            raise ValueError("n_modes must lie in [1, Nx-1]")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.z_guess not in ("sin_pi", "zero"):
            raise ValueError("z_guess must be 'sin_pi' or 'zero'")
        for p in self.probes:
            if p not in PROBE_NAMES:
                raise ValueError(f"unknown probe {p!r}; known: {', '.join(PROBE_NAMES)}")
        if not (self.y0 == "sin_pi" or self.y0.startswith("file:")):
            raise ValueError("y0 must be 'sin_pi' or 'file:<path>'")

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.L, self.Nx, self.control)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "base_dir"}
        d["distribution"] = {"family": self.distribution.family.value, **dict(self.distribution.params)}
        d["scheme"] = self.scheme.value
        return d


def initial_state(kind: str, grid: SpatialGrid, base_dir: Path = Path(".")) -> np.ndarray:
    """Grid values of a named state (``sin_pi``, ``zero``) or of a ``file:`` datum."""
    if kind == "sin_pi":
        return np.sin(np.pi * grid.x / grid.L).astype(complex)
    if kind == "zero":
        return np.zeros(grid.n, dtype=complex)
    if kind.startswith("file:"):
        path = Path(kind[5:])
        path = path if path.is_absolute() else base_dir / path
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        if data.shape[0] != grid.n or data.shape[1] not in (1, 2):
            raise ValueError(f"{path}: expected {grid.n} rows of 're' or 're,im'")
        return data[:, 0] + (1j * data[:, 1] if data.shape[1] == 2 else 0)
    raise ValueError(f"unknown state {kind!r}")


# ---------------------------------------------------------------------------
# parsing


class _Locator:
    """Maps ``(section, key)`` back to line numbers in the source text."""

    def __init__(self, text: str):
        self.lines: dict[tuple[str, str | None], int] = {}
        section = None
        for i, raw in enumerate(text.splitlines(), start=1):
            s = raw.strip()
            if not s or s[0] in "#;":
                continue
            if s.startswith("[") and s.endswith("]"):
                section = s[1:-1].strip().lower()
                self.lines[(section, None)] = i
            elif section is not None:
                for sep in ("=", ":"):
                    if sep in s:
                        self.lines.setdefault((section, s.split(sep, 1)[0].strip().lower()), i)
                        break

    def __call__(self, section: str, key: str | None = None) -> int | None:
        return self.lines.get((section, key)) or self.lines.get((section, None))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def parse_config(text: str, source: str = "<config>", base_dir: Path = Path(".")) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line, source) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None), source) from exc
    where = _Locator(text)
    known = {"problem", "distribution", "discretization", "ensemble", "hum", "backend", "probes", "output"}
    for sec in cp.sections():
        if sec.lower() not in known:
            raise ConfigError(f"unknown section [{sec}]", where(sec.lower()), source)

    kw: dict = {"base_dir": base_dir}

    def get(section, key, conv, dest=None):
        if not cp.has_option(section, key):
            return
        raw = cp.get(section, key).strip()
        if raw == "":
            return
        try:
            kw[dest or key] = conv(raw)
        except (ValueError, ParameterError) as exc:
            raise ConfigError(f"[{section}] {dest or key} = {raw!r}: {exc}", where(section, key), source) from exc

    def as_bool(raw):
        v = raw.lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")

    def pair(raw):
        v = _floats(raw)
        if len(v) != 2:
            raise ValueError("expected two numbers")
        return v

    get("problem", "l", float, "L")
    get("problem", "t", float, "T")
    get("problem", "control", pair)
    get("problem", "y0", str)
    get("discretization", "nx", int, "Nx")
    get("discretization", "nt", int, "Nt")
    get("discretization", "n_modes", int)
    get("discretization", "scheme", lambda s: Scheme(s.lower()))
    get("ensemble", "m", int, "M")
    get("ensemble", "seed", int)
    get("hum", "tol", float)
    get("hum", "k_max", int)
    get("hum", "z_guess", str)
    get("backend", "kind", str.lower, "backend")
    get("backend", "threads", int)
    get("backend", "same_level_adjoint", as_bool)
    get("probes", "names", lambda s: tuple(p.strip() for p in s.split(",") if p.strip()), "probes")
    get("probes", "n_max", int)
    get("probes", "scan_range", pair)
    get("probes", "scan_resolution", float)
    get("probes", "t_ladder", _floats, "T_ladder")
    get("output", "figures", as_bool)

    if "T" not in kw:
        raise ConfigError("[problem] T is required", where("problem"), source)
    if not cp.has_section("distribution") or not cp.has_option("distribution", "family"):
        raise ConfigError("[distribution] family is required", where("distribution"), source)
    fam = cp.get("distribution", "family").strip().lower()
    params = {}
    for key, raw in cp.items("distribution"):
        if key == "family":
            continue
        try:
            params[key] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"[distribution] {key} = {raw!r}: not a number", where("distribution", key), source) from exc
    try:
        kw["distribution"] = DistributionSpec(Family(fam), params)
    except (ValueError, ParameterError) as exc:
        raise ConfigError(f"[distribution] {exc}", where("distribution", "family"), source) from exc

    try:
        return ExperimentConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), None, source) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from exc
    cfg = parse_config(text, str(path), path.parent)
    return cfg.replace(name=path.stem)


PRESETS: dict[str, str] = {
    "test1": """\
[problem]
L = 1
control = 0.25, 0.75
T = 0.4
y0 = sin_pi

[distribution]
family = normal
mean = 0
variance = 1

[discretization]
Nx = 40
Nt = 80

[ensemble]
M = 50
seed = 0

[hum]
tol = 1e-5
k_max = 100
z_guess = sin_pi

[backend]
kind = mc_fd
""",
}
PRESETS["test2"] = (
    PRESETS["test1"]
    .replace("T = 0.4", "T = 0.2")
    .replace("family = normal\nmean = 0\nvariance = 1", "family = cauchy\nloc = 0\nscale = 1")
)


def preset(name: str) -> ExperimentConfig:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    return parse_config(text, f"<preset {name}>").replace(name=name)
