"""Scenario files: a sectioned ``key = value`` format read with :mod:`configparser`.

Example (every key of the format is listed in the README)::

    [problem]
    alpha = 0.6
    T = 1.0
    nt = 1001

    [domain]
    length = 1.0
    n_modes = 20

    [actuator]
    type = zone
    support = 0.1:0.4
    profile = 1.0

    [region]
    intervals = 0.2:0.5

    [target]
    ambient_dim = 5
    g_dim = 2

    [initial]
    coefficients = 1.0, 0.5

Unknown sections or keys are rejected, and every error names the key path
(``section.key``) that caused it.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from frachum.errors import (
    DegenerateActuatorError,
    DomainError,
    FracHUMError,
    RankDeficiencyError,
    ScenarioError,
)
from frachum.fracops import TimeGrid
from frachum.hum import HUMProblem
from frachum.mlf import FracOrder
from frachum.spectral import (
    PointActuator,
    Region,
    RegionGrid,
    _region_grid,
    SpectralBasis,
    SpectralField,
    ZoneActuator,
    build_target,
)

__all__ = ["PRESETS", "Scenario", "parse_scenario", "parse_scenario_text"]

_SCHEMA = {
    "problem": {"alpha", "T", "nt", "ridge"},
    "domain": {"length", "n_modes", "nx"},
    "actuator": {"type", "support", "profile", "location"},
    "region": {"intervals"},
    "target": {"ambient_dim", "g_dim", "seeds"},
    "initial": {"coefficients", "preset"},
    "energy": {"run_oracle", "epsilon_sweep"},
    "output": {"directory"},
}
_REQUIRED = {
    "problem": {"alpha"},
    "actuator": {"type"},
    "region": {"intervals"},
    "target": {"ambient_dim", "g_dim"},
}

PRESETS = {
    "mode1": (1.0,),
    "reference": (1.0, 0.5),
}
_SEED = re.compile(r"^(mode|sin|poly)(\d+)$")


@dataclass(frozen=True)
class Scenario:
    """A validated scenario. Field names follow the file's ``section.key`` layout."""

    alpha: float
    T: float = 1.0
    nt: int = 1001
    length: float = 1.0
    n_modes: int = 20
    nx: int | None = None
    actuator: ZoneActuator | PointActuator = field(default_factory=lambda: ZoneActuator(0.1, 0.4))
    region: Region = field(default_factory=lambda: Region.interval(0.2, 0.5))
    ambient_dim: int = 5
    g_dim: int = 2
    seeds: tuple[str, ...] | None = None
    initial: tuple[float, ...] = (1.0, 0.5)
    run_oracle: bool = True
    epsilon_sweep: tuple[float, ...] = (1e-2, 1e-4, 1e-6)
    ridge: bool = False
    output_dir: str | None = None

    def basis(self) -> SpectralBasis:
        return SpectralBasis(self.length, self.n_modes, self.nx)

    def initial_state(self, basis: SpectralBasis | None = None) -> SpectralField:
        basis = self.basis() if basis is None else basis
        c = np.zeros(basis.N)
        c[: len(self.initial)] = self.initial
        return basis.field(c)

    def build_problem(self) -> HUMProblem:
        basis = self.basis()
        grid = _region_grid(basis, self.region)
        seeds = None if self.seeds is None else [_seed_vector(s, grid) for s in self.seeds]
        target = build_target(grid, basis, self.ambient_dim, self.g_dim, seeds)
        return HUMProblem(basis, self.actuator, target, FracOrder(self.alpha), TimeGrid(self.T, self.nt))


def _seed_vector(token: str, grid: RegionGrid) -> np.ndarray:
    kind, k = _SEED.match(token).groups()
    k = int(k)
    x = grid.nodes
    lo, hi = grid.region.intervals[0][0], grid.region.intervals[-1][1]
    if kind == "mode":
        return grid.modes[k - 1]
    if kind == "sin":
        return np.sin(k * math.pi * (x - lo) / (hi - lo))
    return ((2.0 * x - lo - hi) / (hi - lo)) ** k


# {{{ parsing


class _Reader:
    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp

    def raw(self, section: str, key: str) -> str | None:
        if not self.cp.has_section(section) or not self.cp.has_option(section, key):
            return None
        return self.cp.get(section, key).strip()

    def number(self, section, key, default=None, kind=float):
        text = self.raw(section, key)
        path = f"{section}.{key}"
        if text is None:
            if default is None and key in _REQUIRED.get(section, ()):
                raise ScenarioError(path, "is required")
            return default
        try:
            if kind is int:
                value = int(text)
            else:
                value = float(text)
        except ValueError:
            raise ScenarioError(path, f"must be {'an integer' if kind is int else 'a number'}, got {text!r}") from None
        if kind is float and not math.isfinite(value):
            raise ScenarioError(path, f"must be finite, got {text!r}")
        return value

    def flag(self, section, key, default: bool) -> bool:
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            return self.cp.getboolean(section, key)
        except ValueError:
            raise ScenarioError(f"{section}.{key}", f"must be a boolean, got {text!r}") from None

    def numbers(self, section, key) -> tuple[float, ...] | None:
        text = self.raw(section, key)
        if text is None:
            return None
        if not text:
            return ()
        try:
            vals = tuple(float(t) for t in re.split(r"[,\s]+", text) if t)
        except ValueError:
            raise ScenarioError(f"{section}.{key}", f"must be a comma-separated list of numbers, got {text!r}") from None
        if not all(map(math.isfinite, vals)):
            raise ScenarioError(f"{section}.{key}", "entries must be finite")
        return vals

    def intervals(self, section, key) -> tuple[tuple[float, float], ...]:
        text = self.raw(section, key)
        path = f"{section}.{key}"
        if not text:
            raise ScenarioError(path, "is required")
        out = []
        for part in text.split(","):
            a, sep, b = part.strip().partition(":")
            try:
                if not sep:
                    raise ValueError
                out.append((float(a), float(b)))
            except ValueError:
                raise ScenarioError(path, f"intervals are written a:b, got {part.strip()!r}") from None
        return tuple(out)


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate scenario text; see :func:`parse_scenario`."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(source, f"is not a valid scenario file: {exc}") from None
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ScenarioError(section, "is not a known section")
        for key in cp.options(section):
            if key not in _SCHEMA[section]:
                raise ScenarioError(f"{section}.{key}", "is not a known key")
    for section, keys in _REQUIRED.items():
        for key in sorted(keys):
            if not cp.has_option(section, key):
                raise ScenarioError(f"{section}.{key}", "is required")
    r = _Reader(cp)

    alpha = r.number("problem", "alpha")
    if not 0.0 < alpha <= 1.0:
        raise ScenarioError("problem.alpha", f"must lie in (0,1], got {alpha!r}")
    T = r.number("problem", "T", 1.0)
    if not T > 0.0:
        raise ScenarioError("problem.T", f"must be positive, got {T!r}")
    nt = r.number("problem", "nt", 1001, int)
    if nt < 3:
        raise ScenarioError("problem.nt", f"must be at least 3, got {nt}")
    ridge = r.flag("problem", "ridge", False)

    length = r.number("domain", "length", 1.0)
    if not length > 0.0:
        raise ScenarioError("domain.length", f"must be positive, got {length!r}")
    n_modes = r.number("domain", "n_modes", 20, int)
    if n_modes < 1:
        raise ScenarioError("domain.n_modes", f"must be at least 1, got {n_modes}")
    nx = r.number("domain", "nx", None, int)
    if nx is not None and nx < 3:
        raise ScenarioError("domain.nx", f"must be at least 3, got {nx}")

    actuator = _parse_actuator(r, length)

    try:
        region = Region(r.intervals("region", "intervals"))
        region.check_within(length)
    except FracHUMError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("region.intervals", str(exc)) from None

    ambient_dim = r.number("target", "ambient_dim", kind=int)
    g_dim = r.number("target", "g_dim", kind=int)
    if not 1 <= ambient_dim:
        raise ScenarioError("target.ambient_dim", f"must be at least 1, got {ambient_dim}")
    if not 0 <= g_dim <= ambient_dim:
        raise ScenarioError("target.g_dim", f"must lie in [0, ambient_dim={ambient_dim}], got {g_dim}")
    seeds = None
    seed_text = r.raw("target", "seeds")
    if seed_text:
        seeds = tuple(t.strip() for t in seed_text.split(",") if t.strip())
        for tok in seeds:
            m = _SEED.match(tok)
            if not m or int(m.group(2)) < (1 if m.group(1) != "poly" else 0):
                raise ScenarioError("target.seeds", f"unknown seed {tok!r}; use modeK, sinK or polyK")
            if m.group(1) == "mode" and int(m.group(2)) > n_modes:
                raise ScenarioError("target.seeds", f"{tok} exceeds domain.n_modes = {n_modes}")
        if len(seeds) != ambient_dim:
            raise ScenarioError("target.seeds", f"lists {len(seeds)} seeds, target.ambient_dim is {ambient_dim}")
    elif ambient_dim > n_modes:
        raise ScenarioError("target.ambient_dim", f"exceeds domain.n_modes = {n_modes}")

    initial = _parse_initial(r, n_modes)

    run_oracle = r.flag("energy", "run_oracle", True)
    sweep = r.numbers("energy", "epsilon_sweep")
    sweep = (1e-2, 1e-4, 1e-6) if sweep is None else sweep
    if any(e <= 0.0 for e in sweep):
        raise ScenarioError("energy.epsilon_sweep", "entries must be positive")

    out_dir = r.raw("output", "directory") or None
    scenario = Scenario(
        alpha=alpha, T=T, nt=nt, length=length, n_modes=n_modes, nx=nx,
        actuator=actuator, region=region, ambient_dim=ambient_dim, g_dim=g_dim,
        seeds=seeds, initial=initial, run_oracle=run_oracle, epsilon_sweep=sweep,
        ridge=ridge, output_dir=out_dir,
    )
    # invariants that need the basis: actuator visibility, independent seeds
    try:
        scenario.build_problem()
    except DegenerateActuatorError as exc:
        key = "actuator.location" if _kind(actuator) == "pointwise" else "actuator.support"
        raise ScenarioError(key, str(exc)) from None
    except RankDeficiencyError as exc:
        raise ScenarioError("target.seeds" if seeds else "target.ambient_dim", str(exc)) from None
    except DomainError as exc:
        raise ScenarioError("target", str(exc)) from None
    return scenario


def _kind(actuator) -> str:
    return "pointwise" if isinstance(actuator, PointActuator) else "zone"


def _parse_actuator(r: _Reader, length: float):
    kind = r.raw("actuator", "type").lower()
    if kind == "zone":
        for bad in ("location",):
            if r.raw("actuator", bad) is not None:
                raise ScenarioError(f"actuator.{bad}", "does not apply to a zone actuator")
        ivs = r.intervals("actuator", "support")
        if len(ivs) != 1:
            raise ScenarioError("actuator.support", "must be a single interval a:b")
        (a, b), = ivs
        if not (0.0 <= a < b <= length):
            raise ScenarioError("actuator.support", f"must satisfy 0 <= a < b <= {length}, got {a}:{b}")
        prof_text = r.raw("actuator", "profile")
        profile: float | tuple = 1.0
        if prof_text:
            if ":" in prof_text:
                pts = r.intervals("actuator", "profile")
                profile = (tuple(p[0] for p in pts), tuple(p[1] for p in pts))
            else:
                profile = r.number("actuator", "profile")
        try:
            return ZoneActuator(a, b, profile)
        except FracHUMError as exc:
            raise ScenarioError("actuator.profile", str(exc)) from None
    if kind == "pointwise":
        for bad in ("support", "profile"):
            if r.raw("actuator", bad) is not None:
                raise ScenarioError(f"actuator.{bad}", "does not apply to a pointwise actuator")
        loc = r.number("actuator", "location")
        if loc is None:
            raise ScenarioError("actuator.location", "is required for a pointwise actuator")
        if not 0.0 < loc < length:
            raise ScenarioError("actuator.location", f"must lie in (0, {length}), got {loc}")
        return PointActuator(loc)
    raise ScenarioError("actuator.type", f"must be 'zone' or 'pointwise', got {kind!r}")


def _parse_initial(r: _Reader, n_modes: int) -> tuple[float, ...]:
    coeffs = r.numbers("initial", "coefficients")
    preset = r.raw("initial", "preset")
    if coeffs is not None and preset is not None:
        raise ScenarioError("initial.preset", "cannot be combined with initial.coefficients")
    if preset is not None:
        if preset not in PRESETS:
            raise ScenarioError("initial.preset", f"must be one of {sorted(PRESETS)}, got {preset!r}")
        coeffs = PRESETS[preset]
    if coeffs is None:
        coeffs = PRESETS["reference"]
    if len(coeffs) > n_modes:
        raise ScenarioError("initial.coefficients", f"lists {len(coeffs)} values, domain.n_modes is {n_modes}")
    return tuple(coeffs)


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises :class:`ScenarioError` (exit code 2) naming the offending key path.
    """
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(str(p), f"cannot be read: {exc.strerror}") from None
    return parse_scenario_text(text, str(p))


# }}}
