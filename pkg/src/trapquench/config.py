"""Run configuration: INI-style key/value files, presets and validation.

Schema (section.key = value):

    [physics]     g_A, g_AB, n_tot, n_max, quad_order
    [dynamics]    T, dt
    [observables] loschmidt, densities, entropy, natural_orbitals,
                  subsystem_le, spectrum, output_dt, density_x,
                  eta, omega, spectrum_check
    [output]      workers, integral_cache

List values are comma separated or ``linspace(start, stop, count)``.
``dt = auto`` picks the largest step allowed by the sampling rule once the
spectrum is known. ``n_max = auto`` means n_max = n_tot and
``quad_order = auto`` means 2*n_max + 2.
"""

from __future__ import annotations

import configparser
import math
import re
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .quench import NYQUIST_PHASE

PRESET_PACKAGE = "trapquench.presets"


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    g_A: float = 25.0
    g_AB: list = field(default_factory=list)
    n_tot: int = 16
    n_max: int | None = None
    quad_order: int | None = None
    T: float = 6 * math.pi
    dt: float | None = None
    loschmidt: bool = True
    densities: bool = False
    entropy: bool = False
    natural_orbitals: bool = False
    subsystem_le: bool = False
    spectrum: bool = False
    output_dt: float = 0.05
    density_x: list = field(default_factory=lambda: list(np.linspace(-6, 6, 241)))
    eta: float = 0.05
    omega: list = field(default_factory=lambda: list(np.linspace(-10, 2, 2401)))
    spectrum_check: bool = False
    workers: int = 1
    integral_cache: str = ""
    warnings: list = field(default_factory=list)

    def to_text(self) -> str:
        """Resolved configuration in the same key/value format it is read from."""
        d = asdict(self)
        out = []
        for section, keys in SCHEMA.items():
            out.append(f"[{section}]")
            for key in keys:
                out.append(f"{key} = {_render(d[key])}")
            out.append("")
        return "\n".join(out)


SCHEMA = {
    "physics": ["g_A", "g_AB", "n_tot", "n_max", "quad_order"],
    "dynamics": ["T", "dt"],
    "observables": ["loschmidt", "densities", "entropy", "natural_orbitals", "subsystem_le", "spectrum",
                    "output_dt", "density_x", "eta", "omega", "spectrum_check"],
    "output": ["workers", "integral_cache"],
}
_KIND = {
    "g_A": float, "g_AB": list, "n_tot": int, "n_max": "auto_int", "quad_order": "auto_int",
    "T": float, "dt": "auto_float",
    "loschmidt": bool, "densities": bool, "entropy": bool, "natural_orbitals": bool,
    "subsystem_le": bool, "spectrum": bool, "output_dt": float, "density_x": list,
    "eta": float, "omega": list, "spectrum_check": bool,
    "workers": int, "integral_cache": str,
}
_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)$")


def _render(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        if len(v) > 3:
            grid = np.linspace(v[0], v[-1], len(v))
            if np.array_equal(grid, np.asarray(v, dtype=float)):
                return f"linspace({float(v[0])!r}, {float(v[-1])!r}, {len(v)})"
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    m = _LINSPACE.match(text)
    if m:
        a, b, n = float(m.group(1)), float(m.group(2)), int(m.group(3))
        return [float(x) for x in np.linspace(a, b, n)]
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_value(key: str, text: str):
    kind = _KIND[key]
    text = text.strip()
    if kind in ("auto_int", "auto_float"):
        if text.lower() == "auto":
            return None
        return int(text) if kind == "auto_int" else float(text)
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is list:
        return _parse_list(text)
    if kind is float:
        return float(eval_number(text))
    return kind(text)


def eval_number(text: str) -> float:
    """Float literal, or a multiple of pi such as ``6*pi``."""
    t = text.replace(" ", "").lower()
    if t.endswith("pi"):
        head = t[:-2].rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    return float(t)


def load_text(text: str, base: RunConfig | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    cfg = base or RunConfig()
    errors = []
    for section in parser.sections():
        if section not in SCHEMA:
            errors.append(f"{section}: unknown section")
            continue
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                errors.append(f"{section}.{key}: unknown key")
                continue
            try:
                setattr(cfg, key, _parse_value(key, raw))
            except ValueError as exc:
                errors.append(f"{section}.{key}: {exc}")
    if errors:
        raise ConfigError(errors)
    return cfg


def load(path) -> RunConfig:
    return load_text(Path(path).read_text())


def preset_names() -> list[str]:
    files = resources.files(PRESET_PACKAGE).iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".conf"))


def preset_text(name: str) -> str:
    if name not in preset_names():
        raise ConfigError([f"preset: unknown preset {name!r}; available: {', '.join(preset_names())}"])
    return resources.files(PRESET_PACKAGE).joinpath(f"{name}.conf").read_text()


def load_preset(name: str) -> RunConfig:
    return load_text(preset_text(name))


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``section.key=value`` (or bare ``key=value``) overrides."""
    errors = []
    for item in overrides:
        if "=" not in item:
            errors.append(f"override {item!r}: expected key=value")
            continue
        path, raw = item.split("=", 1)
        path = path.strip()
        key = path.split(".", 1)[-1]
        section = next((s for s, keys in SCHEMA.items() if key in keys), None)
        if section is None or ("." in path and path.split(".", 1)[0] != section):
            errors.append(f"{path}: unknown key")
            continue
        try:
            setattr(cfg, key, _parse_value(key, raw))
        except ValueError as exc:
            errors.append(f"{section}.{key}: {exc}")
    if errors:
        raise ConfigError(errors)
    return cfg


def validate_config(cfg: RunConfig) -> RunConfig:
    """Resolve defaults and check every rule; raises ConfigError listing all violations."""
    errors, warns = [], []
    if not math.isfinite(cfg.g_A) or cfg.g_A < 0:
        errors.append(f"physics.g_A: must be finite and >= 0, got {cfg.g_A}")
    for i, g in enumerate(cfg.g_AB):
        if not math.isfinite(g) or g < 0:
            errors.append(f"physics.g_AB[{i}]: must be finite and >= 0, got {g}")
        elif math.isfinite(cfg.g_A) and g > cfg.g_A:
            warns.append(f"physics.g_AB[{i}]: {g} > g_A={cfg.g_A}, outside the studied range [0, g_A]")
    if len(set(cfg.g_AB)) != len(cfg.g_AB):
        errors.append("physics.g_AB: duplicate sweep values")
    if cfg.n_tot < 0:
        errors.append(f"physics.n_tot: must be >= 0, got {cfg.n_tot}")
    n_max = cfg.n_tot if cfg.n_max is None else cfg.n_max
    if n_max < 1:
        errors.append(f"physics.n_max: must be >= 1, got {n_max}")
    if cfg.n_tot > 3 * n_max:
        errors.append(f"physics.n_tot: {cfg.n_tot} exceeds 3*n_max = {3 * n_max}")
    quad = 2 * n_max + 2 if cfg.quad_order is None else cfg.quad_order
    if quad < 2 * n_max + 2:
        errors.append(f"physics.quad_order: {quad} below 2*n_max+2 = {2 * n_max + 2}")
    if not cfg.T > 0:
        errors.append(f"dynamics.T: must be > 0, got {cfg.T}")
    if cfg.dt is not None:
        # the truncated spectrum spans at least the non-interacting shells 0..n_tot
        bound = NYQUIST_PHASE / max(cfg.n_tot, 1)
        if not cfg.dt > 0:
            errors.append(f"dynamics.dt: must be > 0, got {cfg.dt}")
        elif cfg.dt > bound:
            errors.append(f"dynamics.dt: {cfg.dt} violates (E_max - E_0)*dt <= pi/4; "
                          f"bound for n_tot={cfg.n_tot} is dt <= {bound:.6g}")
    if not cfg.output_dt > 0:
        errors.append(f"observables.output_dt: must be > 0, got {cfg.output_dt}")
    if cfg.spectrum or cfg.spectrum_check:
        if not cfg.eta > 0:
            errors.append(f"observables.eta: must be > 0, got {cfg.eta}")
        if len(cfg.omega) < 2:
            errors.append("observables.omega: need at least two frequencies")
    if cfg.densities and len(cfg.density_x) < 2:
        errors.append("observables.density_x: need at least two positions")
    if cfg.workers < 1:
        errors.append(f"output.workers: must be >= 1, got {cfg.workers}")
    if errors:
        raise ConfigError(errors)
    cfg.n_max = n_max
    cfg.quad_order = quad
    cfg.warnings = warns
    for w in warns:
        warnings.warn(w, stacklevel=2)
    return cfg
