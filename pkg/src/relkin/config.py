"""Line-oriented run configuration.

    # comment
    [cross_section]
    model = soft        # soft | hard | hardball
    b = 1

Keys are validated against a fixed schema; the first problem is reported
with its line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .crosssec import MODELS, CrossSection
from .grid import LEBEDEV, MomentumGrid


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


FORMATS = ("csv", "json")

# section -> key -> (type, default); None default means "model dependent" or "command dependent"
SCHEMA = {
    "cross_section": {
        "model": (str, None),
        "a": (float, None),
        "b": (float, None),
        "gamma": (float, 0.0),
        "sigma0_scale": (float, 1.0),
        "epsilon": (float, 0.1),
    },
    "grid": {
        "pmax": (float, 12.0),
        "radial_nodes": (int, 30),
        "sphere_nodes": (int, 50),
    },
    "run": {
        "tmax": (float, None),
        "dt": (float, 0.005),
        "nmodes": (int, 4),
        "seed": (int, 0),
    },
    "output": {
        "directory": (str, "out"),
        "formats": (str, "csv,json"),
    },
}
REQUIRED = ("cross_section",)
MODEL_DEFAULTS = {"soft": {"a": 0.0, "b": 1.0}, "hard": {"a": 1.0, "b": 0.0}, "hardball": {"a": 0.0, "b": 0.0}}


@dataclass(frozen=True)
class RunConfig:
    cross_section: CrossSection
    grid: MomentumGrid
    tmax: float | None = None
    dt: float = 0.005
    nmodes: int = 4
    seed: int = 0
    directory: str = "out"
    formats: tuple = FORMATS
    lines: dict = field(default_factory=dict, repr=False, compare=False)


def _convert(kind, raw: str, key: str, line: int):
    if kind is str:
        return raw
    try:
        if kind is int:
            return int(raw, 10)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} = {raw!r} is not a valid {kind.__name__}", line) from None


def parse_config(text: str) -> RunConfig:
    values: dict[str, dict] = {}
    lines: dict[tuple, int] = {}
    section = None
    for num, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"malformed section header {body!r}", num)
            section = body[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]; expected one of {sorted(SCHEMA)}", num)
            if section in values:
                raise ConfigError(f"duplicate section [{section}]", num)
            values[section] = {}
            lines[(section, None)] = num
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", num)
        if section is None:
            raise ConfigError("key outside of any [section]", num)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]; expected one of {sorted(SCHEMA[section])}", num)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", num)
        values[section][key] = _convert(SCHEMA[section][key][0], raw, key, num)
        lines[(section, key)] = num
    for sec in REQUIRED:
        if sec not in values:
            raise ConfigError(f"missing required section [{sec}]")
    return _build(values, lines)


def _get(values, section, key):
    return values.get(section, {}).get(key, SCHEMA[section][key][1])


def _build(values, lines) -> RunConfig:
    def line_of(section, key=None):
        return lines.get((section, key), lines.get((section, None)))

    cs_vals = values["cross_section"]
    model = cs_vals.get("model")
    if model is None:
        raise ConfigError("[cross_section] needs a model", line_of("cross_section"))
    if model not in MODELS:
        raise ConfigError(f"model = {model!r} is not one of {MODELS}", line_of("cross_section", "model"))
    a = cs_vals.get("a", MODEL_DEFAULTS[model]["a"])
    b = cs_vals.get("b", MODEL_DEFAULTS[model]["b"])
    try:
        cs = CrossSection(model, a, b, _get(values, "cross_section", "gamma"),
                          _get(values, "cross_section", "sigma0_scale"), _get(values, "cross_section", "epsilon"))
    except ValueError as exc:
        key = str(exc).split()[0]
        key = {"epsilon_cutoff": "epsilon"}.get(key, key)
        raise ConfigError(str(exc), line_of("cross_section", key if key in SCHEMA["cross_section"] else None)) from None

    sphere = _get(values, "grid", "sphere_nodes")
    if sphere not in LEBEDEV:
        raise ConfigError(f"sphere_nodes = {sphere} must be one of {sorted(LEBEDEV)}", line_of("grid", "sphere_nodes"))
    try:
        grid = MomentumGrid(_get(values, "grid", "pmax"), _get(values, "grid", "radial_nodes"), sphere)
    except ValueError as exc:
        raise ConfigError(str(exc), line_of("grid")) from None

    tmax = _get(values, "run", "tmax")
    if tmax is not None and not tmax > 0:
        raise ConfigError(f"tmax = {tmax} must be > 0", line_of("run", "tmax"))
    dt = _get(values, "run", "dt")
    if not dt > 0:
        raise ConfigError(f"dt = {dt} must be > 0", line_of("run", "dt"))
    nmodes = _get(values, "run", "nmodes")
    if nmodes < 1:
        raise ConfigError(f"nmodes = {nmodes} must be >= 1", line_of("run", "nmodes"))
    seed = _get(values, "run", "seed")
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed = {seed} must lie in [0, 2^64)", line_of("run", "seed"))

    formats = tuple(f.strip() for f in _get(values, "output", "formats").split(",") if f.strip())
    bad = [f for f in formats if f not in FORMATS]
    if bad or not formats:
        raise ConfigError(f"formats must be a comma list drawn from {FORMATS}", line_of("output", "formats"))
    return RunConfig(cs, grid, tmax, dt, nmodes, seed, _get(values, "output", "directory"), formats,
                     {k: v for k, v in lines.items()})


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
