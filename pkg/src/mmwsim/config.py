"""Experiment configuration: a sectioned ``key = value`` text file.

An empty file yields the default single-cell UMi street-canyon setup:
28 GHz, 100 MHz, 256-element cross-polarized BS URA, 8-element
cross-polarized UE URAs, 3 users, 1000 drops. Every key is listed in
:data:`DEFAULT_CONFIG_TEXT`; unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Tuple

from .antenna import ArrayGeometry, ElementPattern, Polarization
from .errors import ConfigError
from .scenario import Environment, LinkBudget, LinkState

__all__ = [
    "DEFAULT_SEED",
    "MODELS",
    "SystemConfig",
    "parse_config",
    "parse_config_text",
    "serialize_config",
]

DEFAULT_SEED = 20170924
MODELS = ("3gpp", "nyusim", "rayleigh")


def _sec(name: str, doc: str = ""):
    return {"section": name, "doc": doc}


@dataclass(frozen=True)
class SystemConfig:
    # [experiment]
    seed: int = field(default=DEFAULT_SEED, metadata=_sec("experiment", "unsigned 64-bit campaign seed"))
    drops: int = field(default=1000, metadata=_sec("experiment", "independent user drops per model"))
    users: int = field(default=3, metadata=_sec("experiment", "users per drop (one stream, one RF chain each)"))
    models: Tuple[str, ...] = field(default=MODELS, metadata=_sec("experiment", "subset of 3gpp, nyusim, rayleigh"))
    scenario: str = field(default="umi", metadata=_sec("experiment", "umi or uma"))
    # [link]
    tx_power_dbm: float = field(default=30.0, metadata=_sec("link"))
    carrier_ghz: float = field(default=28.0, metadata=_sec("link"))
    bandwidth_mhz: float = field(default=100.0, metadata=_sec("link"))
    noise_figure_db: float = field(default=10.0, metadata=_sec("link"))
    snr_threshold_db: float = field(default=5.0, metadata=_sec("link"))
    coverage_fraction: float = field(default=0.95, metadata=_sec("link"))
    min_distance_m: float = field(default=10.0, metadata=_sec("link"))
    radius_state: str = field(default="NLOS", metadata=_sec("link", "link state whose path loss sizes the cell"))
    # [arrays]
    bs_rows: int = field(default=8, metadata=_sec("arrays"))
    bs_cols: int = field(default=16, metadata=_sec("arrays"))
    bs_polarization: str = field(default="cross", metadata=_sec("arrays"))
    bs_max_gain_db: float = field(default=10.0, metadata=_sec("arrays", "3GPP element pattern maximum gain"))
    ue_rows: int = field(default=2, metadata=_sec("arrays"))
    ue_cols: int = field(default=2, metadata=_sec("arrays"))
    ue_polarization: str = field(default="cross", metadata=_sec("arrays"))
    spacing: float = field(default=0.5, metadata=_sec("arrays", "element spacing in wavelengths"))
    # [geometry]
    ue_height_m: float = field(default=1.5, metadata=_sec("geometry"))
    sector_half_width_deg: float = field(default=60.0, metadata=_sec("geometry", "users dropped within +/- this bearing of BS boresight"))
    # [model]
    breakpoint: bool = field(default=False, metadata=_sec("model", "two-slope LOS path loss beyond the breakpoint distance"))
    pathloss_table: str = field(default="", metadata=_sec("model", "path-loss CSV; empty = shipped defaults"))
    lsp_table: str = field(default="", metadata=_sec("model", "3GPP LSP CSV; empty = shipped defaults"))
    nyusim_table: str = field(default="", metadata=_sec("model", "NYUSIM CSV; empty = shipped defaults"))

    def __post_init__(self):
        checks = [
            ("drops", self.drops >= 1, "must be at least 1"),
            ("users", self.users >= 1, "must be at least 1"),
            ("seed", 0 <= self.seed < 2**64, "must be an unsigned 64-bit integer"),
            ("models", len(self.models) > 0 and set(self.models) <= set(MODELS),
             f"must be a non-empty subset of {', '.join(MODELS)}"),
            ("scenario", self.scenario in ("umi", "uma"), "must be umi or uma"),
            ("bandwidth_mhz", self.bandwidth_mhz > 0, "must be positive"),
            ("coverage_fraction", 0 < self.coverage_fraction < 1, "must lie in (0, 1)"),
            ("carrier_ghz", 0.5 <= self.carrier_ghz <= 100, "must lie in [0.5, 100]"),
            ("min_distance_m", self.min_distance_m >= 1, "must be at least 1 m"),
            ("radius_state", self.radius_state in ("LOS", "NLOS"), "must be LOS or NLOS"),
            ("bs_rows", self.bs_rows >= 1, "must be at least 1"),
            ("bs_cols", self.bs_cols >= 1, "must be at least 1"),
            ("ue_rows", self.ue_rows >= 1, "must be at least 1"),
            ("ue_cols", self.ue_cols >= 1, "must be at least 1"),
            ("bs_polarization", self.bs_polarization in ("cross", "single"), "must be cross or single"),
            ("ue_polarization", self.ue_polarization in ("cross", "single"), "must be cross or single"),
            ("spacing", self.spacing > 0, "must be positive"),
            ("ue_height_m", 1.0 <= self.ue_height_m <= 13.0, "must lie in [1, 13] m"),
            ("sector_half_width_deg", 0 < self.sector_half_width_deg <= 180, "must lie in (0, 180]"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{key}: {msg} (got {getattr(self, key)!r})", key)

    @property
    def environment(self) -> Environment:
        return Environment.UMI if self.scenario == "umi" else Environment.UMA

    @property
    def bs_array(self) -> ArrayGeometry:
        return ArrayGeometry(self.bs_rows, self.bs_cols, self.spacing, Polarization(self.bs_polarization),
                             ElementPattern.THREEGPP, self.bs_max_gain_db)

    @property
    def ue_array(self) -> ArrayGeometry:
        return ArrayGeometry(self.ue_rows, self.ue_cols, self.spacing, Polarization(self.ue_polarization),
                             ElementPattern.OMNI, 0.0)

    @property
    def link_budget(self) -> LinkBudget:
        """Cell-sizing budget; full BS and UE array gains count on top of the element gain."""
        array_gain = 10.0 * math.log10(self.bs_array.n_elements * self.ue_array.n_elements)
        return LinkBudget(self.tx_power_dbm, self.carrier_ghz, self.bandwidth_mhz, self.noise_figure_db,
                          self.bs_max_gain_db, array_gain, self.snr_threshold_db, self.coverage_fraction)

    @property
    def sizing_state(self) -> LinkState:
        return LinkState(self.radius_state)

    def with_overrides(self, **kwargs) -> "SystemConfig":
        clean = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **clean)


_FIELDS = {f.name: f for f in fields(SystemConfig)}
_SECTIONS = {}
for _f in fields(SystemConfig):
    _SECTIONS.setdefault(_f.metadata["section"], []).append(_f.name)


def _locate(text: str, section: Optional[str], key: Optional[str] = None) -> int:
    """1-based line of ``key`` inside ``[section]`` (or of the section header)."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
            return i
    return 0


def _convert(name: str, raw: str):
    default = _FIELDS[name].default
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        items = tuple(s.strip().lower() for s in raw.split(",") if s.strip())
        return items
    if name == "radius_state":
        return raw.upper()
    if name in ("scenario", "bs_polarization", "ue_polarization"):
        return raw.lower()
    return raw


def parse_config_text(text: str, source: str = "<config>") -> SystemConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: malformed config: {exc}") from exc

    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{source}:{_locate(text, section)}: unknown section [{section}]")
        for key, raw in parser.items(section):
            line = _locate(text, section, key)
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{source}:{line}: unknown key '{key}' in [{section}]")
            try:
                values[key] = _convert(key, raw)
            except ValueError as exc:
                raise ConfigError(f"{source}:{line}: key '{key}': {exc}") from exc
    try:
        return SystemConfig(**values)
    except ConfigError as exc:
        key = exc.args[1] if len(exc.args) > 1 else None
        section = _FIELDS[key].metadata["section"] if key in _FIELDS else None
        line = _locate(text, section, key) if key else 0
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: {exc.args[0]}") from None


def parse_config(path) -> SystemConfig:
    """Read and validate a config file.

    Raises
    ------
    ConfigError
        For a missing file, malformed syntax, unknown keys or invalid
        values; the message names the offending key and line.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc.strerror or exc}") from exc
    return parse_config_text(text, str(p))


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: SystemConfig) -> str:
    """Render ``config`` in the same format :func:`parse_config_text` reads."""
    data = asdict(config)
    out = []
    for section, names in _SECTIONS.items():
        out.append(f"[{section}]")
        for name in names:
            doc = _FIELDS[name].metadata.get("doc")
            if doc:
                out.append(f"# {doc}")
            value = data[name]
            out.append(f"{name} = {_format(tuple(value) if isinstance(value, list) else value)}")
        out.append("")
    return "\n".join(out)


DEFAULT_CONFIG_TEXT = serialize_config(SystemConfig())
