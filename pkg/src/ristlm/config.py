"""TOML run configuration shared by every CLI subcommand.

Angles are written in degrees and converted here; everything else is SI.
Unknown sections or keys are rejected with the line they appear on.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cell import ModelOptions, Polarization, UnitCellDesign, VaractorModel
from .exceptions import ConfigError
from .link import LinkScenario, PlaneSpec

SCHEMA = {
    "scenario": {"tx_pos", "rx_pos", "M", "N", "f_hz", "pol", "P_t", "pointing"},
    "scenario.cell": {"D_x", "D_y", "w_x", "w_y", "d", "eps_r", "sigma_c"},
    "scenario.varactor": {"R_var", "C_min", "C_max"},
    "model": {"strict_skin_depth", "strict_gain", "te_factor_exponent", "ground_correction",
              "L_var", "q_t", "q_r", "no_varactor"},
    "sweep": {"f_start_hz", "f_stop_hz", "f_count", "theta_deg", "c_var", "pols"},
    "lookup": {"theta_start_deg", "theta_stop_deg", "theta_count", "c_count", "pols"},
    "map": {"plane", "u_min", "u_max", "v_min", "v_max", "n_u", "n_v", "offset"},
    "validate": {"theta_i_deg", "M", "N"},
    "output": {"dir"},
    "testing": {"zero_gamma", "flip_rcs_sign"},
}


@dataclass
class SweepConfig:
    freqs: np.ndarray
    thetas: np.ndarray  # rad
    c_values: np.ndarray
    pols: list


@dataclass
class LookupConfig:
    thetas: np.ndarray
    c_count: int
    pols: list


@dataclass
class RunConfig:
    scenario: LinkScenario
    sweep: SweepConfig
    lookup: LookupConfig
    plane: PlaneSpec
    no_varactor: bool = False
    validate_theta_deg: float = 38.6
    validate_shape: tuple = (30, 30)
    out_dir: str = "out"
    testing: dict = field(default_factory=dict)


def _line_of(text: str, section: str, key: str | None = None) -> int:
    """1-based line where ``section`` (or ``key`` inside it) is written, 0 if not found."""
    lines = text.splitlines()
    header = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]\s*(#.*)?$")
    any_header = re.compile(r"^\s*\[")
    start = None
    for i, ln in enumerate(lines):
        if header.match(ln):
            start = i
            break
    if start is None:
        return 0
    if key is None:
        return start + 1
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start + 1, len(lines)):
        if any_header.match(lines[i]):
            break
        if pat.match(lines[i]):
            return i + 1
    return start + 1


def _err(text, section, key, msg):
    line = _line_of(text, section, key)
    where = f"line {line}: " if line else ""
    name = f"[{section}]" + (f" {key}" if key else "")
    return ConfigError(f"{where}{name}: {msg}")


def _check_keys(raw: dict, text: str, prefix: str = ""):
    for k, v in raw.items():
        path = f"{prefix}.{k}" if prefix else k
        if isinstance(v, dict):
            if path not in SCHEMA:
                raise _err(text, path, None, "unknown section")
            _check_keys(v, text, path)
        elif prefix not in SCHEMA or k not in SCHEMA[prefix]:
            raise _err(text, prefix or k, k, "unknown key")


def _get(sec: dict, name: str, default, text, section, kind=float):
    if name not in sec:
        return default
    if kind is bool:
        if not isinstance(sec[name], bool):
            raise _err(text, section, name, f"expected true or false, got {sec[name]!r}")
        return sec[name]
    try:
        return kind(sec[name])
    except (TypeError, ValueError) as exc:
        raise _err(text, section, name, f"bad value {sec[name]!r} ({exc})") from None


def _nonempty(values, text, section, key):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise _err(text, section, key, "range is empty")
    return arr


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_config(data.decode())


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    _check_keys(raw, text)

    sc = raw.get("scenario", {})
    cell_sec = sc.get("cell", {})
    var_sec = sc.get("varactor", {})
    model = raw.get("model", {})

    gc = model.get("ground_correction", "auto")
    if gc not in ("auto", True, False):
        raise _err(text, "model", "ground_correction", "must be 'auto', true or false")
    eps = cell_sec.get("eps_r", [4.4, -0.088])
    try:
        eps_r = complex(eps[0], eps[1]) if isinstance(eps, list) else complex(eps)
    except (TypeError, ValueError, IndexError):
        raise _err(text, "scenario.cell", "eps_r", "expected [real, imag] or a number") from None

    def g(sec, name, default, section, kind=float):
        return _get(sec, name, default, text, section, kind)

    try:
        D_x = g(cell_sec, "D_x", 5e-3, "scenario.cell")
        cell = UnitCellDesign(
            D_x=D_x,
            D_y=g(cell_sec, "D_y", D_x, "scenario.cell"),
            w_x=g(cell_sec, "w_x", 0.5e-3, "scenario.cell"),
            w_y=g(cell_sec, "w_y", g(cell_sec, "w_x", 0.5e-3, "scenario.cell"), "scenario.cell"),
            d=g(cell_sec, "d", 1.2e-3, "scenario.cell"),
            eps_r=eps_r,
            sigma_c=g(cell_sec, "sigma_c", 58.7e6, "scenario.cell"),
            ground_correction=None if gc == "auto" else gc,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _err(text, "scenario.cell", None, str(exc)) from None
    try:
        varactor = VaractorModel(
            R_var=g(var_sec, "R_var", 0.5, "scenario.varactor"),
            L_var=g(model, "L_var", 0.7e-9, "model"),
            C_min=g(var_sec, "C_min", 0.1e-12, "scenario.varactor"),
            C_max=g(var_sec, "C_max", 0.5e-12, "scenario.varactor"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _err(text, "scenario.varactor", None, str(exc)) from None
    try:
        options = ModelOptions(
            strict_skin_depth=g(model, "strict_skin_depth", False, "model", bool),
            te_factor_exponent=g(model, "te_factor_exponent", 1, "model", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _err(text, "model", "te_factor_exponent", str(exc)) from None

    try:
        scenario = LinkScenario(
            tx_pos=tuple(sc.get("tx_pos", (-0.4, 0.0, 0.1))),
            rx_pos=tuple(sc.get("rx_pos", (0.2, 0.0, 0.2))),
            M=g(sc, "M", 30, "scenario", int),
            N=g(sc, "N", 30, "scenario", int),
            cell=cell,
            varactor=varactor,
            f=g(sc, "f_hz", 8e9, "scenario"),
            pol=sc.get("pol", "TE"),
            P_t=g(sc, "P_t", 1.0, "scenario"),
            q_t=g(model, "q_t", 2.0, "model"),
            q_r=g(model, "q_r", 2.0, "model"),
            pointing=sc.get("pointing", "center"),
            gain_mode="strict" if g(model, "strict_gain", False, "model", bool) else "corrected",
            options=options,
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _err(text, "scenario", None, str(exc)) from None

    sw = raw.get("sweep", {})
    f_count = g(sw, "f_count", 201, "sweep", int)
    freqs = np.linspace(g(sw, "f_start_hz", 4e9, "sweep"), g(sw, "f_stop_hz", 14e9, "sweep"), max(f_count, 0))
    freqs = _nonempty(freqs, text, "sweep", "f_count")
    if np.any(freqs <= 0):
        raise _err(text, "sweep", "f_start_hz", "frequencies must be positive")
    thetas = np.radians(_nonempty(sw.get("theta_deg", [0.0]), text, "sweep", "theta_deg"))
    if np.any(thetas < 0) or np.any(thetas >= np.pi / 2):
        raise _err(text, "sweep", "theta_deg", "angles must lie in [0, 90)")
    c_values = _nonempty(sw.get("c_var", [0.1e-12, 0.2e-12, 0.3e-12, 0.4e-12, 0.5e-12]), text, "sweep", "c_var")
    sweep = SweepConfig(freqs, thetas, c_values, _pols(sw, text, "sweep"))

    lk = raw.get("lookup", {})
    n_th = g(lk, "theta_count", 81, "lookup", int)
    lk_thetas = _nonempty(np.radians(np.linspace(g(lk, "theta_start_deg", 0.0, "lookup"),
                                                 g(lk, "theta_stop_deg", 80.0, "lookup"), max(n_th, 0))),
                          text, "lookup", "theta_count")
    if np.any(lk_thetas >= np.pi / 2):
        raise _err(text, "lookup", "theta_stop_deg", "angles must stay below 90")
    c_count = g(lk, "c_count", 41, "lookup", int)
    if c_count < 1:
        raise _err(text, "lookup", "c_count", "range is empty")
    lookup = LookupConfig(lk_thetas, c_count, _pols(lk, text, "lookup"))

    mp = raw.get("map", {})
    try:
        plane = PlaneSpec(
            plane=mp.get("plane", "xz"),
            u_range=(g(mp, "u_min", -0.5, "map"), g(mp, "u_max", 0.5, "map")),
            v_range=(g(mp, "v_min", 0.01, "map"), g(mp, "v_max", 0.5, "map")),
            n_u=g(mp, "n_u", 201, "map", int),
            n_v=g(mp, "n_v", 201, "map", int),
            offset=g(mp, "offset", 0.0, "map"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _err(text, "map", None, str(exc)) from None

    val = raw.get("validate", {})
    return RunConfig(
        scenario=scenario,
        sweep=sweep,
        lookup=lookup,
        plane=plane,
        no_varactor=g(model, "no_varactor", False, "model", bool),
        validate_theta_deg=g(val, "theta_i_deg", 38.6, "validate"),
        validate_shape=(g(val, "M", 30, "validate", int), g(val, "N", 30, "validate", int)),
        out_dir=raw.get("output", {}).get("dir", "out"),
        testing=dict(raw.get("testing", {})),
    )


def _pols(sec, text, section):
    vals = sec.get("pols", ["TE", "TM"])
    if not vals:
        raise _err(text, section, "pols", "range is empty")
    try:
        return [Polarization.parse(p) for p in vals]
    except ValueError as exc:
        raise _err(text, section, "pols", str(exc)) from None
