"""``ris-tlm`` command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numeric error, 4 validation
failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .cell import reflection_coefficient
from .config import RunConfig, load_config
from .exceptions import CapacitanceRangeError, ConfigError, GeometryError, SingularityError
from .link import field_map, fmt, received_power
from .synthesis import build_lookup_table, capacitance_error_map, ideal_phase_profile, synthesize_surface
from .validation import run_pec_validation

log = logging.getLogger("ristlm")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4
GAMMA_SOURCES = ("ideal", "normal", "oblique")


def cmd_cell_response(cfg: RunConfig, out: Path) -> list[Path]:
    sc, sw = cfg.scenario, cfg.sweep
    varactor = None if cfg.no_varactor else sc.varactor
    c_values = [None] if cfg.no_varactor else list(sw.c_values)
    path = out / "cell_response.csv"
    with open(path, "w") as fh:
        fh.write("# f_hz,theta_deg,pol,c_farad,gamma_db,phase_deg\n")
        for pol in sw.pols:
            for th in sw.thetas:
                for c in c_values:
                    s = reflection_coefficient(sc.cell, varactor, c, sw.freqs, th, pol, sc.options)
                    c_txt = "nan" if c is None else fmt(c)
                    for f, a, p in zip(sw.freqs, np.atleast_1d(s.amplitude_db), np.atleast_1d(s.phase_deg)):
                        fh.write(f"{fmt(f)},{fmt(np.degrees(th))},{pol.value},{c_txt},{fmt(a)},{fmt(p)}\n")
    return [path]


def cmd_lookup(cfg: RunConfig, out: Path) -> list[Path]:
    sc, lk = cfg.scenario, cfg.lookup
    c_grid = np.linspace(sc.varactor.C_min, sc.varactor.C_max, lk.c_count)
    written = []
    for pol in lk.pols:
        table = build_lookup_table(sc.cell, sc.varactor, sc.f, pol, lk.thetas, c_grid, sc.options)
        p = out / f"lookup_{pol.value}.csv"
        table.to_csv(p)
        written.append(p)
        for view, mat in (("amplitude", table.amplitude), ("phase", np.degrees(table.phase))):
            vp = out / f"lookup_{pol.value}_{view}.csv"
            unit = "linear" if view == "amplitude" else "deg"
            with open(vp, "w") as fh:
                fh.write(f"# rows theta_deg, columns c_farad, values {view} ({unit})\n")
                fh.write("theta_deg," + ",".join(fmt(c) for c in c_grid) + "\n")
                for th, row in zip(lk.thetas, mat):
                    fh.write(fmt(np.degrees(th)) + "," + ",".join(fmt(v) for v in row) + "\n")
            written.append(vp)
    return written


def _meta(cfg, mode):
    sc = cfg.scenario
    return {"scenario_sha256": sc.digest(), "mode": mode, "f_hz": sc.f, "pol": sc.pol.value,
            "M": sc.M, "N": sc.N}


def cmd_synthesize(cfg: RunConfig, out: Path, mode: str | None = None) -> list[Path]:
    modes = [mode] if mode else ["normal", "oblique"]
    maps = {}
    written = []
    for m in modes:
        maps[m] = synthesize_surface(cfg.scenario, m)
        p = out / f"capacitance_{m}.csv"
        maps[m].to_csv(p, _meta(cfg, m))
        written += [p, Path(str(p) + ".meta.json")]
    if len(maps) == 2:
        err = capacitance_error_map(maps["oblique"], maps["normal"])
        p = out / "capacitance_error_pct.csv"
        with open(p, "w") as fh:
            for row in err:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        written.append(p)
    return written


def gamma_for(cfg: RunConfig, source: str) -> np.ndarray:
    sc = cfg.scenario
    if cfg.testing.get("zero_gamma"):
        return np.zeros(sc.shape, dtype=complex)
    if source == "ideal":
        return ideal_phase_profile(sc).ideal_gamma
    return synthesize_surface(sc, source).gamma


def cmd_link(cfg: RunConfig, out: Path, source: str | None = None) -> list[Path]:
    sources = [source] if source else list(GAMMA_SOURCES)
    summary = out / "link_summary.csv"
    written = [summary]
    rows = []
    for src in sources:
        gamma = gamma_for(cfg, src)
        pr = received_power(cfg.scenario, gamma)
        with np.errstate(divide="ignore"):
            pr_db = 10 * np.log10(pr / cfg.scenario.P_t)
        rows.append((src, pr, pr_db))
        print(f"{src}: P_r = {pr:.6e} W ({pr_db:.2f} dB re P_t)")
        fm = field_map(cfg.scenario, cfg.plane, gamma)
        p = out / f"fieldmap_{src}.csv"
        fm.to_csv(p)
        written.append(p)
    with open(summary, "w") as fh:
        fh.write("# gamma_source,pr_watt,pr_db\n")
        for src, pr, db in rows:
            fh.write(f"{src},{fmt(pr)},{fmt(db)}\n")
    return written


def cmd_validate_pec(cfg: RunConfig, out: Path) -> tuple[list[Path], bool]:
    M, N = cfg.validate_shape
    sign = -1 if cfg.testing.get("flip_rcs_sign") else 1
    results = run_pec_validation(cfg.scenario.cell, M, N, cfg.scenario.f, cfg.validate_theta_deg, rcs_sign=sign)
    ok = all(r.passed for r in results)
    p = out / "validate_pec.txt"
    with open(p, "w") as fh:
        for r in results:
            fh.write(r.line() + "\n")
        fh.write(f"overall: {'PASS' if ok else 'FAIL'}\n")
    for r in results:
        print(r.line())
    return [p], ok


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ris-tlm", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["cell-response", "lookup", "synthesize", "link", "validate-pec"])
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--mode", choices=["normal", "oblique"], help="synthesis mode (default: both)")
    ap.add_argument("--gamma", choices=GAMMA_SOURCES, help="reflection source for link (default: all)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except (ConfigError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "cell-response":
                files = cmd_cell_response(cfg, out)
            elif args.command == "lookup":
                files = cmd_lookup(cfg, out)
            elif args.command == "synthesize":
                files = cmd_synthesize(cfg, out, args.mode)
            elif args.command == "link":
                files = cmd_link(cfg, out, args.gamma)
            else:
                files, ok = cmd_validate_pec(cfg, out)
                status = EXIT_OK if ok else EXIT_VALIDATION
    except (CapacitanceRangeError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularityError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for f in files:
        log.info("wrote %s", f)
    return status


if __name__ == "__main__":
    sys.exit(main())
