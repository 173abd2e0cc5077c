"""Lookup tables, ideal phase profiles and phase-to-capacitance inversion."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cell import DEFAULT_OPTIONS, ModelOptions, Polarization, UnitCellDesign, VaractorModel, reflection_coefficient
from .link import LinkScenario, cell_geometries, fmt

MODES = ("normal", "oblique")
N_SCAN = 512
# residual phase distance (rad) above which an inversion counts as clamped
CLAMP_TOL = 1e-6

INV_PHI = (math.sqrt(5) - 1) / 2


def wrap_phase(x):
    """Wrap angles into (-pi, pi]."""
    out = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)
    return out[()] if np.ndim(out) == 0 else out


def phase_distance(gamma, target):
    """``|wrap(angle(gamma) - target)|`` in radians."""
    return np.abs(wrap_phase(np.angle(gamma) - target))


@dataclass
class LookupTable:
    cell: UnitCellDesign
    varactor: VaractorModel
    f: float
    pol: Polarization
    theta_grid: np.ndarray
    c_grid: np.ndarray
    gamma: np.ndarray  # [theta, c]
    options: ModelOptions = DEFAULT_OPTIONS

    def __post_init__(self):
        self.theta_grid = np.asarray(self.theta_grid, dtype=float)
        self.c_grid = np.asarray(self.c_grid, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=complex)
        for name, g in (("theta_grid", self.theta_grid), ("c_grid", self.c_grid)):
            if g.ndim != 1 or g.size == 0:
                raise ValueError(f"{name} must be a nonempty 1-D array")
            if np.any(np.diff(g) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
        if self.gamma.shape != (self.theta_grid.size, self.c_grid.size):
            raise ValueError("gamma matrix does not match the grids")

    @property
    def amplitude(self):
        return np.abs(self.gamma)

    @property
    def phase(self):
        return np.angle(self.gamma)

    def interpolate(self, theta, c_var):
        """Bilinear interpolation of Re and Im of gamma on the (theta, C) grid."""
        ti, ts = _bracket(self.theta_grid, theta)
        ci, cs = _bracket(self.c_grid, c_var)
        g = self.gamma
        nt, nc = g.shape
        ti1 = np.minimum(ti + 1, nt - 1)
        ci1 = np.minimum(ci + 1, nc - 1)
        return ((1 - ts) * ((1 - cs) * g[ti, ci] + cs * g[ti, ci1])
                + ts * ((1 - cs) * g[ti1, ci] + cs * g[ti1, ci1]))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# f_hz,pol,theta_rad,c_farad,gamma_re,gamma_im\n")
            for i, th in enumerate(self.theta_grid):
                for j, c in enumerate(self.c_grid):
                    g = self.gamma[i, j]
                    fh.write(f"{fmt(self.f)},{self.pol.value},{fmt(th)},{fmt(c)},{fmt(g.real)},{fmt(g.imag)}\n")

    @classmethod
    def read_csv(cls, path, cell, varactor, options=DEFAULT_OPTIONS) -> "LookupTable":
        rows = []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#") or not line.strip():
                    continue
                f, pol, th, c, re, im = line.strip().split(",")
                rows.append((float(f), pol, float(th), float(c), float(re), float(im)))
        thetas = np.unique([r[2] for r in rows])
        cs = np.unique([r[3] for r in rows])
        gamma = np.array([r[4] + 1j * r[5] for r in rows]).reshape(thetas.size, cs.size)
        return cls(cell, varactor, rows[0][0], Polarization.parse(rows[0][1]), thetas, cs, gamma, options)


def _bracket(grid, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < grid[0]) or np.any(x > grid[-1]):
        raise ValueError("interpolation point outside the table grid")
    if grid.size == 1:
        return np.zeros(x.shape, dtype=int), np.zeros(x.shape)
    i = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, grid.size - 2)
    t = (x - grid[i]) / (grid[i + 1] - grid[i])
    return i, t


def build_lookup_table(cell, varactor, f, pol, theta_grid, c_grid, options=DEFAULT_OPTIONS) -> LookupTable:
    theta_grid = np.asarray(theta_grid, dtype=float)
    c_grid = np.asarray(c_grid, dtype=float)
    if theta_grid.size == 0 or c_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(theta_grid < 0) or np.any(theta_grid >= np.pi / 2):
        raise ValueError("theta grid must lie in [0, pi/2)")
    varactor.check_range(c_grid)
    pol = Polarization.parse(pol)
    T, Cg = np.meshgrid(theta_grid, c_grid, indexing="ij")
    gamma = reflection_coefficient(cell, varactor, Cg, f, T, pol, options).gamma
    return LookupTable(cell, varactor, f, pol, theta_grid, c_grid, gamma, options)


def golden_section_minimize(func, lo, hi, tol=1e-12, max_iter=200):
    """Vectorised golden-section search for the minimiser of a unimodal ``func``.

    ``lo`` and ``hi`` may be arrays; ``func`` is evaluated elementwise on
    arrays of the same shape.  Returns the midpoint of the final bracket.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    width = np.max(np.abs(b - a) / np.maximum(np.abs(b), 1e-300))
    n = 0 if width <= tol else min(max_iter, int(math.ceil(math.log(tol / width) / math.log(INV_PHI))))
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(n):
        left = fc <= fd  # ties keep the lower part of the bracket
        a, b = np.where(left, a, c), np.where(left, d, b)
        c_next = np.where(left, b - INV_PHI * (b - a), d)
        d_next = np.where(left, c, a + INV_PHI * (b - a))
        f_new = func(np.where(left, c_next, d_next))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = c_next, d_next
    return (a + b) / 2


@dataclass
class PhaseInversion:
    c_var: np.ndarray | float
    gamma: np.ndarray | complex
    clamped: np.ndarray | bool
    distance: np.ndarray | float  # residual wrapped phase distance, rad


def invert_phase(cell, varactor, f, pol, theta, target_phase, options=DEFAULT_OPTIONS, n_scan=N_SCAN) -> PhaseInversion:
    """Varactor capacitance whose reflection phase is closest to ``target_phase``.

    Vectorised over ``theta`` and ``target_phase`` (broadcast together).  A
    log-spaced scan over ``[C_min, C_max]`` picks the best bracket, then
    golden-section search refines inside it.  Targets outside the achievable
    span return the nearest achievable phase with ``clamped`` set.
    """
    pol = Polarization.parse(pol)
    theta, target = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(target_phase, dtype=float))
    if np.any(target <= -np.pi) or np.any(target > np.pi):
        raise ValueError("target phase must lie in (-pi, pi]")
    shape = theta.shape
    th = theta.ravel()
    tg = target.ravel()
    scan = np.geomspace(varactor.C_min, varactor.C_max, n_scan)
    if n_scan > 1:
        scan[-1] = varactor.C_max

    def dist(c, rows=slice(None)):
        g = reflection_coefficient(cell, varactor, c, f, th[rows], pol, options).gamma
        return phase_distance(g, tg[rows])

    d_scan = phase_distance(
        reflection_coefficient(cell, varactor, scan[None, :], f, th[:, None], pol, options).gamma, tg[:, None]
    )
    best = np.argmin(d_scan, axis=1)  # first hit wins, i.e. the smaller C on ties
    c_best = scan[best]
    d_best = d_scan[np.arange(best.size), best]
    if n_scan > 1:
        lo = scan[np.maximum(best - 1, 0)]
        hi = scan[np.minimum(best + 1, n_scan - 1)]
        c_ref = golden_section_minimize(dist, lo, hi)
        d_ref = dist(c_ref)
        better = d_ref < d_best
        c_best = np.where(better, c_ref, c_best)
        d_best = np.where(better, d_ref, d_best)
    gamma = reflection_coefficient(cell, varactor, c_best, f, th, pol, options).gamma
    out = PhaseInversion(
        c_var=c_best.reshape(shape),
        gamma=np.asarray(gamma).reshape(shape),
        clamped=(d_best > CLAMP_TOL).reshape(shape),
        distance=d_best.reshape(shape),
    )
    if not shape:
        out = PhaseInversion(float(out.c_var), complex(out.gamma), bool(out.clamped), float(out.distance))
    return out


def capacitance_for_phase(cell, varactor, f, pol, theta, target_phase, options=DEFAULT_OPTIONS) -> PhaseInversion:
    return invert_phase(cell, varactor, f, pol, float(theta), float(target_phase), options)


@dataclass
class PhaseProfile:
    phase: np.ndarray  # (M, N), rad in (-pi, pi]

    def __post_init__(self):
        self.phase = np.asarray(self.phase, dtype=float)
        if np.any(self.phase <= -np.pi) or np.any(self.phase > np.pi):
            raise ValueError("profile phases must lie in (-pi, pi]")

    @property
    def ideal_gamma(self) -> np.ndarray:
        """Lossless reflection coefficients carrying exactly these phases."""
        return np.exp(1j * self.phase)


def ideal_phase_profile(scenario: LinkScenario) -> PhaseProfile:
    """Per-cell phases that bring every TX->cell->RX path into phase at the receiver."""
    g = cell_geometries(scenario)
    return PhaseProfile(wrap_phase(scenario.k0 * (g.r_t + g.r_r)))


@dataclass
class CapacitanceMap:
    c_var: np.ndarray  # (M, N) farads
    gamma: np.ndarray  # achieved gamma at the true per-cell incidence angle
    mode: str
    target: np.ndarray | None = None
    clamped: np.ndarray | None = None
    inversion_theta: np.ndarray | None = None

    def to_csv(self, path, metadata: dict | None = None) -> None:
        with open(path, "w") as fh:
            for row in self.c_var:
                fh.write(",".join(fmt(c) for c in row) + "\n")
        if metadata is not None:
            with open(str(path) + ".meta.json", "w") as fh:
                json.dump(metadata, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @staticmethod
    def read_csv(path) -> np.ndarray:
        return np.loadtxt(path, delimiter=",", ndmin=2)


def synthesize_surface(scenario: LinkScenario, mode: str = "oblique") -> CapacitanceMap:
    """Per-cell varactor states for the ideal phase profile.

    ``normal`` inverts every cell at normal incidence; ``oblique`` inverts at
    the cell's own incidence angle.  Either way the achieved reflection is
    evaluated at the true incidence angle, so ``normal`` shows the detuning
    that oblique incidence causes.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    geom = cell_geometries(scenario)
    target = ideal_phase_profile(scenario).phase
    theta_true = geom.theta_t
    theta_inv = np.zeros_like(theta_true) if mode == "normal" else theta_true
    inv = invert_phase(scenario.cell, scenario.varactor, scenario.f, scenario.pol, theta_inv, target, scenario.options)
    gamma = reflection_coefficient(
        scenario.cell, scenario.varactor, inv.c_var, scenario.f, theta_true, scenario.pol, scenario.options
    ).gamma
    return CapacitanceMap(inv.c_var, gamma, mode, target, inv.clamped, theta_inv)


def capacitance_error_map(map_a, map_b) -> np.ndarray:
    """Elementwise ``|(C_a - C_b) / C_a| * 100`` (C_a is the oblique map)."""
    a = np.asarray(getattr(map_a, "c_var", map_a), dtype=float)
    b = np.asarray(getattr(map_b, "c_var", map_b), dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"map shapes differ: {a.shape} vs {b.shape}")
    return np.abs((a - b) / a) * 100
