"""Equivalent-circuit model of a varactor-loaded patch-array unit cell.

The cell is a square-patch array printed on a grounded dielectric slab.  Each
patch gap is bridged by a varactor.  Seen from free space, the structure is a
shunt surface impedance (patch array in parallel with the varactor) sitting
on a short-circuited transmission line (the slab).

All public functions broadcast over numpy arrays in ``f``, ``theta`` and
``c_var`` so sweeps and lookup tables are evaluated in a single call.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0
from scipy.constants import mu_0 as MU0

from .exceptions import CapacitanceRangeError, GratingLobeWarning, SingularityError, SlabResonanceWarning

# derived from mu0 and c so that eps0 * mu0 * c^2 == 1 holds exactly; the
# tabulated eps0 is off by ~1e-12, enough to break the TE/TM identity at
# normal incidence near resonance
EPS0 = 1 / (MU0 * C0**2)
ZETA0 = float(MU0 * C0)

# relative threshold for a vanishing denominator in a parallel combination
SINGULAR_RTOL = 1e-12
TAN_FLAG = 1e12


class Polarization(str, enum.Enum):
    TE = "TE"
    TM = "TM"

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"polarization must be TE or TM, got {value!r}") from None


@dataclass(frozen=True)
class UnitCellDesign:
    """Geometry, substrate and conductor of one periodic cell.

    Lengths in meters.  ``eps_r`` is complex with a non-positive imaginary
    part (e.g. ``4.4 - 0.088j``).  ``ground_correction`` set to ``None``
    applies the patch-to-ground capacitance correction automatically when
    ``d / D < 1`` on square lattices.
    """

    D_x: float
    D_y: float
    w_x: float
    w_y: float
    d: float
    eps_r: complex = 4.4 - 0.088j
    sigma_c: float = 58.7e6
    ground_correction: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "eps_r", complex(self.eps_r))
        if not (0 < self.w_x < self.D_x and 0 < self.w_y < self.D_y):
            raise ValueError("gaps must satisfy 0 < w < D along both axes")
        if not self.d > 0:
            raise ValueError("substrate thickness d must be positive")
        if self.eps_r.real < 1 or self.eps_r.imag > 0:
            raise ValueError("eps_r needs Re >= 1 and Im <= 0 (passive dielectric)")
        if not self.sigma_c > 0:
            raise ValueError("sigma_c must be positive")

    @classmethod
    def square(cls, D, w, d, **kwargs) -> "UnitCellDesign":
        return cls(D_x=D, D_y=D, w_x=w, w_y=w, d=d, **kwargs)

    @property
    def is_square(self) -> bool:
        return self.D_x == self.D_y and self.w_x == self.w_y

    def uses_ground_correction(self) -> bool:
        if self.ground_correction is None:
            return self.D_x == self.D_y and self.d / self.D_x < 1
        return bool(self.ground_correction)


@dataclass(frozen=True)
class VaractorModel:
    """Series R-L-C varactor with its tuning range."""

    R_var: float = 0.5
    L_var: float = 0.7e-9
    C_min: float = 0.1e-12
    C_max: float = 0.5e-12

    def __post_init__(self):
        if self.R_var < 0 or self.L_var < 0:
            raise ValueError("R_var and L_var must be non-negative")
        if not 0 < self.C_min <= self.C_max:
            raise ValueError("need 0 < C_min <= C_max")

    def check_range(self, c_var) -> None:
        c = np.asarray(c_var, dtype=float)
        # a few ulps of slack so grid endpoints built with linspace/geomspace pass
        lo, hi = self.C_min * (1 - 1e-12), self.C_max * (1 + 1e-12)
        if np.any(c < lo) or np.any(c > hi):
            raise CapacitanceRangeError(
                f"C_var outside admissible interval [{self.C_min:.6g}, {self.C_max:.6g}] F"
            )


@dataclass(frozen=True)
class IncidentWave:
    f: float
    theta: float = 0.0
    pol: Polarization = Polarization.TE

    def __post_init__(self):
        object.__setattr__(self, "pol", Polarization.parse(self.pol))
        if not self.f > 0:
            raise ValueError("frequency must be positive")
        if not 0 <= self.theta < np.pi / 2:
            raise ValueError("theta must lie in [0, pi/2)")


@dataclass(frozen=True)
class ModelOptions:
    """Switches for the places where the printed formulas are ambiguous.

    strict_skin_depth
        Use ``2 / sqrt(sigma * omega * mu0)`` instead of the standard
        ``sqrt(2 / (sigma * omega * mu0))``.  For auditing only.
    te_factor_exponent
        Power applied to ``k0 / k_eff`` in the TE angular factor (1 or 2).
    """

    strict_skin_depth: bool = False
    te_factor_exponent: int = 1

    def __post_init__(self):
        if self.te_factor_exponent not in (1, 2):
            raise ValueError("te_factor_exponent must be 1 or 2")


DEFAULT_OPTIONS = ModelOptions()


@dataclass(frozen=True)
class ReflectionSample:
    gamma: complex | np.ndarray
    f: float | np.ndarray
    theta: float | np.ndarray
    pol: Polarization
    c_var: float | np.ndarray | None

    @property
    def amplitude(self):
        return np.abs(self.gamma)

    @property
    def amplitude_db(self):
        return 20 * np.log10(np.abs(self.gamma))

    @property
    def phase(self):
        return np.angle(self.gamma)

    @property
    def phase_deg(self):
        return np.degrees(np.angle(self.gamma))


def _squeeze(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def _omega(f):
    return 2 * np.pi * np.asarray(f, dtype=float)


def _check_theta(theta):
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0) or np.any(th >= np.pi / 2):
        raise ValueError("theta must lie in [0, pi/2)")
    return th


def _check_f(f):
    fa = np.asarray(f, dtype=float)
    if np.any(fa <= 0):
        raise ValueError("frequency must be positive")
    return fa


def parallel(z1, z2, where: str = ""):
    """Parallel combination ``z1 z2 / (z1 + z2)``.

    Infinite operands act as open branches.  Raises :class:`SingularityError`
    when the sum of finite operands vanishes relative to their magnitude.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    z1, z2 = np.broadcast_arrays(z1, z2)
    inf1 = ~np.isfinite(z1)
    inf2 = ~np.isfinite(z2)
    den = z1 + z2
    scale = np.maximum(np.abs(z1), np.abs(z2))
    finite = ~inf1 & ~inf2
    bad = finite & (np.abs(den) < SINGULAR_RTOL * scale)
    if np.any(bad):
        idx = np.argwhere(bad)
        loc = tuple(int(i) for i in idx[0]) if idx.size else ()
        raise SingularityError(f"parallel combination is singular{(' in ' + where) if where else ''} at index {loc}")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(finite, z1 * z2 / np.where(finite, den, 1.0), 0j)
    out = np.where(inf1 & ~inf2, z2, out)
    out = np.where(inf2 & ~inf1, z1, out)
    out = np.where(inf1 & inf2, np.inf + 0j, out)
    return _squeeze(out)


def grating_lobe_limit(cell: UnitCellDesign, theta=0.0):
    """Highest frequency (Hz) for which only the fundamental Floquet mode propagates."""
    D = max(cell.D_x, cell.D_y)
    th = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        out = C0 / (D * (np.sqrt(cell.eps_r.real) + np.sin(th)))
    return _squeeze(out)


def check_grating_lobes(cell: UnitCellDesign, f, theta) -> bool:
    """Warn (never raise) when any ``(f, theta)`` is at or above the cutoff."""
    over = np.asarray(f) >= grating_lobe_limit(cell, theta)
    if np.any(over):
        warnings.warn(
            "frequency at or above the grating-lobe limit; homogenized model not valid there",
            GratingLobeWarning,
            stacklevel=3,
        )
        return True
    return False


def effective_permittivity(cell: UnitCellDesign) -> complex:
    return (1 + cell.eps_r) / 2


def patch_ground_capacitance(cell: UnitCellDesign) -> complex:
    """Patch-to-ground correction term (F); negative for finite d/D."""
    if cell.D_x != cell.D_y:
        raise ValueError("patch-to-ground correction requires D_x == D_y")
    D = cell.D_x
    return 2 * D * EPS0 * cell.eps_r / np.pi * np.log(1 - np.exp(-4 * np.pi * cell.d / D))


def patch_capacitance(cell: UnitCellDesign, theta=0.0, pol=Polarization.TE, options: ModelOptions = DEFAULT_OPTIONS):
    """Sheet capacitance of the patch array (complex when the substrate is lossy)."""
    pol = Polarization.parse(pol)
    th = np.asarray(theta, dtype=float)
    eps_eff = effective_permittivity(cell)
    if pol is Polarization.TM:
        cap = 2 * cell.D_x * EPS0 * eps_eff / np.pi * np.log(1 / np.sin(np.pi * cell.w_x / (2 * cell.D_x)))
        cap = cap * np.ones_like(th)
    else:
        cap = 2 * cell.D_y * EPS0 * eps_eff / np.pi * np.log(1 / np.sin(np.pi * cell.w_y / (2 * cell.D_y)))
        # k0/k_eff is frequency independent: 1/sqrt(Re eps_eff)
        ratio = (1 / np.sqrt(eps_eff.real)) ** options.te_factor_exponent
        cap = cap * (1 - ratio * np.sin(th) ** 2 / 2)
    if cell.uses_ground_correction():
        if cell.ground_correction and cell.D_x != cell.D_y:
            raise ValueError("patch-to-ground correction requires D_x == D_y")
        cap = cap - patch_ground_capacitance(cell)
    return _squeeze(cap)


def skin_depth(sigma_c: float, f, strict: bool = False):
    w = _omega(f)
    if strict:
        return 2 / np.sqrt(sigma_c * w * MU0)
    return np.sqrt(2 / (sigma_c * w * MU0))


def patch_resistance(cell: UnitCellDesign, f, options: ModelOptions = DEFAULT_OPTIONS):
    """Ohmic sheet resistance of the patch array (square lattices only)."""
    if not cell.is_square:
        raise ValueError("patch resistance model needs D_x == D_y and w_x == w_y")
    f = _check_f(f)
    if np.isinf(cell.sigma_c):
        return _squeeze(np.zeros_like(f))
    r_s = 1 / (cell.sigma_c * skin_depth(cell.sigma_c, f, options.strict_skin_depth))
    out = (cell.D_x / (cell.D_x - cell.w_x)) ** 2 * r_s
    return _squeeze(out)


def _sheet_resistance(cell, f, options):
    if cell.is_square:
        return patch_resistance(cell, f, options)
    # non-square lattices carry no ohmic term
    return np.zeros_like(np.asarray(f, dtype=float))


def patch_surface_impedance(cell: UnitCellDesign, wave_or_f, theta=None, pol=None, options: ModelOptions = DEFAULT_OPTIONS):
    f, theta, pol = _unpack(wave_or_f, theta, pol)
    check_grating_lobes(cell, f, theta)
    w = _omega(f)
    cap = patch_capacitance(cell, theta, pol, options)
    return _sheet_resistance(cell, f, options) + 1 / (1j * w * cap)


def varactor_impedance(v: VaractorModel, c_var, f):
    v.check_range(c_var)
    f = _check_f(f)
    w = _omega(f)
    c = np.asarray(c_var, dtype=float)
    out = v.R_var + 1j * w * v.L_var + 1 / (1j * w * c)
    return _squeeze(out)


def loaded_surface_impedance(cell, v: VaractorModel | None, c_var, wave_or_f, theta=None, pol=None, options=DEFAULT_OPTIONS):
    """Patch array in parallel with the varactor; ``v=None`` leaves the cell unloaded."""
    f, theta, pol = _unpack(wave_or_f, theta, pol)
    z_patch = patch_surface_impedance(cell, f, theta, pol, options)
    if v is None:
        return z_patch
    z_var = varactor_impedance(v, c_var, f)
    return parallel(z_patch, z_var, "Z_patch || Z_var")


def slab_wavenumber(cell: UnitCellDesign, f, theta=0.0):
    """Normal wavenumber in the substrate, principal branch with Im <= 0."""
    k0 = _omega(f) / C0
    th = np.asarray(theta, dtype=float)
    kz = k0 * np.sqrt(cell.eps_r - np.sin(th) ** 2 + 0j)
    kz = np.where(kz.imag > 0, -kz, kz)
    return _squeeze(kz)


def slab_characteristic_impedance(cell: UnitCellDesign, wave_or_f, theta=None, pol=None):
    """Return ``(Z_c, k_z)`` of the substrate for the given polarization."""
    f, theta, pol = _unpack(wave_or_f, theta, pol)
    w = _omega(f)
    kz = slab_wavenumber(cell, f, theta)
    if pol is Polarization.TE:
        z = w * MU0 / kz
    else:
        z = kz / (w * EPS0 * cell.eps_r)
    return z, kz


def grounded_slab_impedance(cell: UnitCellDesign, wave_or_f, theta=None, pol=None):
    f, theta, pol = _unpack(wave_or_f, theta, pol)
    z_c, kz = slab_characteristic_impedance(cell, f, theta, pol)
    t = np.tan(kz * cell.d)
    if np.any(np.abs(t) > TAN_FLAG):
        warnings.warn("grounded slab near its quarter-wave resonance", SlabResonanceWarning, stacklevel=2)
    return 1j * z_c * t


def free_space_impedance(theta=0.0, pol=Polarization.TE):
    """Wave impedance of free space seen along z for oblique incidence."""
    pol = Polarization.parse(pol)
    ct = np.cos(np.asarray(theta, dtype=float))
    out = ZETA0 / ct if pol is Polarization.TE else ZETA0 * ct
    return _squeeze(out)


def ris_input_impedance(cell, v, c_var, wave_or_f, theta=None, pol=None, options=DEFAULT_OPTIONS):
    f, theta, pol = _unpack(wave_or_f, theta, pol)
    z_surf = loaded_surface_impedance(cell, v, c_var, f, theta, pol, options)
    z_d = grounded_slab_impedance(cell, f, theta, pol)
    return parallel(z_surf, z_d, "Z_surf || Z_d")


def reflection_from_impedance(z_v, theta=0.0, pol=Polarization.TE):
    z0 = free_space_impedance(theta, pol)
    return (z_v - z0) / (z_v + z0)


def reflection_coefficient(cell, v, c_var, wave_or_f, theta=None, pol=None, options=DEFAULT_OPTIONS) -> ReflectionSample:
    """Complex reflection coefficient of the loaded cell.

    >>> cell = UnitCellDesign.square(5e-3, 0.5e-3, 1.2e-3)
    >>> s = reflection_coefficient(cell, VaractorModel(), 0.3e-12, IncidentWave(8e9))
    >>> bool(abs(s.gamma) < 1)
    True
    """
    f, theta, pol = _unpack(wave_or_f, theta, pol)
    z_v = ris_input_impedance(cell, v, c_var, f, theta, pol, options)
    gamma = reflection_from_impedance(z_v, theta, pol)
    return ReflectionSample(gamma=gamma, f=f, theta=theta, pol=pol, c_var=c_var)


def freestanding_sheet_response(z_surf, wave_or_theta=0.0, pol=None):
    """Reflection and transmission of an isolated impedance sheet in free space.

    Returns ``(gamma, tau, gamma_tl)`` where ``gamma_tl`` is the same
    reflection obtained from the transmission-line picture (sheet in
    parallel with the free-space load behind it).
    """
    if isinstance(wave_or_theta, IncidentWave):
        theta, pol = wave_or_theta.theta, wave_or_theta.pol
    else:
        theta = wave_or_theta
        pol = Polarization.parse(pol if pol is not None else Polarization.TM)
    z0 = free_space_impedance(theta, pol)
    zs = np.asarray(z_surf, dtype=complex)
    finite = np.isfinite(zs)
    with np.errstate(invalid="ignore", divide="ignore"):
        den = 2 * zs + z0
        if np.any(finite & (np.abs(den) < SINGULAR_RTOL * np.maximum(np.abs(2 * zs), np.abs(z0)))):
            raise SingularityError("freestanding sheet: 2 Z_surf + zeta0 vanishes")
        den = np.where(finite, den, 1.0)
        # an infinite sheet impedance is a transparent sheet
        tau = np.where(finite, 2 * zs / den, 1 + 0j)
        gamma = np.where(finite, -z0 / den, 0j)
    gamma_tl = reflection_from_impedance(parallel(zs, z0 * np.ones(zs.shape), "Z_surf || zeta0"), theta, pol)
    return _squeeze(gamma), _squeeze(tau), _squeeze(gamma_tl)


def _unpack(wave_or_f, theta, pol):
    if isinstance(wave_or_f, IncidentWave):
        return wave_or_f.f, wave_or_f.theta, wave_or_f.pol
    f = _check_f(wave_or_f)
    th = _check_theta(0.0 if theta is None else theta)
    return _squeeze(f), _squeeze(th), Polarization.parse(pol or Polarization.TE)
