"""RIS-assisted link budget: geometry, antenna gains, cell RCS, coherent sum.

The surface lies in the xy-plane centred on the origin.  Cell ``(m, n)``
(1-based, row ``m`` along y, column ``n`` along x) sits at
``((n - (N+1)/2) D_x, (m - (M+1)/2) D_y, 0)``.  Time dependence is
``exp(+j w t)`` so a path of length ``r`` contributes ``exp(-j k r)``.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.constants import c as C0
from scipy.special import beta as beta_fn

from .cell import DEFAULT_OPTIONS, ModelOptions, Polarization, UnitCellDesign, VaractorModel
from .exceptions import FarFieldWarning, GeometryError

POINTING_MODES = ("center", "normal")
GAIN_MODES = ("corrected", "strict")


@dataclass(frozen=True)
class LinkScenario:
    """Transmitter, receiver and an ``M x N`` surface of identical cells.

    ``pointing`` selects the antenna boresight: ``"center"`` aims both
    antennas at the surface centre, ``"normal"`` points them straight down
    the surface normal so the gain angle equals the cell incidence angle.
    """

    tx_pos: tuple
    rx_pos: tuple
    M: int
    N: int
    cell: UnitCellDesign
    varactor: VaractorModel = field(default_factory=VaractorModel)
    f: float = 8e9
    pol: Polarization = Polarization.TE
    P_t: float = 1.0
    q_t: float = 2.0
    q_r: float = 2.0
    pointing: str = "center"
    gain_mode: str = "corrected"
    options: ModelOptions = DEFAULT_OPTIONS

    def __post_init__(self):
        object.__setattr__(self, "tx_pos", tuple(float(x) for x in self.tx_pos))
        object.__setattr__(self, "rx_pos", tuple(float(x) for x in self.rx_pos))
        object.__setattr__(self, "pol", Polarization.parse(self.pol))
        if len(self.tx_pos) != 3 or len(self.rx_pos) != 3:
            raise GeometryError("tx_pos and rx_pos must be 3-vectors")
        if self.tx_pos[2] <= 0 or self.rx_pos[2] <= 0:
            raise GeometryError("transmitter and receiver must both lie above the surface (z > 0)")
        if self.M < 1 or self.N < 1:
            raise GeometryError("M and N must be at least 1")
        if not self.P_t > 0:
            raise ValueError("P_t must be positive")
        if self.q_t < 0 or self.q_r < 0:
            raise ValueError("antenna exponents must be non-negative")
        if not self.f > 0:
            raise ValueError("frequency must be positive")
        if self.pointing not in POINTING_MODES:
            raise ValueError(f"pointing must be one of {POINTING_MODES}")
        if self.gain_mode not in GAIN_MODES:
            raise ValueError(f"gain_mode must be one of {GAIN_MODES}")

    @property
    def wavelength(self) -> float:
        return C0 / self.f

    @property
    def k0(self) -> float:
        return 2 * np.pi * self.f / C0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.M, self.N)

    def replace(self, **changes) -> "LinkScenario":
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return LinkScenario(**kw)

    def swapped(self) -> "LinkScenario":
        return self.replace(tx_pos=self.rx_pos, rx_pos=self.tx_pos, q_t=self.q_r, q_r=self.q_t)

    def digest(self) -> str:
        """Stable hash of every scenario field."""
        payload = asdict(self)
        payload["pol"] = self.pol.value
        payload["cell"]["eps_r"] = [self.cell.eps_r.real, self.cell.eps_r.imag]
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class CellGeometry:
    position: np.ndarray
    r_t: float | np.ndarray
    r_r: float | np.ndarray
    theta_t: float | np.ndarray
    theta_r: float | np.ndarray
    phi_t: float | np.ndarray
    phi_r: float | np.ndarray
    u_t: np.ndarray  # unit vector cell -> TX
    u_r: np.ndarray  # unit vector cell -> RX

    @property
    def theta_t_signed(self):
        """Incidence angle carrying the sign of the y-projection of ``u_t``."""
        return np.arcsin(self.u_t[..., 1])

    @property
    def theta_r_signed(self):
        return np.arcsin(self.u_r[..., 1])


def cell_centers(scenario: LinkScenario) -> np.ndarray:
    """``(M, N, 3)`` array of cell centre positions."""
    M, N = scenario.M, scenario.N
    xs = (np.arange(1, N + 1) - (N + 1) / 2) * scenario.cell.D_x
    ys = (np.arange(1, M + 1) - (M + 1) / 2) * scenario.cell.D_y
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X, Y, np.zeros_like(X)], axis=-1)


def _toward(points, target):
    v = np.asarray(target, dtype=float) - points
    r = np.linalg.norm(v, axis=-1)
    if np.any(r < 1e-12):
        raise GeometryError("antenna coincides with a cell centre")
    return r, v / r[..., None]


def _angles(u):
    theta = np.arccos(np.clip(u[..., 2], -1.0, 1.0))
    phi = np.arctan2(u[..., 1], u[..., 0])
    return theta, phi


def cell_geometries(scenario: LinkScenario) -> CellGeometry:
    """Geometry of every cell at once, arrays shaped ``(M, N)``."""
    p = cell_centers(scenario)
    r_t, u_t = _toward(p, scenario.tx_pos)
    r_r, u_r = _toward(p, scenario.rx_pos)
    th_t, ph_t = _angles(u_t)
    th_r, ph_r = _angles(u_r)
    return CellGeometry(p, r_t, r_r, th_t, th_r, ph_t, ph_r, u_t, u_r)


def cell_geometry(scenario: LinkScenario, m: int, n: int) -> CellGeometry:
    if not (1 <= m <= scenario.M and 1 <= n <= scenario.N):
        raise IndexError(f"cell ({m}, {n}) outside 1..{scenario.M} x 1..{scenario.N}")
    g = cell_geometries(scenario)
    i, j = m - 1, n - 1
    return CellGeometry(
        g.position[i, j], float(g.r_t[i, j]), float(g.r_r[i, j]),
        float(g.theta_t[i, j]), float(g.theta_r[i, j]),
        float(g.phi_t[i, j]), float(g.phi_r[i, j]),
        g.u_t[i, j], g.u_r[i, j],
    )


def antenna_gain(q, theta, mode: str = "corrected"):
    """Gain of a ``cos^q`` pattern normalised over the forward hemisphere.

    ``mode="corrected"`` integrates with the solid-angle element and gives
    ``2 (q + 1) cos^q(theta)``.  ``mode="strict"`` normalises with the
    integral of ``cos^q`` over ``d theta d phi`` (no ``sin theta``).
    """
    if mode not in GAIN_MODES:
        raise ValueError(f"mode must be one of {GAIN_MODES}")
    th = np.asarray(theta, dtype=float)
    ct = np.cos(th)
    forward = (th < np.pi / 2) & (ct > 0)
    pattern = np.where(forward, np.clip(ct, 0, None) ** q, 0.0)
    if mode == "corrected":
        g = 2 * (q + 1) * pattern
    else:
        # int_0^{pi/2} cos^q = B((q+1)/2, 1/2) / 2
        denom = 2 * np.pi * beta_fn((q + 1) / 2, 0.5) / 2
        g = 4 * np.pi * pattern / denom
    return g[()] if g.ndim == 0 else g


def _sinc(x):
    # np.sinc is sin(pi x)/(pi x) with the removable point handled
    return np.sinc(np.asarray(x) / np.pi)


def cell_rcs_from_directions(u_t, u_r, lam, D_x, D_y, sign=1):
    """Physical-optics RCS of a ``D_x x D_y`` plate for directions cell->TX, cell->RX.

    ``sign=-1`` flips the incident projection and breaks the specular
    condition on purpose; it exists only as a negative control.
    """
    k = 2 * np.pi / lam
    cos_t = u_t[..., 2]
    sx = _sinc(k * D_x / 2 * (sign * u_t[..., 0] + u_r[..., 0]))
    sy = _sinc(k * D_y / 2 * (sign * u_t[..., 1] + u_r[..., 1]))
    return 4 * np.pi * (D_x * D_y / lam) ** 2 * cos_t**2 * sx**2 * sy**2


def unit_cell_rcs(geom: CellGeometry, lam, D_x, D_y):
    """Bistatic RCS of one cell, treated as a small metal plate.

    In the yz-plane this is the familiar
    ``4 pi (D_x D_y / lam)^2 cos^2(theta_t) sinc^2(k D_y / 2 (sin theta_r + sin theta_t))``
    with angles signed by their y-projection; out of that plane the x-extent
    contributes its own sinc factor.
    """
    return cell_rcs_from_directions(np.asarray(geom.u_t), np.asarray(geom.u_r), lam, D_x, D_y)


def unit_cell_rcs_inplane(theta_t_signed, theta_r_signed, lam, D_x, D_y):
    k = 2 * np.pi / lam
    arg = k * D_y / 2 * (np.sin(theta_r_signed) + np.sin(theta_t_signed))
    return 4 * np.pi * (D_x * D_y / lam) ** 2 * np.cos(theta_t_signed) ** 2 * _sinc(arg) ** 2


def plate_rcs(a, b, theta_i, theta_s, phi_s, lam):
    """Bistatic RCS of an ``a x b`` PEC plate for incidence in the yz-plane."""
    k = 2 * np.pi / lam
    X = k * a / 2 * np.sin(theta_s) * np.cos(phi_s)
    Y = k * b / 2 * (np.sin(theta_s) * np.sin(phi_s) - np.sin(theta_i))
    form = np.cos(theta_s) ** 2 * np.sin(phi_s) ** 2 + np.cos(phi_s) ** 2
    return 4 * np.pi * (a * b / lam) ** 2 * form * _sinc(X) ** 2 * _sinc(Y) ** 2


def plate_rcs_inplane(a, b, theta_i, theta_s, lam):
    k = 2 * np.pi / lam
    Y = k * b / 2 * (np.sin(theta_s) - np.sin(theta_i))
    return 4 * np.pi * (a * b / lam) ** 2 * np.cos(theta_i) ** 2 * _sinc(Y) ** 2


def _boresight(scenario, antenna_pos):
    if scenario.pointing == "normal":
        return np.array([0.0, 0.0, -1.0])
    a = np.asarray(antenna_pos, dtype=float)
    return -a / np.linalg.norm(a)


def _gain_toward(scenario, antenna_pos, u_cell_to_antenna, q, boresight=None):
    b = _boresight(scenario, antenna_pos) if boresight is None else boresight
    cos_off = np.clip(np.einsum("...k,...k->...", -u_cell_to_antenna, b), -1.0, 1.0)
    return antenna_gain(q, np.arccos(cos_off), scenario.gain_mode)


def _check_gamma(scenario, gamma):
    g = np.asarray(gamma, dtype=complex)
    if g.shape != scenario.shape:
        raise ValueError(f"gamma has shape {g.shape}, scenario expects {scenario.shape}")
    return g


def cell_contributions(scenario: LinkScenario, gamma, rx_pos=None, rcs_sign=1):
    """Per-cell complex field amplitudes whose coherent sum sets the received power."""
    g = _check_gamma(scenario, gamma)
    p = cell_centers(scenario)
    rx = scenario.rx_pos if rx_pos is None else rx_pos
    r_t, u_t = _toward(p, scenario.tx_pos)
    r_r, u_r = _toward(p, rx)
    lam, k = scenario.wavelength, scenario.k0
    g_t = _gain_toward(scenario, scenario.tx_pos, u_t, scenario.q_t)
    g_r = _gain_toward(scenario, rx, u_r, scenario.q_r)
    sigma = cell_rcs_from_directions(u_t, u_r, lam, scenario.cell.D_x, scenario.cell.D_y, rcs_sign)
    return np.sqrt(g_t * g_r * sigma) * g * np.exp(-1j * k * (r_t + r_r)) / (r_t * r_r)


def received_power(scenario: LinkScenario, gamma) -> float:
    """Received power (W): magnitude squared of the coherent per-cell sum."""
    lam = scenario.wavelength
    total = np.sum(cell_contributions(scenario, gamma))
    return float(scenario.P_t * lam**2 / (4 * np.pi) ** 3 * np.abs(total) ** 2)


@dataclass(frozen=True)
class PlaneSpec:
    """Axis-aligned sampling rectangle in the ``xz`` or ``yz`` plane."""

    plane: str = "xz"
    u_range: tuple = (-0.5, 0.5)
    v_range: tuple = (0.01, 0.5)
    n_u: int = 201
    n_v: int = 201
    offset: float = 0.0

    def __post_init__(self):
        if self.plane not in ("xz", "yz"):
            raise ValueError("plane must be 'xz' or 'yz'")
        if self.n_u < 1 or self.n_v < 1:
            raise ValueError("sample counts must be positive")
        if min(self.v_range) <= 0:
            raise GeometryError("sampling plane must stay above the surface (z > 0)")

    def axes(self):
        return np.linspace(*self.u_range, self.n_u), np.linspace(*self.v_range, self.n_v)

    def points(self) -> np.ndarray:
        """``(n_v, n_u, 3)`` sample positions, row-major with z outer."""
        u, v = self.axes()
        U, V = np.meshgrid(u, v)
        off = np.full_like(U, self.offset)
        if self.plane == "xz":
            return np.stack([U, off, V], axis=-1)
        return np.stack([off, U, V], axis=-1)


@dataclass
class FieldMap:
    plane: PlaneSpec
    u: np.ndarray
    v: np.ndarray
    power: np.ndarray  # (n_v, n_u) watts
    P_t: float

    @property
    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.power / self.P_t)

    def argmax_position(self) -> np.ndarray:
        iv, iu = np.unravel_index(np.argmax(self.power), self.power.shape)
        return self.plane.points()[iv, iu]

    def to_csv(self, path) -> None:
        a, b = ("x_m", "z_m") if self.plane.plane == "xz" else ("y_m", "z_m")
        db = self.power_db
        with open(path, "w") as fh:
            fh.write(f"# {a},{b},pr_watt,pr_db\n")
            for iv, vv in enumerate(self.v):
                for iu, uu in enumerate(self.u):
                    fh.write(f"{fmt(uu)},{fmt(vv)},{fmt(self.power[iv, iu])},{fmt(db[iv, iu])}\n")


def fmt(x) -> str:
    """Nine significant digits, fixed scientific notation."""
    return f"{float(x):.8e}"


def field_map(scenario: LinkScenario, plane: PlaneSpec, gamma, chunk: int = 4096) -> FieldMap:
    """Received power with the receiver swept over ``plane`` and ``gamma`` held fixed."""
    g = _check_gamma(scenario, gamma).ravel()
    p = cell_centers(scenario).reshape(-1, 3)
    pts = plane.points().reshape(-1, 3)
    lam, k = scenario.wavelength, scenario.k0
    r_t, u_t = _toward(p, scenario.tx_pos)
    g_t = _gain_toward(scenario, scenario.tx_pos, u_t, scenario.q_t)
    tx_part = np.sqrt(g_t) * g * np.exp(-1j * k * r_t) / r_t
    out = np.empty(len(pts))
    scale = scenario.P_t * lam**2 / (4 * np.pi) ** 3
    for s in range(0, len(pts), chunk):
        rx = pts[s : s + chunk]
        v = rx[:, None, :] - p[None, :, :]
        r_r = np.linalg.norm(v, axis=-1)
        if np.any(r_r < 1e-12):
            raise GeometryError("field-map sample coincides with a cell centre")
        u_r = v / r_r[..., None]
        if scenario.pointing == "normal":
            cos_off = u_r[..., 2]
        else:
            b = -rx / np.linalg.norm(rx, axis=-1, keepdims=True)
            cos_off = np.einsum("ijk,ik->ij", -u_r, b)
        g_r = antenna_gain(scenario.q_r, np.arccos(np.clip(cos_off, -1, 1)), scenario.gain_mode)
        sigma = cell_rcs_from_directions(np.broadcast_to(u_t, u_r.shape), u_r, lam, scenario.cell.D_x, scenario.cell.D_y)
        terms = tx_part[None, :] * np.sqrt(g_r * sigma) * np.exp(-1j * k * r_r) / r_r
        out[s : s + chunk] = scale * np.abs(terms.sum(axis=1)) ** 2
    u, v = plane.axes()
    return FieldMap(plane, u, v, out.reshape(plane.n_v, plane.n_u), scenario.P_t)


def pec_closed_form_power(P_t, lam, M, N, G_t, G_r, sigma, r_t, r_r, aperture=None):
    """Far-field received power from ``M x N`` identical PEC cells.

    ``sigma`` is the single-cell RCS at the common incidence/scattering
    angles.  Pass ``aperture`` (largest cell offset from the centre, m) to be
    warned when the single-angle approximation is doubtful.
    """
    _far_field_check(aperture, r_t, r_r)
    return P_t * lam**2 * (M * N) ** 2 * G_t * G_r * sigma / ((4 * np.pi) ** 3 * r_t**2 * r_r**2)


def pec_bistatic_power(P_t, M, N, D_x, D_y, G_t, G_r, theta_t, r_t, r_r, aperture=None):
    """Specular-direction closed form; depends on surface area, not on frequency."""
    _far_field_check(aperture, r_t, r_r)
    area = M * D_x * N * D_y
    return P_t * area**2 * G_t * G_r * np.cos(theta_t) ** 2 / ((4 * np.pi) ** 2 * r_t**2 * r_r**2)


def _far_field_check(aperture, r_t, r_r, ratio=0.05) -> bool:
    if aperture is None:
        return True
    if aperture > ratio * min(r_t, r_r):
        warnings.warn("surface not small compared with the link distances", FarFieldWarning, stacklevel=3)
        return False
    return True
