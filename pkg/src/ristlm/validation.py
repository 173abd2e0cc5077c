"""Closed-form PEC checks of the coherent summation.

A surface of identical PEC cells must behave like one metal plate.  Two
checks follow from that: the in-plane scattering pattern matches the flat
plate RCS, and the far-field received power matches the closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C0

from .cell import UnitCellDesign
from .link import (
    LinkScenario,
    antenna_gain,
    cell_contributions,
    cell_rcs_from_directions,
    fmt,
    pec_bistatic_power,
    pec_closed_form_power,
    plate_rcs_inplane,
    received_power,
)

PATTERN_TOL_DB = 0.5
PATTERN_FLOOR_DB = -30.0
POWER_RTOL = 0.01
FREQ_RTOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        vals = " ".join(f"{k}={fmt(v)}" for k, v in self.metrics.items())
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} {vals}".rstrip()


def _pec_scenario(cell, M, N, f, tx, rx, q=0.0):
    return LinkScenario(tx, rx, M, N, cell, f=f, q_t=q, q_r=q)


def plate_pattern_check(cell: UnitCellDesign, M=30, N=30, f=8e9, theta_i_deg=38.6,
                        distance=100.0, step_deg=0.1, rcs_sign=1) -> CheckResult:
    """Coherent PEC sum on a far arc in the yz-plane against the flat-plate RCS.

    Both patterns are normalised to their maxima; the deviation is taken
    over every angle where the plate pattern is above -30 dB.
    """
    lam = C0 / f
    th_i = np.radians(theta_i_deg)
    tx = (0.0, -distance * np.sin(th_i), distance * np.cos(th_i))
    scenario = _pec_scenario(cell, M, N, f, tx, (0.0, 0.0, distance))
    th_s = np.radians(np.arange(-89.0, 89.0 + step_deg / 2, step_deg))
    gamma = -np.ones(scenario.shape)
    summed = np.empty(th_s.size)
    for i, t in enumerate(th_s):
        rx = (0.0, distance * np.sin(t), distance * np.cos(t))
        summed[i] = np.abs(np.sum(cell_contributions(scenario, gamma, rx, rcs_sign))) ** 2
    plate = plate_rcs_inplane(M * cell.D_x, N * cell.D_y, th_i, th_s, lam)
    with np.errstate(divide="ignore"):
        a = 10 * np.log10(summed / summed.max())
        b = 10 * np.log10(plate / plate.max())
    mask = b > PATTERN_FLOOR_DB
    dev = float(np.max(np.abs(a[mask] - b[mask])))
    peak = float(np.degrees(th_s[np.argmax(summed)]))
    ok = dev <= PATTERN_TOL_DB and abs(peak - theta_i_deg) <= step_deg + 1e-9
    return CheckResult("plate_pattern", ok, {"max_dev_db": dev, "peak_deg": peak})


def far_field_power_check(cell: UnitCellDesign, M=30, N=30, f=8e9, theta_deg=30.0,
                          distance_factor=100.0, q=2.0) -> CheckResult:
    """Double sum with every cell PEC against the closed form, in the specular direction."""
    lam = C0 / f
    diag = np.hypot(M * cell.D_x, N * cell.D_y)
    r = distance_factor * diag
    th = np.radians(theta_deg)
    tx = (0.0, -r * np.sin(th), r * np.cos(th))
    rx = (0.0, r * np.sin(th), r * np.cos(th))
    scenario = _pec_scenario(cell, M, N, f, tx, rx, q)
    p_sum = received_power(scenario, -np.ones(scenario.shape))
    g = antenna_gain(q, 0.0)
    u_t = np.array(tx) / r
    u_r = np.array(rx) / r
    sigma = cell_rcs_from_directions(u_t, u_r, lam, cell.D_x, cell.D_y)
    p_closed = pec_closed_form_power(scenario.P_t, lam, M, N, g, g, sigma, r, r)
    rel = abs(p_sum - p_closed) / p_closed
    # lambda^2 in the general form cancels against the cell RCS at specular
    per_freq = []
    for fk in (4e9, 8e9, 16e9):
        lam_k = C0 / fk
        sig_k = cell_rcs_from_directions(u_t, u_r, lam_k, cell.D_x, cell.D_y)
        per_freq.append(pec_closed_form_power(scenario.P_t, lam_k, M, N, g, g, sig_k, r, r))
    per_freq.append(pec_bistatic_power(scenario.P_t, M, N, cell.D_x, cell.D_y, g, g, th, r, r))
    spread = (max(per_freq) - min(per_freq)) / max(per_freq)
    ok = rel <= POWER_RTOL and spread <= FREQ_RTOL
    return CheckResult("far_field_power", ok, {"rel_err": rel, "freq_spread": spread,
                                               "p_sum_w": p_sum, "p_closed_w": p_closed})


def run_pec_validation(cell: UnitCellDesign, M=30, N=30, f=8e9, theta_i_deg=38.6, rcs_sign=1) -> list[CheckResult]:
    return [
        plate_pattern_check(cell, M, N, f, theta_i_deg, rcs_sign=rcs_sign),
        far_field_power_check(cell, M, N, f),
    ]
