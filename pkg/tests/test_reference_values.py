"""Worked values and limiting cases for the physics modules."""

import numpy as np
import pytest
from scipy import integrate

from metasense.exceptions import DomainError
from metasense.lattice import (REFERENCE_GEOMETRY, STEEL, LumpedChain,
                               UnitCellGeometry, branch_omegas, gap_edges,
                               local_resonance_frequency, reduce_geometry)
from metasense.sensor import (classify, coupled_response, normalize_measures,
                              piezo_voltage, rmsd, sensitivity_curve,
                              sensor_response, sensor_states, short_time_rmsd,
                              steady_amplitude)
from metasense.structure import (HarmonicSpec, SignalTrace, StructuralModel,
                                 case_spec, eigenfrequencies,
                                 reference_structure, simulate,
                                 synthesize_harmonic, white_noise)
from metasense.transmittance import (TransmittanceCurve, extract_bdp,
                                     frequency_response)

TWO_PI_SQ = (2 * np.pi) ** 2


# --- unit cell --------------------------------------------------------------
def test_resonator_mass_by_numerical_volume():
    r, h = 5e-3, 10e-3
    area, _ = integrate.dblquad(lambda y, x: 1.0, -r, r,
                                lambda x: -np.sqrt(r * r - x * x),
                                lambda x: np.sqrt(r * r - x * x))
    m_r = reduce_geometry(REFERENCE_GEOMETRY).m_r
    assert m_r == pytest.approx(STEEL.density * area * h, rel=1e-6)
    assert m_r == pytest.approx(6.11e-3, rel=1e-3)


def test_doubling_height_doubles_resonator_mass_only():
    a = reduce_geometry(UnitCellGeometry.from_mm(h=8.0))
    b = reduce_geometry(UnitCellGeometry.from_mm(h=16.0))
    assert b.m_r == pytest.approx(2 * a.m_r, rel=1e-14)
    assert b.k_r == a.k_r and b.m_p == a.m_p and b.k_p == a.k_p


def test_height_boundary_semantics():
    UnitCellGeometry.from_mm(h=5.0)
    with pytest.raises(DomainError):
        UnitCellGeometry.from_mm(h=4.999)


# --- dispersion -------------------------------------------------------------
def test_vanishing_resonator_gives_monatomic_chain():
    chain = LumpedChain(1, 1.0, 1e-12, 100.0, 1.0)
    qa = np.linspace(0, np.pi, 50)
    lo, _ = branch_omegas(chain, qa)
    mono = 2 * np.sqrt(100.0) * np.abs(np.sin(qa / 2))
    np.testing.assert_allclose(lo, mono, rtol=1e-6, atol=1e-9)


def test_unit_chain_gap_by_brute_force_scan():
    chain = LumpedChain(1, 1.0, 1.0, TWO_PI_SQ, TWO_PI_SQ)
    lo, hi = gap_edges(chain)
    f = np.linspace(1e-4, 3.0, 300001)
    w2 = TWO_PI_SQ * f ** 2
    meff = 1.0 + TWO_PI_SQ / (TWO_PI_SQ - w2)
    g = w2 * meff - 4 * TWO_PI_SQ
    k = np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0][0]
    assert lo == pytest.approx(f[k], abs=2e-5)
    fr = local_resonance_frequency(chain)
    assert fr == pytest.approx(1.0) and lo < fr < hi


def test_local_resonance_definition_and_scaling():
    c = LumpedChain(1, 1.0, 1.0, 1.0, TWO_PI_SQ)
    assert local_resonance_frequency(c) == pytest.approx(1.0)
    c4 = LumpedChain(1, 1.0, 1.0, 1.0, 4 * TWO_PI_SQ)
    assert local_resonance_frequency(c4) == pytest.approx(2.0)


# --- transmittance ----------------------------------------------------------
def test_single_cell_static_transmission():
    chain = LumpedChain(1, 0.01, 0.01, 1e3, 1e2)
    curve = frequency_response(chain, np.array([1e-4, 1e-3]))
    np.testing.assert_allclose(curve.tau_db, 0.0, atol=1e-6)


def test_gap_attenuation_on_dense_grid(ref_chain):
    lo, hi = gap_edges(ref_chain)
    f = np.linspace(lo, hi, 4121)[1:-1]   # 10x the default 0.05 Hz density
    assert np.all(frequency_response(ref_chain, f).tau_db < 0)


def test_analytic_crossing():
    f = np.linspace(0, 20, 201)
    assert extract_bdp(TransmittanceCurve(f, 10 - f)).bdp == pytest.approx(10.0)
    assert extract_bdp(TransmittanceCurve(f, 15 - f)).bdp == pytest.approx(15.0)


def test_bdp_grid_refinement(ref_chain):
    coarse = extract_bdp(frequency_response(ref_chain)).bdp
    fine = extract_bdp(frequency_response(
        ref_chain, np.linspace(1, 200, 39801))).bdp
    assert abs(coarse - fine) < 0.05


# --- structure --------------------------------------------------------------
def test_quarter_period_displacement():
    spec = HarmonicSpec(((1.0, 1.0),))
    assert spec.displacement(np.array([0.25]))[0] == pytest.approx(1e-3)


def test_case1_healthy_components():
    assert case_spec(1, "healthy").components == (
        (1.10, 23.71), (0.13, 45.16), (0.05, 68.97), (0.02, 91.33),
        (0.01, 115.16))


def test_case1_damaged_fft_peak():
    tr = synthesize_harmonic(case_spec(1, "damaged", duration=20.0,
                                       sample_rate=1000.0))
    n = 2 ** 20
    spec = np.abs(np.fft.rfft(tr.samples * np.hanning(tr.samples.size), n))
    f = np.fft.rfftfreq(n, tr.dt)
    assert f[np.argmax(spec)] == pytest.approx(22.41, abs=0.05)


def test_single_dof_frequency():
    m = StructuralModel([1.0], [TWO_PI_SQ], [0.0])
    assert eigenfrequencies(m)[0] == pytest.approx(1.0)


def test_zero_excitation_zero_response():
    floors = simulate(reference_structure(), white_noise(0.0, 1.0, 1000.0, 0))
    assert all(np.all(f.samples == 0) for f in floors)


def test_undamped_step_response_mean():
    m = StructuralModel([1.0], [TWO_PI_SQ], [0.0])
    x = simulate(m, SignalTrace(0.001, np.ones(20001), unit="N"))[0].samples
    assert x.mean() == pytest.approx(1 / TWO_PI_SQ, rel=1e-3)


def test_white_noise_statistics():
    assert np.all(white_noise(0.0, 1.0, 100.0, 1).samples == 0)
    x = white_noise(1000.0, 999.999, 1000.0, 5).samples
    assert x.size == 1_000_000
    assert abs(x.std() - 1000) < 5


# --- sensor -----------------------------------------------------------------
def test_zero_base_motion_zero_probe(ref_chain):
    tr = sensor_response(ref_chain, SignalTrace(0.001, np.zeros(500)))
    assert np.all(tr.samples == 0)


@pytest.mark.parametrize("where", ["gap", "peak"])
def test_steady_amplitude_against_frequency_solver(ref_chain, where):
    curve = frequency_response(ref_chain)
    lo, hi = gap_edges(ref_chain)
    f = 0.5 * (lo + hi) if where == "gap" else \
        curve.freq_grid[np.argmax(curve.tau_db)]
    ratio = 10 ** (frequency_response(ref_chain, np.array([f, f + 1]))
                   .tau_db[0] / 20)
    spec = HarmonicSpec(((1.0, f),), duration=60.0, sample_rate=1000.0)
    amp = steady_amplitude(sensor_response(ref_chain, spec), 0.1)
    assert (amp < 1.0) if where == "gap" else (amp > 1.0)
    assert amp == pytest.approx(ratio, rel=0.02)


def test_rmsd_worked_values():
    assert rmsd(SignalTrace(0.01, np.full(50, 2.5), unit="mm")) == 2.5
    assert rmsd(SignalTrace(0.01, np.zeros(50))) == 0.0
    t = np.arange(1000) / 1000
    sine = SignalTrace(0.001, 3.0 * np.sin(2 * np.pi * 5 * t), unit="mm")
    assert rmsd(sine) == pytest.approx(3 / np.sqrt(2), rel=1e-12)


def test_short_time_rmsd_worked_values():
    const = short_time_rmsd(SignalTrace(0.001, np.full(1000, 4.0), unit="mm"))
    np.testing.assert_allclose(const.samples, 4.0)
    t = np.arange(20000) / 1000
    x = np.where(t < 10, 0.0, 2.0 * np.sin(2 * np.pi * 10 * t))
    st = short_time_rmsd(SignalTrace(0.001, x, unit="mm"), 0.1)
    before = st.samples[st.times <= 10 + 1e-9]
    after = st.samples[st.times > 10 + 1e-9]
    np.testing.assert_allclose(before, 0.0)
    np.testing.assert_allclose(after, np.sqrt(2), rtol=1e-9)


def test_metric_worked_values():
    assert normalize_measures(1, 1).metric == (0.5, 0.5)
    assert normalize_measures(0, 3.0).metric == (0.0, 1.0)


def test_zero_damage_equals_baseline(ref_chain):
    m = StructuralModel.uniform(6, 50.0, 1.89e7, 10.0)
    (_, r0), = sensitivity_curve(m, ref_chain, [0.0], seed=4, duration=2.0)
    run = coupled_response(m, ref_chain, white_noise(1000.0, 2.0, 1000.0, 4))
    assert r0 == rmsd(run.probe)


def test_zero_response_zero_voltage():
    states = [SignalTrace(0.01, np.zeros(10)) for _ in range(4)]
    assert np.all(piezo_voltage(states).samples == 0)


def test_doubling_excitation_doubles_peak_voltage(ref_chain):
    peaks = []
    for a in (0.2, 0.4):
        spec = HarmonicSpec(((a, 22.4),), duration=2.0, sample_rate=1000.0)
        peaks.append(np.abs(piezo_voltage(sensor_states(ref_chain, spec))
                            .samples).max())
    # equal up to the integrator tolerance
    assert peaks[1] == pytest.approx(2 * peaks[0], rel=1e-6)
