import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import welch

from metasense.exceptions import DomainError
from metasense.structure import (TABLE3, HarmonicSpec, SignalTrace,
                                 StructuralModel, case_spec, eigenfrequencies,
                                 reference_structure, simulate,
                                 synthesize_harmonic, white_noise)

TWO_PI_SQ = (2 * np.pi) ** 2


def _eig_numpy(model, k=None):
    M, _, K = model.matrices(k)
    lam = np.linalg.eigvals(np.linalg.solve(M, K)).real
    return np.sort(np.sqrt(lam)) / (2 * np.pi)


def test_eigenfrequencies_match_numpy_oracle():
    m = reference_structure()
    np.testing.assert_allclose(eigenfrequencies(m), _eig_numpy(m), rtol=1e-10)


def test_uniform_chain_closed_form():
    # fixed-free uniform chain: w_j = 2 sqrt(k/m) sin((2j-1) pi / (2(2n+1)))
    m = StructuralModel.uniform(6, 50.0, 1.89e7, 0.0)
    j = np.arange(1, 7)
    ref = 2 * np.sqrt(1.89e7 / 50) * np.sin((2 * j - 1) * np.pi / 26) / (2 * np.pi)
    np.testing.assert_allclose(eigenfrequencies(m), ref, rtol=1e-10)


def test_abrupt_damage_schedule():
    m = reference_structure().with_abrupt_damage(10.0, 0.1)
    np.testing.assert_allclose(m.stiffness_at(9.99), 1.89e7)
    np.testing.assert_allclose(m.stiffness_at(10.0), 1.701e7)
    assert eigenfrequencies(m, time=11.0)[0] < eigenfrequencies(m)[0]
    assert len(m.events()) == 1


def test_model_dict_round_trip():
    m = reference_structure().with_abrupt_damage(3.0, 0.2)
    back = StructuralModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.stiffnesses, m.stiffnesses)
    assert back.damage_schedule == m.damage_schedule


def test_model_validation():
    with pytest.raises(DomainError):
        StructuralModel([1.0, 1.0], [1.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        StructuralModel([1.0], [-1.0], [0.0])
    with pytest.raises(DomainError):
        StructuralModel([1.0], [1.0], [0.0], ((1.0, 3, 1.0),))


def test_harmonic_synthesis():
    spec = HarmonicSpec(((2.0, 5.0), (1.0, 12.0)), duration=1.0,
                        sample_rate=200.0)
    tr = synthesize_harmonic(spec)
    assert tr.samples.size == 201 and tr.unit == "m"
    t = tr.times
    ref = 2e-3 * np.sin(2 * np.pi * 5 * t) + 1e-3 * np.sin(2 * np.pi * 12 * t)
    np.testing.assert_allclose(tr.samples, ref, atol=1e-15)
    # acceleration is minus w^2 times displacement per component
    single = HarmonicSpec(((1.0, 4.0),))
    np.testing.assert_allclose(single.acceleration(t),
                               -(2 * np.pi * 4) ** 2 * single.displacement(t))


def test_harmonic_validation():
    with pytest.raises(DomainError):
        HarmonicSpec(((1.0, 600.0),), sample_rate=1000.0)
    with pytest.raises(DomainError):
        HarmonicSpec(tuple((1.0, 1.0) for _ in range(6)))
    with pytest.raises(DomainError):
        HarmonicSpec(((-1.0, 1.0),))


def test_case_tables_are_complete():
    for case in (1, 2, 3):
        row = TABLE3[case]
        assert len(row["amplitudes"]) == len(row["healthy"]) == 5
        # damage lowers every modal frequency
        assert all(d < h for h, d in zip(row["healthy"], row["damaged"]))
    spec = case_spec(1, "damaged")
    assert spec.components[0] == (1.10, 22.41)
    with pytest.raises(DomainError):
        case_spec(1, "broken")


def test_white_noise_seeded():
    a = white_noise(1000.0, 2.0, 100.0, 7)
    b = white_noise(1000.0, 2.0, 100.0, 7)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert a.samples.size == 201
    assert not np.array_equal(a.samples, white_noise(1000.0, 2.0, 100.0, 8).samples)


def test_free_vibration_fft_peak():
    m = StructuralModel.uniform(6, 50.0, 1.89e7, 0.0)
    force = SignalTrace(1e-3, np.zeros(8001), unit="N")
    # start in the first mode shape so the response is a single sinusoid
    M, _, K = m.matrices()
    lam, V = np.linalg.eig(np.linalg.solve(M, K))
    shape = V[:, np.argmin(lam.real)].real
    y0 = np.concatenate([shape * 1e-3, np.zeros(6)])
    top = simulate(m, force, y0=y0)[-1].samples
    spec = np.abs(np.fft.rfft(top * np.hanning(top.size), n=2 ** 19))
    freqs = np.fft.rfftfreq(2 ** 19, 1e-3)
    assert freqs[np.argmax(spec)] == pytest.approx(eigenfrequencies(m)[0],
                                                   abs=0.02)


def test_white_noise_response_psd_peak():
    m = reference_structure()
    top = simulate(m, white_noise(1000.0, 60.0, 1000.0, 3))[-1]
    f, p = welch(top.samples, fs=1000.0, nperseg=8192)
    assert f[np.argmax(p)] == pytest.approx(23.59, abs=0.2)


def test_static_load_matches_flexibility():
    m = StructuralModel.uniform(3, 1.0, 100.0, 20.0)
    force = SignalTrace(0.01, np.full(3001, 5.0), unit="N")
    floors = simulate(m, force)
    # a load on mass 1 only stretches spring 1
    for tr in floors:
        assert tr.samples[-1] == pytest.approx(0.05, rel=1e-4)


@settings(max_examples=20, deadline=None)
@given(k=st.floats(1e3, 1e8), mass=st.floats(1.0, 100.0),
       factor=st.floats(0.5, 1.0))
def test_global_stiffness_loss_scales_frequencies(k, mass, factor):
    m = StructuralModel.uniform(4, mass, k, 0.0)
    ratio = eigenfrequencies(m.scaled(factor)) / eigenfrequencies(m)
    np.testing.assert_allclose(ratio, np.sqrt(factor), rtol=1e-9)


def test_trace_csv_golden():
    tr = SignalTrace(0.5, np.array([1e-3, -2.5e-3]))
    assert tr.to_csv("x_mm", 1e3) == "t_s,x_mm\n0,1\n0.5,-2.5\n"


def test_undamped_energy_conserved():
    from metasense.integrate import IntegratorConfig
    m = StructuralModel.uniform(6, 50.0, 1.89e7, 0.0)
    force = SignalTrace(1e-3, np.zeros(10001), unit="N")
    y0 = np.concatenate([np.linspace(1e-3, 2e-3, 6), np.zeros(6)])
    cfg = IntegratorConfig(rtol=1e-11, atol=1e-14)
    x, v = simulate(m, force, cfg, y0=y0, return_velocity=True)
    X = np.array([t.samples for t in x])
    V = np.array([t.samples for t in v])
    M, _, K = m.matrices()
    e = 0.5 * np.einsum("it,ij,jt->t", V, M, V) + \
        0.5 * np.einsum("it,ij,jt->t", X, K, X)
    assert np.abs(e / e[0] - 1).max() < 1e-6


def test_error_falls_with_tolerance():
    from metasense.integrate import IntegratorConfig
    m = StructuralModel([1.0], [TWO_PI_SQ], [0.0])
    # coarse samples so that output points do not cap the step size
    force = SignalTrace(0.25, np.zeros(17), unit="N")
    t = force.times
    errs = []
    for rtol in (1e-5, 1e-6, 1e-7):
        cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-3)
        x = simulate(m, force, cfg, y0=[1.0, 0.0])[0].samples
        errs.append(np.abs(x - np.cos(2 * np.pi * t)).max())
    # tolerance-proportional control of a 5th-order method
    assert errs[0] > errs[1] > errs[2]
    assert 3 < errs[0] / errs[1] < 30


def test_response_is_linear_in_force():
    m = reference_structure()
    f = white_noise(1000.0, 2.0, 1000.0, 2)
    a = simulate(m, f)[-1].samples
    b = simulate(m, f.scaled(2.0))[-1].samples
    assert np.abs(b - 2 * a).max() < 1e-6 * np.abs(a).max()


@pytest.mark.parametrize("spring", range(6))
def test_any_spring_loss_lowers_f1(spring):
    m = reference_structure()
    k = m.stiffnesses.copy()
    k[spring] *= 0.95
    weaker = StructuralModel(m.masses, k, m.dampers)
    assert eigenfrequencies(weaker)[0] < eigenfrequencies(m)[0]
