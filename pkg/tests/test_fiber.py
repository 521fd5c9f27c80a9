import numpy as np
import pytest

from pasnli.fiber import (
    ConfigError,
    LinkSystemConfig,
    StepSizeError,
    Waveform,
    ase_snr_db,
    dispersion_phase,
    modulate,
    propagate,
    propagate_span,
    receive,
    rrc_pulse,
    setup1_link,
    setup2_link,
)
from pasnli.mapping import DualPolFrame
from pasnli.shaping_core import watt_to_dbm


def qam16(n_pol, N, seed=0, n_channels=1, baud=50e9):
    rng = np.random.default_rng(seed)
    lv = np.array([-3, -1, 1, 3])
    s = rng.choice(lv, (n_channels, n_pol, N)) + 1j * rng.choice(lv, (n_channels, n_pol, N))
    return DualPolFrame(s, baud)


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_rrc_pulse_unit_energy():
    for sps, r in [(2, 0.1), (4, 0.5), (3, 0.05), (2, 0.0)]:
        p = rrc_pulse(128, sps, r)
        assert np.sum(np.abs(p) ** 2) / sps == pytest.approx(1.0, abs=1e-6)


def test_launch_power_per_channel():
    link = setup1_link(n_channels=3, sim_oversampling=6)
    wf = modulate(qam16(2, 2**12, n_channels=3, baud=32e9), link)
    for ci in range(3):
        p = np.mean(np.abs(wf.tx_frame.symbols[ci]) ** 2)
        assert watt_to_dbm(p) == pytest.approx(-6.5, abs=0.01)
    # each polarization carries 3 channels at the launch power
    assert watt_to_dbm(wf.power() / 3) == pytest.approx(-6.5, abs=0.01)


def test_two_channels_spectral_peaks():
    link = LinkSystemConfig(baud_rate_gbd=16.0, wdm_spacing_ghz=25.0, n_channels=3, dual_pol=False,
                            sim_oversampling=8)
    fr = qam16(1, 2**12, n_channels=3, baud=16e9)
    sym = fr.symbols.copy()
    sym[1] = 0  # centre channel off
    wf = modulate(DualPolFrame(sym, 16e9), link, normalize=False)
    spec = np.abs(np.fft.fft(wf.samples[0])) ** 2
    f = np.fft.fftfreq(wf.n_samples, 1 / wf.sample_rate)
    band = lambda f0: spec[np.abs(f - f0) < 6e9].mean()
    assert band(25e9) > 1e3 * band(0) and band(-25e9) > 1e3 * band(0)
    assert band(25e9) == pytest.approx(band(-25e9), rel=0.2)


def test_incompatible_frame_length_for_grid():
    link = setup1_link(n_channels=3, sim_oversampling=6)
    with pytest.raises(ConfigError):
        modulate(qam16(2, 1001, n_channels=3, baud=32e9), link)


def test_frame_link_mismatch():
    with pytest.raises(ConfigError):
        modulate(qam16(1, 64), setup2_link())


def test_back_to_back_receive():
    link = setup2_link(n_spans=1)
    wf = modulate(qam16(2, 4096), link)
    r = receive(wf, link, cd_compensate=False)
    assert np.max(np.abs(r - wf.tx_frame.symbols[0])) / np.sqrt(wf.power()) < 1e-9


def test_linear_limit_is_exact_cd():
    link = setup2_link(gamma_per_w_km=0.0, noise_figure_db=None)
    wf = modulate(qam16(2, 2**12), link)
    out = propagate(wf, link, seed=0)
    H = dispersion_phase(wf.n_samples, wf.sample_rate, link.beta2, link.span_length_m)
    expect = np.fft.ifft(np.fft.fft(wf.samples, axis=-1) * H, axis=-1)
    assert rel_err(out.samples, expect) < 1e-9
    back = np.fft.ifft(np.fft.fft(out.samples, axis=-1) * np.conj(H), axis=-1)
    assert rel_err(back, wf.samples) < 1e-9
    r = receive(out, link)
    evm_db = 20 * np.log10(rel_err(r, wf.tx_frame.symbols[0]))
    assert evm_db < -90


@pytest.mark.parametrize("dual", [False, True])
def test_spm_only_analytic_phase(dual):
    link = setup2_link(dispersion_ps_nm_km=0.0, attenuation_db_per_km=0.0, noise_figure_db=None,
                       dual_pol=dual, n_spans=1, span_length_km=100.0, launch_power_dbm=3.0)
    wf = modulate(qam16(link.n_pol, 1024), link)
    out = propagate(wf, link)
    power = np.sum(np.abs(wf.samples) ** 2, axis=0)
    expect = wf.samples * np.exp(1j * link.nl_factor * link.gamma_per_w_m * power * link.span_length_m)
    assert np.max(np.abs(np.angle(out.samples / expect))) < 1e-6


def test_step_halving_converges():
    link = setup2_link(noise_figure_db=None, dual_pol=True, launch_power_dbm=4.0)
    wf = modulate(qam16(2, 2**12), link)
    a = propagate(wf, link).samples
    b = propagate(wf, link.replace(max_nl_phase=link.max_nl_phase / 2, max_step_km=link.max_step_km / 2)).samples
    assert rel_err(a, b) < 1e-4


def test_logarithmic_steps_close_to_phase_rule():
    link = setup2_link(noise_figure_db=None, launch_power_dbm=4.0)
    wf = modulate(qam16(2, 2**12), link)
    a = propagate(wf, link).samples
    b = propagate(wf, link.replace(step_mode="logarithmic", steps_per_span=400)).samples
    assert rel_err(a, b) < 1e-3


def test_lossless_energy_conservation():
    link = setup1_link(n_channels=1, attenuation_db_per_km=0.0, noise_figure_db=None, n_spans=1,
                       launch_power_dbm=2.0)
    wf = modulate(qam16(2, 2**12, baud=32e9), link)
    A, steps = propagate_span(wf.samples, link, wf.sample_rate)
    e0, e1 = np.sum(np.abs(wf.samples) ** 2), np.sum(np.abs(A) ** 2)
    assert steps > 10
    assert abs(e1 - e0) / e0 < 1e-10


def test_divergence_is_reported():
    link = setup2_link()
    A = np.ones((2, 64), dtype=complex)
    A[0, 3] = np.nan
    with pytest.raises(StepSizeError):
        propagate_span(A, link, 100e9)


def test_determinism_and_seed_dependence():
    link = setup2_link(n_spans=2, span_length_km=50.0)
    wf = modulate(qam16(2, 2**11), link)
    a = propagate(wf, link, seed=3).samples
    b = propagate(wf, link, seed=3).samples
    c = propagate(wf, link, seed=4).samples
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    quiet = link.replace(noise_figure_db=None)
    np.testing.assert_array_equal(propagate(wf, quiet, seed=3).samples, propagate(wf, quiet, seed=4).samples)


def test_global_phase_invariance():
    link = setup2_link(launch_power_dbm=6.0)
    wf = modulate(qam16(2, 2**12), link)
    out = propagate(wf, link, seed=1)
    r1 = receive(out, link)
    r2 = receive(out.copy(out.samples * np.exp(0.7j)), link)
    assert np.max(np.abs(r1 - r2)) < 1e-12


def test_ase_only_snr_matches_closed_form():
    link = setup2_link(gamma_per_w_km=0.0, launch_power_dbm=8.0)
    wf = modulate(qam16(2, 2**15), link)
    r = receive(propagate(wf, link, seed=5), link)
    s = wf.tx_frame.symbols[0]
    snr = 10 * np.log10(np.sum(np.abs(s) ** 2) / np.sum(np.abs(s - r) ** 2))
    assert snr == pytest.approx(ase_snr_db(link), abs=0.1)


def test_waveform_roundtrip(tmp_path):
    wf = Waveform(np.arange(12).reshape(2, 6) * (1 + 0.5j), 64e9, (0,), (0.0,), seed=7)
    wf.save(tmp_path / "w.bin")
    back = Waveform.load(tmp_path / "w.bin")
    np.testing.assert_array_equal(back.samples, wf.samples)
    assert back.sample_rate == 64e9 and back.seed == 7
    raw = np.fromfile(tmp_path / "w.bin", dtype="<f8")
    assert list(raw[:6]) == [0.0, 0.0, 6.0, 3.0, 1.0, 0.5]


def test_nonfinite_waveform_rejected():
    with pytest.raises(ValueError):
        Waveform(np.array([[1.0, np.inf]]), 1.0)


def test_wdm_needs_higher_simulation_rate():
    link = setup1_link()
    assert link.samples_per_symbol * link.baud_rate_gbd >= link.occupied_bandwidth_ghz
    with pytest.raises(ConfigError):
        setup1_link(sim_oversampling=4)


def test_nli_power_slope_model_and_simulator_agree():
    from pasnli.nli import build_filter_bank, predict_distortion

    link = setup1_link(n_channels=1, dual_pol=False, noise_figure_db=None)
    fr = qam16(1, 2**12, seed=2, baud=32e9)
    bank = build_filter_bank(link, channels=(0,))
    powers = np.array([-10.0, -8.0, -6.0, -4.0])
    sim, model = [], []
    for p in powers:
        lk = link.replace(launch_power_dbm=p)
        wf = modulate(fr, lk)
        s = wf.tx_frame.symbols[0]
        r = receive(propagate(wf, lk), lk)
        sim.append(np.mean(np.abs(r - s) ** 2))
        e = np.abs(s) ** 2
        dd = predict_distortion(e[None], bank, 0, "x").variation_sum
        model.append(np.mean(np.abs(link.gamma_per_w_km * s[0] * dd) ** 2))
    slope = lambda y: np.polyfit(powers / 10, np.log10(y), 1)[0]
    assert slope(sim) == pytest.approx(3.0, abs=0.3)
    assert slope(model) == pytest.approx(3.0, abs=0.3)
