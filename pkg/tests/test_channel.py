"""Fiber propagation, amplifier ASE, WDM, and waveform serialization."""

import math

import numpy as np
import pytest
from scipy.constants import h as PLANCK, c as C0

from shapelink.channel import (
    FiberSegment,
    SpanSpec,
    WaveformFrame,
    WdmGrid,
    add_transmitter_noise,
    amplify,
    apply_frequency_shift,
    apply_jones_rotation,
    apply_spectral_tilt,
    hybrid_span,
    propagate_link,
    read_waveform,
    ssfm_propagate,
    wdm_mux,
    wiener_phase_walk,
    with_power,
    write_waveform,
)
from shapelink.errors import ConfigurationError


def _noise_frame(seed, n=4096, fs=70e9, rs=35e9, power_w=1e-3):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
    f = WaveformFrame(samples=s, sample_rate=fs, symbol_rate=rs)
    return f.with_samples(f.samples * math.sqrt(power_w / f.power))


def _gaussian_pulse_frame(n=8192, fs=70e9, t0=30e-12, peak_w=2e-3):
    # normalized by PEAK power: a mean-power normalization over a mostly
    # empty window would put watts of peak power into the fiber
    t = (np.arange(n) - n / 2) / fs
    env = np.exp(-(t**2) / (2 * t0**2))
    s = np.vstack([env, 0.5 * env]).astype(np.complex128)
    peak = np.max(np.sum(np.abs(s) ** 2, axis=0))
    return WaveformFrame(samples=s * math.sqrt(peak_w / peak), sample_rate=fs)


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------


def test_frame_validation():
    with pytest.raises(ValueError):
        WaveformFrame(samples=np.zeros((3, 8), complex), sample_rate=70e9)
    with pytest.raises(ValueError):
        WaveformFrame(samples=np.zeros((2, 0), complex), sample_rate=70e9)
    with pytest.raises(ValueError):
        WaveformFrame(samples=np.zeros((2, 8), complex), sample_rate=40e9, symbol_rate=35e9)


def test_power_accounting():
    f = _noise_frame(0, power_w=2e-3)
    assert f.power == pytest.approx(2e-3, rel=1e-12)
    assert f.power_dbm == pytest.approx(10 * math.log10(2.0), abs=1e-9)
    g = with_power(f, -2.9)
    assert g.power_dbm == pytest.approx(-2.9, abs=1e-9)


# ---------------------------------------------------------------------------
# split-step propagation
# ---------------------------------------------------------------------------


def test_identity_channel():
    f = _noise_frame(1)
    seg = FiberSegment(50e3, 0.0, 0.0, 100.0, nonlinear_index_n2=0.0)
    out = ssfm_propagate(f, seg, max_step_m=5e3)
    np.testing.assert_allclose(out.samples, f.samples, rtol=1e-12, atol=1e-15)


def test_dispersion_matches_analytic_operator():
    f = _gaussian_pulse_frame()
    seg = FiberSegment(80e3, 0.0, 17.0, 80.0, nonlinear_index_n2=0.0)
    out = ssfm_propagate(f, seg, max_step_m=1e3)
    # independent oracle: single quadratic-phase multiplication
    lam = seg.reference_wavelength_nm * 1e-9
    beta2 = -(seg.dispersion_ps_nm_km * 1e-6) * lam**2 / (2 * math.pi * C0)
    freqs = np.fft.fftfreq(f.n_samples, 1 / f.sample_rate)
    op = np.exp(2j * math.pi**2 * beta2 * seg.length_m * freqs**2)
    ref = np.fft.ifft(np.fft.fft(f.samples, axis=1) * op, axis=1)
    err = np.linalg.norm(out.samples - ref) / np.linalg.norm(ref)
    assert err < 1e-10


def test_cw_nonlinear_phase_exact():
    n = 1024
    p_total = 3e-3
    # all power in one polarization; CW so dispersion is inert anyway
    s = np.vstack([np.full(n, math.sqrt(p_total)), np.zeros(n)]).astype(complex)
    f = WaveformFrame(samples=s, sample_rate=70e9)
    seg = FiberSegment(70e3, 0.0, 0.0, 149.0)
    out = ssfm_propagate(f, seg, max_step_m=700.0)
    phi = (8.0 / 9.0) * seg.gamma_per_w_m * p_total * seg.length_m
    ref = f.samples * np.exp(1j * phi)
    np.testing.assert_allclose(out.samples, ref, rtol=0, atol=1e-8 * math.sqrt(p_total))


def test_loss_is_exact_with_nonlinearity_on():
    f = _noise_frame(2, power_w=5e-3)
    seg = FiberSegment(40e3, 0.148, 20.5, 149.0)
    out = ssfm_propagate(f, seg, max_step_m=500.0)
    expected = f.power * 10 ** (-seg.loss_db / 10)
    assert out.power == pytest.approx(expected, rel=1e-12)


def test_energy_conserved_without_loss():
    f = _gaussian_pulse_frame(peak_w=4e-3)
    seg = FiberSegment(60e3, 0.0, 20.5, 149.0)
    out = ssfm_propagate(f, seg, max_step_m=300.0)
    assert out.power == pytest.approx(f.power, rel=1e-10)


def test_step_halving_second_order():
    f = _gaussian_pulse_frame(peak_w=20e-3)
    seg = FiberSegment(50e3, 0.2, 17.0, 80.0)
    ref = ssfm_propagate(f, seg, max_step_m=50.0)
    errs = []
    for h in (2500.0, 1250.0, 625.0):  # exact divisors: steps truly halve
        out = ssfm_propagate(f, seg, max_step_m=h)
        errs.append(np.linalg.norm(out.samples - ref.samples))
    order1 = math.log2(errs[0] / errs[1])
    order2 = math.log2(errs[1] / errs[2])
    assert order1 > 1.8
    assert order2 > 1.8


def test_step_overflow_rejected():
    f = _noise_frame(3, n=64)
    seg = FiberSegment(1e9, 0.2, 17.0, 80.0)
    with pytest.raises(ConfigurationError):
        ssfm_propagate(f, seg, max_step_m=0.01)


# ---------------------------------------------------------------------------
# amplifier
# ---------------------------------------------------------------------------


def test_transparent_amplifier_adds_nothing():
    f = _noise_frame(4)
    out = amplify(f, 0.0, 0.0, seed=9)
    np.testing.assert_allclose(out.samples, f.samples, rtol=0, atol=1e-18)


def test_ase_power_matches_hand_calculation():
    # (F G - 1) h nu B with F = 1.4 dB, G = 10.72 dB, B = 35 GHz at
    # 193.4 THz: 15.2936 x 4.48512e-9 W x 1e-9 = 6.859e-8 W (-41.64 dBm)
    fs = 35e9
    f = WaveformFrame(samples=np.zeros((2, 50_000), complex), sample_rate=fs, symbol_rate=17.5e9)
    fg = 10 ** (1.4 / 10) * 10 ** (10.72 / 10)
    expected = (fg - 1.0) * PLANCK * 193.4e12 * fs
    powers = []
    for seed in range(100):
        out = amplify(f, 10.72, 1.4, seed=seed)
        powers.append(out.power)
    mean = np.mean(powers)
    sigma = np.std(powers) / math.sqrt(len(powers))
    assert abs(mean - expected) < 3 * sigma + 1e-12
    assert 10 * math.log10(mean * 1e3) == pytest.approx(-41.64, abs=0.05)


def test_ase_white_and_circular():
    f = WaveformFrame(samples=np.zeros((2, 100_000), complex), sample_rate=70e9)
    out = amplify(f, 10.0, 5.0, seed=12)
    for pol in out.samples:
        vi, vq = np.var(pol.real), np.var(pol.imag)
        assert abs(vi - vq) / vi < 0.05
        corr = np.mean(pol.real * pol.imag) / math.sqrt(vi * vq)
        assert abs(corr) < 0.02
        # whiteness: lag-1 autocorrelation is tiny
        lag1 = np.mean(pol[1:] * np.conj(pol[:-1])) / np.var(pol)
        assert abs(lag1) < 0.02


def test_independent_noise_adds_linearly():
    f = WaveformFrame(samples=np.zeros((2, 20_000), complex), sample_rate=70e9)
    singles, doubles = [], []
    for seed in range(100):
        once = amplify(f, 8.0, 4.0, seed=seed)
        twice = amplify(once, 0.0, 4.0, seed=seed + 1000)
        singles.append(once.power)
        doubles.append(twice.power)
    # the 0 dB second stage adds (F-1) h nu B on top
    fg1 = 10 ** (4 / 10) * 10 ** (8 / 10) - 1
    fg2 = 10 ** (4 / 10) - 1
    expected_ratio = (fg1 + fg2) / fg1
    ratio = np.mean(doubles) / np.mean(singles)
    assert ratio == pytest.approx(expected_ratio, rel=0.05)


def test_amplifier_deterministic_given_seed():
    f = _noise_frame(5)
    a = amplify(f, 3.0, 4.0, seed=7)
    b = amplify(f, 3.0, 4.0, seed=7)
    np.testing.assert_array_equal(a.samples, b.samples)


# ---------------------------------------------------------------------------
# link
# ---------------------------------------------------------------------------


def test_transparent_linear_link_preserves_power():
    f = _noise_frame(6, power_w=1e-3)
    seg = FiberSegment(70e3, 0.2, 17.0, 80.0, nonlinear_index_n2=0.0)
    span = SpanSpec(segments=(seg,))
    out = propagate_link(f, [span], seed=None, max_step_m=7e3)
    assert out.power == pytest.approx(f.power, rel=1e-9)


def test_hybrid_span_has_paper_loss():
    span = hybrid_span()
    assert span.loss_db == pytest.approx(10.72, abs=1e-12)
    assert span.length_m == pytest.approx(70e3)


def test_power_target_solves_gain():
    f = _noise_frame(7, power_w=1e-3)
    seg = FiberSegment(50e3, 0.2, 17.0, 80.0, nonlinear_index_n2=0.0)
    span = SpanSpec(segments=(seg,), output_power_target_dbm=3.0)
    out = propagate_link(f, [span], seed=None, max_step_m=5e3)
    assert out.power_dbm == pytest.approx(3.0, abs=1e-9)


def test_link_noise_reproducible():
    f = _noise_frame(8)
    spans = [hybrid_span()] * 2
    a = propagate_link(f, spans, seed=42, max_step_m=7e3)
    b = propagate_link(f, spans, seed=42, max_step_m=7e3)
    np.testing.assert_array_equal(a.samples, b.samples)


# ---------------------------------------------------------------------------
# WDM
# ---------------------------------------------------------------------------


def _bandlimited_frame(seed, n, fs, bw, power_w=1e-3):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
    spec = np.fft.fft(s, axis=1)
    freqs = np.fft.fftfreq(n, 1 / fs)
    spec[:, np.abs(freqs) > bw / 2] = 0
    s = np.fft.ifft(spec, axis=1)
    f = WaveformFrame(samples=s, sample_rate=fs, symbol_rate=35e9)
    return f.with_samples(f.samples * math.sqrt(power_w / f.power))


def test_single_channel_mux_is_identity():
    f = _bandlimited_frame(9, 4096, 140e9, 35.35e9)
    grid = WdmGrid(channel_count=1, spacing=35.5e9)
    out = wdm_mux([f], grid)
    np.testing.assert_allclose(out.samples, f.samples, atol=1e-15)


def test_two_channel_spectra_disjoint_and_power_adds():
    # fs/n = 12.5 MHz divides 17.75 GHz: the shifts are FFT-bin aligned, so
    # the periodic spectra stay exactly disjoint
    fs, n = 204.8e9, 1 << 14
    a = _bandlimited_frame(10, n, fs, 35.35e9)
    b = _bandlimited_frame(11, n, fs, 35.35e9)
    grid = WdmGrid(channel_count=2, spacing=35.5e9)
    out = wdm_mux([a, b], grid)
    assert out.power == pytest.approx(a.power + b.power, rel=1e-6)
    # spectral mask: energy in the guard gap around 0 Hz stays tiny
    spec = np.abs(np.fft.fft(out.samples[0])) ** 2
    freqs = np.fft.fftfreq(n, 1 / fs)
    gap = spec[np.abs(freqs) < 0.05e9].sum()
    band = spec[(np.abs(freqs) > 0.2e9) & (np.abs(freqs) < 35e9)].sum()
    assert gap < 1e-6 * band


def test_mux_rejects_overlap_and_overflow():
    f = _bandlimited_frame(12, 2048, 140e9, 30e9)
    with pytest.raises(ConfigurationError):
        wdm_mux([f, f], WdmGrid(channel_count=2, spacing=30e9))  # below symbol rate
    many = [f] * 4
    with pytest.raises(ConfigurationError):
        wdm_mux(many, WdmGrid(channel_count=4, spacing=40e9))  # 155 GHz > fs


def test_tilt_two_channels_exact_and_power_preserved():
    a = _noise_frame(13)
    b = _noise_frame(14)
    out = apply_spectral_tilt([a, b], -2.0)
    before = a.power + b.power
    assert sum(ch.power for ch in out) == pytest.approx(before, rel=1e-12)
    diff_db = 10 * math.log10(out[0].power / out[1].power)
    assert diff_db == pytest.approx(2.0, abs=1e-9)


def test_tilt_endpoint_ratio_306_channels():
    chans = [_noise_frame(s, n=64) for s in range(306)]
    out = apply_spectral_tilt(chans, -2.0)
    ratio = out[0].power / out[-1].power
    assert ratio == pytest.approx(10 ** 0.2, rel=1e-9)


def test_tilt_zero_is_identity():
    a = _noise_frame(15)
    out = apply_spectral_tilt([a, a], 0.0)
    np.testing.assert_array_equal(out[0].samples, a.samples)


# ---------------------------------------------------------------------------
# impairments
# ---------------------------------------------------------------------------


def test_transmitter_noise_sets_snr():
    f = _noise_frame(16, n=200_000)
    noisy = add_transmitter_noise(f, 20.0, seed=3)
    delta = noisy.samples - f.samples
    snr = f.power / (np.mean(np.abs(delta) ** 2) * 2)
    assert 10 * math.log10(snr) == pytest.approx(20.0, abs=0.1)


def test_wiener_walk_variance_scales():
    track = wiener_phase_walk(200_000, 200e3, 35e9, seed=4)
    increments = np.diff(track)
    assert np.var(increments) == pytest.approx(2 * math.pi * 200e3 / 35e9, rel=0.05)
    assert track[0] == 0.0


def test_frequency_shift_and_jones_rotation():
    f = _noise_frame(17, n=1024)
    shifted = apply_frequency_shift(f, 500e6)
    assert shifted.power == pytest.approx(f.power, rel=1e-12)
    rot = apply_jones_rotation(f, math.pi / 2)
    np.testing.assert_allclose(rot.samples[0], f.samples[1], atol=1e-15)
    np.testing.assert_allclose(rot.samples[1], -f.samples[0], atol=1e-15)


# ---------------------------------------------------------------------------
# binary format
# ---------------------------------------------------------------------------


def test_waveform_round_trip(tmp_path):
    f = _noise_frame(18, n=777, fs=71e9, rs=35.5e9)
    path = tmp_path / "w.bin"
    write_waveform(f, path)
    back = read_waveform(path, symbol_rate=35.5e9)
    np.testing.assert_array_equal(back.samples, f.samples)
    assert back.sample_rate == f.sample_rate
    assert back.center_frequency == f.center_frequency
    assert back.symbol_rate == 35.5e9
    # default symbol rate convention: half the sample rate
    again = read_waveform(path)
    assert again.symbol_rate == pytest.approx(f.sample_rate / 2)


def test_waveform_reader_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\0" * 60)
    with pytest.raises(ConfigurationError):
        read_waveform(path)
    path2 = tmp_path / "trunc.bin"
    f = _noise_frame(19, n=64)
    write_waveform(f, path2)
    data = path2.read_bytes()
    path2.write_bytes(data[: len(data) // 2])
    with pytest.raises(ConfigurationError):
        read_waveform(path2)
