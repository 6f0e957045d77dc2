"""Waveform-level physical layer: fiber propagation, amplification, WDM.

The signal lives in :class:`WaveformFrame` objects, dual-polarization
complex baseband at ``sample_rate``.  Propagation over a
:class:`FiberSegment` uses the symmetric split-step Fourier method with
loss folded into the linear half-steps and a Manakov (8/9) Kerr rotation
at the step midpoint; a :class:`SpanSpec` chains segments and ends in a
lumped amplifier whose ASE is set by its noise figure.  WDM helpers shift
channels onto a fixed grid and impose a spectral tilt.

Conventions: optical power is the sum over both polarizations of the
time-averaged |field|^2, in watts.  Spectra follow the numpy FFT sign
(fields synthesized as sum of exp(+i 2 pi f t) components), which fixes
the dispersion operator to exp(+i 2 pi^2 beta2 h f^2).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c as _C0, h as _PLANCK

from .errors import ConfigurationError

__all__ = [
    "WaveformFrame",
    "FiberSegment",
    "SpanSpec",
    "WdmGrid",
    "ssfm_propagate",
    "amplify",
    "propagate_link",
    "wdm_mux",
    "apply_spectral_tilt",
    "hybrid_span",
    "with_power",
    "add_transmitter_noise",
    "wiener_phase_walk",
    "apply_phase",
    "apply_frequency_shift",
    "apply_jones_rotation",
    "write_waveform",
    "read_waveform",
]


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveformFrame:
    """Dual-polarization sampled field.

    ``samples`` has shape (2, N) in sqrt(W); ``center_frequency`` is the
    absolute optical carrier in Hz (the samples themselves are baseband).
    ``symbol_rate`` rides along as metadata so receivers know the
    oversampling factor.
    """

    samples: np.ndarray
    sample_rate: float
    symbol_rate: float = 35e9
    center_frequency: float = 193.4e12

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", s)
        if s.ndim != 2 or s.shape[0] != 2 or s.shape[1] == 0:
            raise ValueError("samples must have shape (2, N), N > 0")
        if not (self.sample_rate > 0 and self.symbol_rate > 0):
            raise ValueError("rates must be positive")
        if self.sample_rate < 2 * self.symbol_rate - 1e-6:
            raise ValueError("sample_rate must be >= 2 x symbol_rate")
        if not np.all(np.isfinite(s.view(np.float64))):
            raise ValueError("samples must be finite")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def oversampling(self) -> float:
        return self.sample_rate / self.symbol_rate

    @property
    def power(self) -> float:
        """Total optical power, W: sum over polarizations of mean |s|^2."""
        return float(np.mean(np.abs(self.samples) ** 2) * 2.0)

    @property
    def power_dbm(self) -> float:
        return 10.0 * math.log10(self.power * 1e3)

    def with_samples(self, samples: np.ndarray) -> "WaveformFrame":
        return replace(self, samples=samples)


def with_power(frame: WaveformFrame, power_dbm: float) -> WaveformFrame:
    """Rescale the field to the requested total power."""
    target = 10.0 ** (power_dbm / 10.0) * 1e-3
    scale = math.sqrt(target / frame.power)
    return frame.with_samples(frame.samples * scale)


# ---------------------------------------------------------------------------
# fiber and span descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberSegment:
    """One homogeneous stretch of fiber.

    Attenuation in dB/km, dispersion D in ps/nm/km at
    ``reference_wavelength`` (nm), effective area in um^2.  ``n2`` may be
    zero to switch the Kerr term off (linear fiber).
    """

    length_m: float
    attenuation_db_km: float
    dispersion_ps_nm_km: float
    effective_area_um2: float
    nonlinear_index_n2: float = 2.6e-20
    reference_wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError("length must be positive")
        if self.attenuation_db_km < 0:
            raise ValueError("attenuation must be >= 0")
        if self.effective_area_um2 <= 0:
            raise ValueError("effective area must be positive")
        if self.nonlinear_index_n2 < 0:
            raise ValueError("n2 must be >= 0")

    @property
    def loss_db(self) -> float:
        return self.attenuation_db_km * self.length_m / 1e3

    @property
    def alpha_per_m(self) -> float:
        """Power attenuation coefficient, 1/m."""
        return self.attenuation_db_km / 1e3 * math.log(10.0) / 10.0

    @property
    def beta2_s2_m(self) -> float:
        """GVD parameter beta2 = -D lambda^2 / (2 pi c), s^2/m."""
        lam = self.reference_wavelength_nm * 1e-9
        d_si = self.dispersion_ps_nm_km * 1e-6  # s/m^2
        return -d_si * lam**2 / (2.0 * math.pi * _C0)

    @property
    def gamma_per_w_m(self) -> float:
        """Kerr coefficient gamma = 2 pi n2 / (lambda A_eff), 1/(W m)."""
        lam = self.reference_wavelength_nm * 1e-9
        return 2.0 * math.pi * self.nonlinear_index_n2 / (lam * self.effective_area_um2 * 1e-12)


@dataclass(frozen=True)
class SpanSpec:
    """Fiber segments followed by one lumped amplifier.

    ``amp_gain_db`` None means transparent operation: the amplifier gain
    exactly offsets the summed segment loss.  ``output_power_target_dbm``,
    when set, solves the gain to hit that total output power instead.
    ``gain_tilt_db`` applies a linear-in-dB amplitude tilt across the
    sampled band at the amplifier (0 = flat).
    """

    segments: tuple
    amp_gain_db: float | None = None
    amp_noise_figure_db: float = 1.4
    gain_tilt_db: float = 0.0
    output_power_target_dbm: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("span needs at least one segment")
        if self.amp_gain_db is not None and self.amp_gain_db < 0:
            raise ValueError("amplifier gain must be >= 0")

    @property
    def loss_db(self) -> float:
        return sum(seg.loss_db for seg in self.segments)

    @property
    def length_m(self) -> float:
        return sum(seg.length_m for seg in self.segments)


def hybrid_span(
    noise_figure_db: float = 1.4,
    d_large_area: float = 20.5,
    d_standard: float = 17.0,
    n2: float = 2.6e-20,
) -> SpanSpec:
    """The 70 km two-fiber span used throughout: 40 km of large-area
    low-loss fiber (0.148 dB/km, 149 um^2) plus 30 km of standard fiber
    (0.16 dB/km, 81 um^2), total loss 10.72 dB, transparent amplifier."""
    return SpanSpec(
        segments=(
            FiberSegment(40e3, 0.148, d_large_area, 149.0, n2),
            FiberSegment(30e3, 0.16, d_standard, 81.0, n2),
        ),
        amp_noise_figure_db=noise_figure_db,
    )


@dataclass(frozen=True)
class WdmGrid:
    """Uniform frequency grid: ``channel_count`` slots ``spacing`` Hz apart
    centered on ``center`` (absolute optical frequency, Hz)."""

    channel_count: int
    spacing: float
    center: float = 193.4e12

    def __post_init__(self):
        if self.channel_count < 1:
            raise ValueError("channel_count must be >= 1")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    def offsets(self) -> np.ndarray:
        """Baseband offset of each slot from the grid center, Hz."""
        k = np.arange(self.channel_count, dtype=np.float64)
        return (k - (self.channel_count - 1) / 2.0) * self.spacing


# ---------------------------------------------------------------------------
# split-step propagation
# ---------------------------------------------------------------------------


def _ssfm_core(
    samples: np.ndarray,
    sample_rate: float,
    length_m: float,
    steps: int,
    beta2_s2_m: float,
    alpha_power_per_m: float,
    gamma_eff: float,
) -> np.ndarray:
    """Symmetric split-step engine shared by forward propagation and DBP.

    ``gamma_eff`` already includes the Manakov 8/9; negative
    ``alpha_power_per_m`` turns loss into gain (back-propagation).  The
    per-step sequence is linear half (dispersion + loss), full Kerr phase
    on the midpoint field, linear half again; with all three parameters
    negated and the same step count this is its own exact algebraic
    inverse (the phase operator preserves the modulus it reads).
    """
    h = length_m / steps
    f = np.fft.fftfreq(samples.shape[1], d=1.0 / sample_rate)
    half_op = np.exp(2j * math.pi**2 * beta2_s2_m * (h / 2.0) * f**2) * math.exp(
        -alpha_power_per_m * h / 4.0
    )
    a = np.array(samples)
    for _ in range(steps):
        a = np.fft.ifft(np.fft.fft(a, axis=1) * half_op, axis=1)
        if gamma_eff:
            a *= np.exp(1j * gamma_eff * h * np.sum(np.abs(a) ** 2, axis=0))
        a = np.fft.ifft(np.fft.fft(a, axis=1) * half_op, axis=1)
    return a


def ssfm_propagate(
    frame: WaveformFrame,
    seg: FiberSegment,
    max_step_m: float = 1000.0,
    scheme: str = "symmetric",
) -> WaveformFrame:
    """Propagate through one fiber segment (symmetric split-step).

    Loss and dispersion ride in the linear half-steps, the Manakov
    nonlinear phase (8/9) gamma (|Ax|^2 + |Ay|^2) h rotates both
    polarizations at the midpoint.  Uniform steps of length_m / ceil(L/h).
    """
    if scheme != "symmetric":
        raise ValueError("only the symmetric scheme is implemented")
    if max_step_m <= 0:
        raise ValueError("max_step_m must be positive")
    steps = int(math.ceil(seg.length_m / max_step_m))
    if steps > 10**7:
        raise ConfigurationError(f"{steps} split steps exceed the 1e7 limit")
    a = _ssfm_core(
        frame.samples,
        frame.sample_rate,
        seg.length_m,
        steps,
        seg.beta2_s2_m,
        seg.alpha_per_m,
        seg.gamma_per_w_m * (8.0 / 9.0),
    )
    return frame.with_samples(a)


# ---------------------------------------------------------------------------
# amplification
# ---------------------------------------------------------------------------


def amplify(
    frame: WaveformFrame,
    gain_db: float,
    noise_figure_db: float,
    seed: int | None,
    gain_tilt_db: float = 0.0,
) -> WaveformFrame:
    """Flat gain plus lumped ASE.

    The field is scaled by 10^(gain/20); each polarization then receives
    circular complex Gaussian noise of PSD (F G - 1) h nu / 2 over the
    simulation bandwidth (= sample_rate), nu being the optical carrier.
    ``seed`` None skips the noise entirely (noiseless instrument).  A
    nonzero ``gain_tilt_db`` applies a linear-in-dB tilt across the
    sampled band after the flat gain.
    """
    if gain_db < 0:
        raise ValueError("gain must be >= 0 dB")
    a = frame.samples * 10.0 ** (gain_db / 20.0)
    if gain_tilt_db:
        f = np.fft.fftfreq(frame.n_samples, d=1.0 / frame.sample_rate)
        tilt = 10.0 ** (gain_tilt_db / 20.0 * (f / frame.sample_rate))
        a = np.fft.ifft(np.fft.fft(a, axis=1) * tilt, axis=1)
    if seed is not None:
        f_lin = 10.0 ** (noise_figure_db / 10.0)
        g_lin = 10.0 ** (gain_db / 10.0)
        psd = (f_lin * g_lin - 1.0) * _PLANCK * frame.center_frequency / 2.0
        var = psd * frame.sample_rate  # per polarization
        if var < 0:
            var = 0.0
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal((2, frame.n_samples)) + 1j * rng.standard_normal(
            (2, frame.n_samples)
        )
        a = a + noise * math.sqrt(var / 2.0)
    return frame.with_samples(a)


def propagate_link(
    frame: WaveformFrame,
    spans,
    seed: int | None,
    max_step_m: float = 1000.0,
) -> WaveformFrame:
    """Run the frame through consecutive spans (fiber segments + amplifier).

    Transparent spans (amp_gain_db None, no power target) recover the
    exact span loss so the launch power repeats at every span output.
    ``seed`` None makes the whole link noiseless; otherwise per-span noise
    seeds are derived deterministically from ``seed``.
    """
    spans = tuple(spans)
    if not spans:
        raise ValueError("need at least one span")
    if seed is None:
        span_seeds = [None] * len(spans)
    else:
        span_seeds = list(np.random.SeedSequence(seed).generate_state(len(spans)))
    out = frame
    for span, span_seed in zip(spans, span_seeds):
        for seg in span.segments:
            out = ssfm_propagate(out, seg, max_step_m=max_step_m)
        if span.output_power_target_dbm is not None:
            gain_db = span.output_power_target_dbm - out.power_dbm
            gain_db = max(gain_db, 0.0)
        elif span.amp_gain_db is not None:
            gain_db = span.amp_gain_db
        else:
            gain_db = span.loss_db
        out = amplify(
            out,
            gain_db,
            span.amp_noise_figure_db,
            None if span_seed is None else int(span_seed),
            gain_tilt_db=span.gain_tilt_db,
        )
    return out


# ---------------------------------------------------------------------------
# WDM
# ---------------------------------------------------------------------------


def wdm_mux(channels, grid: WdmGrid) -> WaveformFrame:
    """Shift each channel to its grid slot and sum the fields.

    All inputs must share the sample grid (rate and length).  The result
    is centered on ``grid.center``; each channel's occupied band
    (symbol_rate-wide, roll-off margin included in the spacing) must stay
    inside the composite sample rate and clear of its neighbors.
    """
    channels = list(channels)
    if len(channels) != grid.channel_count:
        raise ConfigurationError("channel list does not match grid size")
    fs = channels[0].sample_rate
    n = channels[0].n_samples
    for ch in channels:
        if ch.sample_rate != fs or ch.n_samples != n:
            raise ConfigurationError("channels must share one sample grid")
    rs = max(ch.symbol_rate for ch in channels)
    if grid.spacing < rs:
        raise ConfigurationError("grid spacing below the symbol rate overlaps bands")
    span = (grid.channel_count - 1) * grid.spacing + rs
    if span > fs:
        raise ConfigurationError("aggregate band exceeds the sample rate")
    t = np.arange(n) / fs
    total = np.zeros((2, n), dtype=np.complex128)
    for ch, df in zip(channels, grid.offsets()):
        total += ch.samples * np.exp(2j * math.pi * df * t)
    return WaveformFrame(
        samples=total,
        sample_rate=fs,
        symbol_rate=channels[0].symbol_rate,
        center_frequency=grid.center,
    )


def apply_spectral_tilt(channels, tilt_db: float):
    """Linear-in-dB power tilt from the first to the last channel.

    The endpoint convention: last-channel power is ``tilt_db`` dB relative
    to the first (negative tilts fall with channel index).  The list's
    total power is renormalized to the pre-tilt total.  A single channel
    passes through unchanged.
    """
    channels = list(channels)
    if not channels:
        raise ValueError("need at least one channel")
    if len(channels) == 1 or tilt_db == 0.0:
        return channels
    count = len(channels)
    before = sum(ch.power for ch in channels)
    gains = 10.0 ** (tilt_db * np.arange(count) / (count - 1) / 20.0)
    tilted = [ch.with_samples(ch.samples * g) for ch, g in zip(channels, gains)]
    after = sum(ch.power for ch in tilted)
    fix = math.sqrt(before / after)
    return [ch.with_samples(ch.samples * fix) for ch in tilted]


# ---------------------------------------------------------------------------
# impairment helpers (transmitter noise loading, phase walk, offsets)
# ---------------------------------------------------------------------------


def add_transmitter_noise(frame: WaveformFrame, snr_db: float, seed: int) -> WaveformFrame:
    """Additive Gaussian noise loading at the transmitter.

    Sets the back-to-back SNR: each polarization receives circular noise
    at (per-polarization signal power) / 10^(snr/10).
    """
    rng = np.random.default_rng(seed)
    p_pol = np.mean(np.abs(frame.samples) ** 2, axis=1)
    var = p_pol / 10.0 ** (snr_db / 10.0)
    noise = rng.standard_normal(frame.samples.shape) + 1j * rng.standard_normal(frame.samples.shape)
    return frame.with_samples(frame.samples + noise * np.sqrt(var / 2.0)[:, None])


def wiener_phase_walk(n: int, linewidth_hz: float, rate_hz: float, seed: int) -> np.ndarray:
    """Cumulative laser phase walk: increments N(0, 2 pi linewidth / rate).

    Returns the phase track (radians, length n) so tests can use it as a
    known oracle; multiply the signal by exp(1j * track) to apply it.
    """
    rng = np.random.default_rng(seed)
    var = 2.0 * math.pi * linewidth_hz / rate_hz
    steps = rng.standard_normal(n) * math.sqrt(var)
    steps[0] = 0.0
    return np.cumsum(steps)


def apply_phase(frame: WaveformFrame, phase: np.ndarray) -> WaveformFrame:
    """Rotate both polarizations by a per-sample phase track (radians)."""
    return frame.with_samples(frame.samples * np.exp(1j * np.asarray(phase))[None, :])


def apply_frequency_shift(frame: WaveformFrame, offset_hz: float) -> WaveformFrame:
    """Multiply by exp(+i 2 pi offset t): a carrier frequency offset."""
    t = np.arange(frame.n_samples) / frame.sample_rate
    return frame.with_samples(frame.samples * np.exp(2j * math.pi * offset_hz * t)[None, :])


def apply_jones_rotation(frame: WaveformFrame, theta: float) -> WaveformFrame:
    """Static polarization rotation by ``theta`` (unitary, real Jones)."""
    j = np.array(
        [[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]],
        dtype=np.complex128,
    )
    return frame.with_samples(j @ frame.samples)


# ---------------------------------------------------------------------------
# binary interchange format
# ---------------------------------------------------------------------------

_MAGIC = b"WFRM"
_VERSION = 1
_HEADER = struct.Struct("<4sIQdd")  # magic, version, N, sample_rate, center_frequency

_FORMAT_DOC = """
Little-endian binary layout:

    bytes 0..3    magic "WFRM"
    bytes 4..7    version (uint32, currently 1)
    bytes 8..15   N, samples per polarization (uint64)
    bytes 16..23  sample_rate, Hz (float64)
    bytes 24..31  center_frequency, Hz (float64)
    then          2 polarizations x N samples, float64 I/Q interleaved,
                  polarization-major

The header does not carry the symbol rate; the reader takes it as a
parameter (default sample_rate / 2, i.e. two samples per symbol).
"""


def write_waveform(frame: WaveformFrame, path) -> None:
    """Serialize to the binary interchange format."""
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(_MAGIC, _VERSION, frame.n_samples, frame.sample_rate, frame.center_frequency)
        )
        inter = np.empty((2, frame.n_samples, 2), dtype="<f8")
        inter[:, :, 0] = frame.samples.real
        inter[:, :, 1] = frame.samples.imag
        fh.write(inter.tobytes())


def read_waveform(path, symbol_rate: float | None = None) -> WaveformFrame:
    """Read the binary interchange format.

    ``symbol_rate`` defaults to sample_rate / 2 because the header has no
    field for it (see the format notes).
    """
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ConfigurationError("truncated waveform header")
        magic, version, n, fs, fc = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ConfigurationError("not a waveform file (bad magic)")
        if version != _VERSION:
            raise ConfigurationError(f"unsupported waveform version {version}")
        raw = fh.read(2 * n * 2 * 8)
        if len(raw) != 2 * n * 2 * 8:
            raise ConfigurationError("truncated waveform payload")
    inter = np.frombuffer(raw, dtype="<f8").reshape(2, n, 2)
    samples = inter[:, :, 0] + 1j * inter[:, :, 1]
    return WaveformFrame(
        samples=samples,
        sample_rate=fs,
        symbol_rate=fs / 2.0 if symbol_rate is None else symbol_rate,
        center_frequency=fc,
    )
