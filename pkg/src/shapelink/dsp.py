"""Transmitter pulse shaping and the coherent receiver chain.

The receiver stages mirror a conventional dual-polarization coherent DSP
stack: matched filtering, chromatic dispersion compensation (or digital
back-propagation), a radius-directed 2x2 butterfly equalizer at two
samples per symbol, blind frequency offset estimation from the 4th-power
spectrum, block-wise 4th-power carrier phase estimation keyed to the
constellation's marker ring, and bitwise LLR demapping.

All operations are pure functions of their inputs; the adaptive equalizer
is sequential over samples by definition but deterministic for a fixed
input frame and config.

Conventions
-----------
- Pulse shaping applies ``H_tx = sqrt(L * H_rc)`` on the FFT grid at
  ``L`` samples per symbol (unit-energy impulse response); the matched
  filter is the unit-peak ``H_rx = sqrt(H_rc)``, a passive filter that
  never increases energy and passes flat in-band content untouched; and
  :func:`decimate` restores the rate-conversion gain ``sqrt(L)``, making
  matched-filter-plus-decimation the exact adjoint of the shaping
  isometry.  shape -> matched -> decimate at the correct phase recovers
  the symbols exactly (to rounding).
- Frames are treated as periodic (FFT filtering), consistent with the
  channel module.
- LLR sign convention: positive LLR means bit 0 is the more likely,
  matching :func:`shapelink.constellation.bitwise_llrs`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import SpanSpec, WaveformFrame, _ssfm_core
from .constellation import Constellation, bitwise_llrs
from .errors import AlignmentError, ConfigurationError, EstimationFailure

__all__ = [
    "DspConfig",
    "DEFAULT_DSP_CONFIG",
    "SymbolFrame",
    "LlrFrame",
    "CpeResult",
    "EqualizerState",
    "random_symbols",
    "rrc_shape",
    "matched_filter",
    "decimate",
    "cd_compensate",
    "rde_equalize",
    "frequency_offset_compensate",
    "vv_cpe",
    "dbp",
    "llr_demap",
    "snr_estimate",
    "evm_db",
]


# ---------------------------------------------------------------------------
# configuration and frame types


@dataclass(frozen=True)
class DspConfig:
    """Receiver-chain parameters.

    Parameters
    ----------
    rrc_rolloff : float
        Root-raised-cosine roll-off, in (0, 1].
    equalizer_taps : int
        Butterfly FIR length per branch; must be odd (center spike).
    equalizer_step : float
        LMS step size of the radius-directed update.
    equalizer_passes : int
        Adaptation passes over the frame; taps persist between passes and
        the returned symbols come from the final pass.
    cpe_block_length : int
        Symbols per carrier-phase-estimation block.
    dbp_steps_per_span : int
        Split-step count per span for digital back-propagation.
    demap_noise_variance : float or None
        Total complex noise variance handed to the demapper; None selects
        blind estimation from marker-ring radial residuals.
    """

    rrc_rolloff: float = 0.01
    equalizer_taps: int = 19
    equalizer_step: float = 1e-3
    equalizer_passes: int = 2
    cpe_block_length: int = 64
    dbp_steps_per_span: int = 4
    demap_noise_variance: float | None = None

    def __post_init__(self):
        if not 0.0 < self.rrc_rolloff <= 1.0:
            raise ValueError("rrc_rolloff must be in (0, 1]")
        if self.equalizer_taps < 1 or self.equalizer_taps % 2 == 0:
            raise ValueError("equalizer_taps must be a positive odd integer")
        if self.equalizer_step <= 0:
            raise ValueError("equalizer_step must be positive")
        if self.equalizer_passes < 1:
            raise ValueError("equalizer_passes must be at least 1")
        if self.cpe_block_length < 1:
            raise ValueError("cpe_block_length must be at least 1")
        if self.dbp_steps_per_span < 1:
            raise ValueError("dbp_steps_per_span must be at least 1")
        if self.demap_noise_variance is not None and self.demap_noise_variance <= 0:
            raise ValueError("demap_noise_variance must be positive or None")


DEFAULT_DSP_CONFIG = DspConfig()


@dataclass(frozen=True)
class SymbolFrame:
    """Dual-polarization symbol-rate frame.

    ``symbols`` is a (2, M) complex array at one sample per symbol.
    ``alignment`` is the offset of symbol 0 into the transmitted sequence,
    or None when unknown (e.g. after blind stages).
    """

    symbols: np.ndarray
    symbol_rate: float = 35e9
    alignment: int | None = None

    def __post_init__(self):
        sym = np.ascontiguousarray(self.symbols, dtype=np.complex128)
        if sym.ndim != 2 or sym.shape[0] != 2 or sym.shape[1] < 1:
            raise ValueError("symbols must have shape (2, M) with M >= 1")
        if not np.all(np.isfinite(sym.view(np.float64))):
            raise ValueError("symbols must be finite")
        if self.symbol_rate <= 0:
            raise ValueError("symbol_rate must be positive")
        sym.setflags(write=False)
        object.__setattr__(self, "symbols", sym)

    @property
    def n_symbols(self) -> int:
        return self.symbols.shape[1]

    def with_symbols(self, symbols: np.ndarray) -> "SymbolFrame":
        return replace(self, symbols=symbols)


@dataclass(frozen=True)
class LlrFrame:
    """Bitwise LLRs for a dual-polarization symbol frame.

    ``llrs`` has shape (2, M, bits_per_symbol); positive values favor
    bit 0.  ``noise_variance`` records the value the demapper used.
    """

    llrs: np.ndarray
    noise_variance: float

    def __post_init__(self):
        llrs = np.asarray(self.llrs, dtype=np.float64)
        if llrs.ndim != 3 or llrs.shape[0] != 2:
            raise ValueError("llrs must have shape (2, M, bits)")
        object.__setattr__(self, "llrs", llrs)

    @property
    def n_symbols(self) -> int:
        return self.llrs.shape[1]


@dataclass(frozen=True)
class CpeResult:
    """Carrier-phase-estimation output.

    ``phase_track`` is the per-symbol estimate (radians, block-wise
    constant); ``empty_blocks`` counts blocks that contained no
    marker-classified symbol and inherited their predecessor's estimate.
    """

    frame: SymbolFrame
    phase_track: np.ndarray
    empty_blocks: int


@dataclass(frozen=True)
class EqualizerState:
    """Converged butterfly taps plus the divergence-restart count."""

    taps: np.ndarray  # (2, 2, K): [out_pol, in_pol, tap]
    restarts: int
    step_used: float


def random_symbols(c: Constellation, count: int, seed: int) -> tuple[SymbolFrame, np.ndarray]:
    """Draw uniform random symbols on both polarizations.

    Returns the frame and the (2, count) point-index array; transmitted
    bits are ``c.bit_matrix[indices]``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(c.points), size=(2, count))
    return SymbolFrame(symbols=c.points[idx], alignment=0), idx


# ---------------------------------------------------------------------------
# pulse shaping


def _rc_spectrum(f: np.ndarray, symbol_rate: float, rolloff: float) -> np.ndarray:
    """Raised-cosine magnitude response (peak 1) on the given frequencies."""
    af = np.abs(f)
    f1 = 0.5 * (1.0 - rolloff) * symbol_rate
    f2 = 0.5 * (1.0 + rolloff) * symbol_rate
    h = np.zeros_like(af)
    h[af <= f1] = 1.0
    band = (af > f1) & (af <= f2)
    h[band] = 0.5 * (1.0 + np.cos(math.pi * (af[band] - f1) / (rolloff * symbol_rate)))
    return h


def _rrc_filter(
    n: int, sample_rate: float, symbol_rate: float, rolloff: float, gain: float = 1.0
) -> np.ndarray:
    if not 0.0 < rolloff <= 1.0:
        raise ValueError("rolloff must be in (0, 1]")
    f = np.fft.fftfreq(n, d=1.0 / sample_rate)
    return np.sqrt(gain * _rc_spectrum(f, symbol_rate, rolloff))


def rrc_shape(frame: SymbolFrame, oversampling: int, rolloff: float = 0.01) -> WaveformFrame:
    """Upsample and root-raised-cosine shape a symbol frame.

    Zero-stuffs to ``oversampling`` samples per symbol and applies
    ``sqrt(L * H_rc)`` on the FFT grid, so the shaping impulse response
    has unit energy and the cascade with :func:`matched_filter` and
    :func:`decimate` is a unit-gain Nyquist raised cosine (exact symbol
    recovery at the right phase).
    """
    if oversampling < 2:
        raise ValueError("oversampling must be at least 2")
    sym = frame.symbols
    yield_rate = frame.symbol_rate * oversampling
    up = np.zeros((2, sym.shape[1] * oversampling), dtype=np.complex128)
    up[:, ::oversampling] = sym
    h = _rrc_filter(
        up.shape[1], yield_rate, frame.symbol_rate, rolloff, gain=float(oversampling)
    )
    shaped = np.fft.ifft(np.fft.fft(up, axis=1) * h, axis=1)
    return WaveformFrame(
        samples=shaped, sample_rate=yield_rate, symbol_rate=frame.symbol_rate
    )


def matched_filter(frame: WaveformFrame, rolloff: float = 0.01) -> WaveformFrame:
    """Apply the receive root-raised-cosine filter.

    Unit peak gain (``sqrt(H_rc)``): flat in-band content passes
    untouched, out-of-band components are removed, and no input can gain
    energy.  The rate-conversion gain lives in :func:`decimate`.
    """
    h = _rrc_filter(frame.n_samples, frame.sample_rate, frame.symbol_rate, rolloff)
    out = np.fft.ifft(np.fft.fft(frame.samples, axis=1) * h, axis=1)
    return frame.with_samples(out)


def decimate(frame: WaveformFrame, phase: int = 0) -> SymbolFrame:
    """Take one sample per symbol at the given phase, scaled by sqrt(L).

    The sqrt(oversampling) gain restores the symbol-domain scale: the
    unit-energy shaping pulse spreads each symbol's energy over L
    samples, and matched-filter-plus-scaled-decimation is the adjoint of
    that isometry, so the shape -> matched -> decimate cascade has unit
    gain.
    """
    ratio = frame.sample_rate / frame.symbol_rate
    step = round(ratio)
    if abs(ratio - step) > 1e-9 or step < 1:
        raise ValueError("sample rate must be an integer multiple of the symbol rate")
    if not 0 <= phase < step:
        raise ValueError("phase must be in [0, oversampling)")
    return SymbolFrame(
        symbols=math.sqrt(step) * frame.samples[:, phase::step],
        symbol_rate=frame.symbol_rate,
        alignment=None,
    )


# ---------------------------------------------------------------------------
# linear compensation

_C_M_S = 299_792_458.0


def cd_compensate(
    frame: WaveformFrame, total_dispersion_ps_nm: float, wavelength_nm: float = 1550.0
) -> WaveformFrame:
    """Remove accumulated chromatic dispersion with an all-pass spectral phase.

    ``total_dispersion_ps_nm`` is the accumulated D*L of the link being
    undone; the operator is the exact inverse of the split-step linear
    stage, so compensating a linear-only fiber is an identity round trip.
    """
    lam = wavelength_nm * 1e-9
    dl_si = total_dispersion_ps_nm * 1e-3  # ps/nm -> s/m
    beta2_l = -dl_si * lam**2 / (2.0 * math.pi * _C_M_S)  # s^2
    f = np.fft.fftfreq(frame.n_samples, d=1.0 / frame.sample_rate)
    op = np.exp(-2j * math.pi**2 * beta2_l * f**2)
    out = np.fft.ifft(np.fft.fft(frame.samples, axis=1) * op, axis=1)
    return frame.with_samples(out)


# ---------------------------------------------------------------------------
# adaptive equalization


def _nearest_radius_sq(radii_sq: np.ndarray, power: float) -> float:
    return float(radii_sq[np.argmin(np.abs(radii_sq - power))])


def rde_equalize(
    frame: WaveformFrame,
    c: Constellation,
    cfg: DspConfig = DEFAULT_DSP_CONFIG,
    return_state: bool = False,
):
    """Radius-directed 2x2 butterfly equalizer at two samples per symbol.

    Blind LMS with error ``(r_nearest^2 - |y|^2) * y`` against the
    constellation's radius set, center-spike initialization, symmetric
    (centered) tap windows so the converged identity channel introduces
    no delay.  The input is first scaled to unit per-polarization power,
    matching the unit-power constellation.

    If the output power of a recent block exceeds 10x the input power the
    run is flagged as diverged and restarted from scratch with the step
    halved.  Returns the symbol-rate output, plus an
    :class:`EqualizerState` when ``return_state`` is true.
    """
    ratio = frame.sample_rate / frame.symbol_rate
    if abs(ratio - 2.0) > 1e-9:
        raise ValueError("rde_equalize expects exactly 2 samples per symbol")
    k = cfg.equalizer_taps
    half = (k - 1) // 2

    a = np.array(frame.samples)
    # unit average power per polarization (the radius set assumes it)
    a *= math.sqrt(1.0 / np.mean(np.abs(a) ** 2))

    radii_sq = np.asarray(c.radius_set()) ** 2
    n_sym = a.shape[1] // 2
    pad = np.pad(a, ((0, 0), (half, half)))
    win_x = np.lib.stride_tricks.sliding_window_view(pad[0], k)[::2][:n_sym]
    win_y = np.lib.stride_tricks.sliding_window_view(pad[1], k)[::2][:n_sym]

    check_every = 128
    max_restarts = 12
    restarts = 0
    mu = cfg.equalizer_step

    while True:
        w = np.zeros((2, 2, k), dtype=np.complex128)
        w[0, 0, half] = 1.0
        w[1, 1, half] = 1.0
        out = np.empty((2, n_sym), dtype=np.complex128)
        diverged = False
        block_acc = 0.0

        for p in range(cfg.equalizer_passes):
            for n in range(n_sym):
                ux = win_x[n]
                uy = win_y[n]
                yx = np.dot(w[0, 0], ux) + np.dot(w[0, 1], uy)
                yy = np.dot(w[1, 0], ux) + np.dot(w[1, 1], uy)
                px = yx.real * yx.real + yx.imag * yx.imag
                py = yy.real * yy.real + yy.imag * yy.imag
                ex = _nearest_radius_sq(radii_sq, px) - px
                ey = _nearest_radius_sq(radii_sq, py) - py
                gx = mu * ex * yx
                gy = mu * ey * yy
                w[0, 0] += gx * ux.conj()
                w[0, 1] += gx * uy.conj()
                w[1, 0] += gy * ux.conj()
                w[1, 1] += gy * uy.conj()
                out[0, n] = yx
                out[1, n] = yy
                block_acc += px + py
                # catch runaway outputs before they overflow to inf/nan,
                # where the block average comparison would go silent
                if px + py > 1e4:
                    diverged = True
                    break
                if (n + 1) % check_every == 0:
                    if not math.isfinite(block_acc) or block_acc / (2 * check_every) > 10.0:
                        diverged = True
                        break
                    block_acc = 0.0
            if diverged:
                break
        if not diverged:
            break
        restarts += 1
        if restarts > max_restarts:
            raise EstimationFailure("equalizer diverged at the minimum step size")
        mu *= 0.5

    result = SymbolFrame(symbols=out, symbol_rate=frame.symbol_rate, alignment=None)
    if return_state:
        return result, EqualizerState(taps=w, restarts=restarts, step_used=mu)
    return result


# ---------------------------------------------------------------------------
# carrier recovery


def frequency_offset_compensate(
    frame: SymbolFrame, c: Constellation
) -> tuple[SymbolFrame, float]:
    """Estimate and remove a carrier frequency offset.

    The estimator locates the spectral line of the 4th-power signal
    (present whenever the constellation's 4th moment is nonzero, which
    holds for the square grid and the shaped designs alike), refines the
    peak with parabolic interpolation, and derotates.  Reliable for
    offsets below symbol_rate / 8; the 4th-power line aliases beyond
    that.

    Raises
    ------
    EstimationFailure
        If no spectral line stands above the noise floor.
    """
    s = frame.symbols
    m = s.shape[1]
    nfft = 1 << max(10, int(math.ceil(math.log2(4 * m))))
    quad = s**4
    mag = np.zeros(nfft)
    for p in range(2):
        mag += np.abs(np.fft.fft(quad[p], nfft)) ** 2
    peak = int(np.argmax(mag))
    floor = np.median(mag)
    if mag[peak] < 8.0 * floor:
        raise EstimationFailure("no 4th-power spectral line above threshold")
    # parabolic refinement on the log-magnitude of the three bins at the peak
    trio = np.log(mag[[(peak - 1) % nfft, peak, (peak + 1) % nfft]])
    denom = trio[0] - 2.0 * trio[1] + trio[2]
    delta = 0.0 if denom == 0.0 else 0.5 * (trio[0] - trio[2]) / denom
    bin_hz = frame.symbol_rate / nfft
    f4 = np.fft.fftfreq(nfft, d=1.0 / frame.symbol_rate)[peak] + delta * bin_hz
    offset = f4 / 4.0
    n = np.arange(m)
    out = s * np.exp(-2j * math.pi * offset * n / frame.symbol_rate)[None, :]
    return frame.with_symbols(out), float(offset)


def _marker_threshold(c: Constellation) -> float:
    radii = np.abs(c.points)
    others = np.delete(radii, sorted(c.marker_indices))
    return 0.5 * (c.marker_radius() + float(others.max()))


def vv_cpe(
    frame: SymbolFrame, c: Constellation, cfg: DspConfig = DEFAULT_DSP_CONFIG
) -> CpeResult:
    """Block-wise 4th-power carrier phase estimation.

    When the constellation carries ring markers, only symbols whose
    magnitude exceeds the midpoint between the marker radius and the
    largest non-marker radius enter the estimate; the markers' common
    radius makes their 4th power a clean line at 4x the carrier phase
    plus a constellation constant.  Without markers every symbol
    contributes (plain 4th-power partitioning).

    Per block the 4th-power phasors of both polarizations are summed,
    smoothed over a 3-block window, and the angle referenced against the
    constellation constant.  The pi/2 ambiguity is resolved by block-to-
    block continuity; the first block lands on the branch nearest zero.
    Blocks with no classified symbol inherit the previous estimate and
    are counted in ``empty_blocks``.
    """
    s = frame.symbols
    m = s.shape[1]
    b = cfg.cpe_block_length
    n_blocks = (m + b - 1) // b

    if c.marker_indices:
        thr = _marker_threshold(c)
        mask = np.abs(s) >= thr
        ref_pts = c.points[sorted(c.marker_indices)]
    else:
        mask = np.ones_like(s, dtype=bool)
        ref_pts = c.points
    psi = float(np.angle((ref_pts**4).sum()))

    quad = np.where(mask, s, 0.0) ** 4
    padded = np.zeros((2, n_blocks * b), dtype=np.complex128)
    padded[:, :m] = quad
    z = padded.reshape(2, n_blocks, b).sum(axis=(0, 2))
    counts = np.zeros(n_blocks * b, dtype=np.int64)
    counts[:m] = mask.sum(axis=0)
    n_in_block = counts.reshape(n_blocks, b).sum(axis=1)

    kernel = np.ones(3)
    z_sm = np.convolve(z.real, kernel, "same") + 1j * np.convolve(z.imag, kernel, "same")

    theta = np.zeros(n_blocks)
    empty = 0
    prev = 0.0
    for i in range(n_blocks):
        if n_in_block[i] == 0:
            theta[i] = prev
            empty += 1
            continue
        raw = (np.angle(z_sm[i]) - psi) / 4.0
        # fold to the principal branch, then unwrap against the previous block
        raw = (raw + math.pi / 4.0) % (math.pi / 2.0) - math.pi / 4.0
        raw += (math.pi / 2.0) * round((prev - raw) / (math.pi / 2.0))
        theta[i] = raw
        prev = raw
    track = np.repeat(theta, b)[:m]
    out = s * np.exp(-1j * track)[None, :]
    return CpeResult(
        frame=frame.with_symbols(out), phase_track=track, empty_blocks=empty
    )


# ---------------------------------------------------------------------------
# digital back-propagation


def dbp(frame: WaveformFrame, spans: list[SpanSpec], steps_per_span: int) -> WaveformFrame:
    """Digitally back-propagate through the link, spans in reverse order.

    Each span's amplifier gain is divided out (power-targeted spans are
    treated as transparent, since the receiver cannot know the realized
    gain), then every segment is run backwards with negated dispersion
    and nonlinearity and loss turned into gain.  Step counts are
    allocated to segments proportionally to length, at least one each.
    With the forward fine-step counts reproduced exactly and a noiseless
    channel this inverts :func:`shapelink.channel.propagate_link` to
    numerical precision; at a few steps per span it is the conventional
    low-complexity nonlinearity compensator.
    """
    if steps_per_span < 1:
        raise ValueError("steps_per_span must be at least 1")
    a = np.array(frame.samples)
    for span in reversed(spans):
        gain_db = span.amp_gain_db if span.amp_gain_db is not None else span.loss_db
        a /= 10.0 ** (gain_db / 20.0)
        for seg in reversed(span.segments):
            steps = max(1, math.ceil(steps_per_span * seg.length_m / span.length_m))
            if steps > 10**7:
                raise ConfigurationError(f"{steps} split steps exceed the 1e7 limit")
            a = _ssfm_core(
                a,
                frame.sample_rate,
                seg.length_m,
                steps,
                -seg.beta2_s2_m,
                -seg.alpha_per_m,
                -seg.gamma_per_w_m * (8.0 / 9.0),
            )
    return frame.with_samples(a)


# ---------------------------------------------------------------------------
# demapping and quality metrics


def _auto_noise_variance(symbols: np.ndarray, c: Constellation) -> float:
    """Blind total-noise-variance estimate.

    With markers: radial residuals about the known marker radius.  The
    classification threshold truncates the lower tail of the marker
    cloud, so only magnitudes at or above the ring radius are used; for
    radial noise (half the 2D variance) that upper half-Gaussian has the
    full radial second moment about the ring.  Without markers, or with
    too few classified symbols, falls back to nearest-point residuals,
    which undershoot at low SNR.
    """
    flat = symbols.ravel()
    if c.marker_indices:
        r = c.marker_radius()
        mags = np.abs(flat)
        sel = mags[mags >= r]
        if sel.size >= 8:
            return float(max(2.0 * np.mean((sel - r) ** 2), 1e-12))
    chunk = 1 << 16
    acc = 0.0
    for start in range(0, flat.size, chunk):
        y = flat[start : start + chunk]
        d2 = np.abs(y[:, None] - c.points[None, :]) ** 2
        acc += float(d2.min(axis=1).sum())
    return float(max(acc / flat.size, 1e-12))


def llr_demap(
    frame: SymbolFrame,
    c: Constellation,
    noise_variance: float | None = None,
    max_log: bool = False,
) -> LlrFrame:
    """Bitwise LLRs for both polarizations under a circular Gaussian metric.

    ``noise_variance`` is the total (2D) variance; None estimates it
    blindly from the marker ring.  Positive LLR favors bit 0.
    """
    if noise_variance is None:
        noise_variance = _auto_noise_variance(frame.symbols, c)
    elif noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    m_bits = c.bit_matrix.shape[1]
    out = np.empty((2, frame.n_symbols, m_bits))
    for p in range(2):
        out[p] = bitwise_llrs(c, frame.symbols[p], noise_variance, max_log=max_log)
    return LlrFrame(llrs=out, noise_variance=float(noise_variance))


def _fields(x) -> np.ndarray:
    if isinstance(x, WaveformFrame):
        return x.samples
    if isinstance(x, SymbolFrame):
        return x.symbols
    return np.asarray(x, dtype=np.complex128)


def evm_db(frame, reference) -> float:
    """Error vector magnitude in dB: 10 log10(P(frame - ref) / P(ref)).

    Raw difference, no gain alignment; use for inversion checks where the
    scales are physically identical.
    """
    a = _fields(frame)
    r = _fields(reference)
    if a.shape != r.shape:
        raise AlignmentError("frames must have identical shapes")
    p_ref = np.mean(np.abs(r) ** 2)
    p_err = np.mean(np.abs(a - r) ** 2)
    if p_err == 0.0:
        return -math.inf
    return float(10.0 * math.log10(p_err / p_ref))


def snr_estimate(frame: SymbolFrame, reference: SymbolFrame, corr_threshold: float = 0.2) -> float:
    """Data-aided SNR in dB against an aligned reference frame.

    A per-polarization complex gain is fitted first (so the measure is
    invariant to common scaling and phase), then
    SNR = power(reference) / power(frame - reference), capped at 60 dB.

    Raises
    ------
    AlignmentError
        If shapes differ or the normalized correlation falls below
        ``corr_threshold`` (frames not sample-aligned).
    """
    a = _fields(frame)
    r = _fields(reference)
    if a.shape != r.shape:
        raise AlignmentError("frames must have identical shapes")
    p_ref = 0.0
    p_err = 0.0
    for p in range(a.shape[0]):
        cross = np.vdot(r[p], a[p])
        pr = np.vdot(r[p], r[p]).real
        pa = np.vdot(a[p], a[p]).real
        if pr == 0.0 or pa == 0.0:
            raise AlignmentError("cannot align an all-zero polarization")
        rho = abs(cross) / math.sqrt(pr * pa)
        if rho < corr_threshold:
            raise AlignmentError(
                f"correlation {rho:.3f} below threshold {corr_threshold}"
            )
        alpha = cross / pr
        p_ref += pr
        p_err += float(np.sum(np.abs(a[p] / alpha - r[p]) ** 2))
    if p_err <= p_ref * 1e-6:
        return 60.0
    return min(60.0, float(10.0 * math.log10(p_ref / p_err)))
