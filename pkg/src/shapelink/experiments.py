"""Experiment runner: config files in, CSV tables and a manifest out.

Configs are INI text (sections of key = value pairs, parsed with
:mod:`configparser`); every run is fully seeded and produces
byte-identical CSV for identical config and seed.  A ``manifest.json``
recording the config hash, seed, package version, outputs, and wall
time is written for every run that starts, including failed ones;
partially written tables are removed on failure.

Five modes:

``shape``
    Gradient-shape a constellation at the design SNR, write the result
    as a constellation text file plus a one-row metrics table.
``gap_sweep``
    Capacity gap versus SNR for the four shipped designs, one column
    each.
``awgn_e2e``
    Symbols through the additive-noise channel at each sweep point:
    demapper information rate, pre-FEC error ratio, selected code rate,
    net throughput, and (with a parity matrix configured) measured
    post-decode error ratio.
``fiber_e2e``
    Full transmit-propagate-receive chain over the multi-span fiber
    link, reported for a dispersion-compensation-only receiver and a
    back-propagating one.
``linkbudget``
    Analytical per-wavelength budget across the amplification band.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import channel as ch
from . import constellation as cst
from . import dsp, fec, linkbudget
from .errors import ConfigurationError

__all__ = [
    "ExperimentConfig",
    "MetricsReport",
    "parse_config",
    "validate_config",
    "run_experiment",
    "MODES",
]

MODES = ("shape", "gap_sweep", "awgn_e2e", "fiber_e2e", "linkbudget")

_DEFAULT_RATES = (
    "1/4", "1/3", "2/5", "1/2", "3/5", "2/3", "3/4", "4/5", "5/6", "8/9", "9/10",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs, with desk-scale defaults.

    ``transmitter_snr_db`` may be infinite to disable transmitter noise;
    ``linewidth_hz`` 0 disables laser phase noise (and with it the
    carrier-phase stage of the fiber receiver).
    """

    mode: str = "gap_sweep"
    seed: int = 0
    output_dir: str = "runs"
    # constellation
    source: str = "system12"
    design_snr_db: float = 11.0
    # sweep
    snr_start_db: float = 0.0
    snr_stop_db: float = 20.0
    snr_step_db: float = 1.0
    estimator: str = "gh"
    mc_symbols: int = 1_000_000
    # channel
    span_count: int = 9
    launch_power_dbm: float = -0.5
    symbol_rate_hz: float = 35e9
    channel_spacing_hz: float = 50e9
    oversampling: int = 4
    symbols: int = 16384
    transmitter_snr_db: float = 20.0
    linewidth_hz: float = 0.0
    max_step_m: float = 1000.0
    # dsp
    rrc_rolloff: float = 0.01
    equalizer_taps: int = 19
    equalizer_step: float = 1e-3
    equalizer_passes: int = 2
    cpe_block_length: int = 64
    dbp_steps_per_span: int = 4
    # fec
    fec_matrix: str = ""
    fec_rates: tuple = _DEFAULT_RATES
    bch_overhead: float = 0.005
    ber_threshold: float = 3e-4
    # band sweep
    band_channels: int = 92
    mean_nf_db: float = 1.4
    nf_tilt_db: float = -5.7
    signal_tilt_db: float = -2.0
    band_start_nm: float = 1525.0
    band_stop_nm: float = 1616.0
    transceiver_snr_db: float = 20.0
    # shaping
    shape_iterations: int = 300
    papr_weight: float = 0.0
    add_markers: bool = False
    ring_gain: float = 1.15


@dataclass(frozen=True)
class MetricsReport:
    """What a run produced: the table plus where everything went."""

    mode: str
    columns: tuple
    rows: tuple
    outputs: tuple
    manifest_path: str


# ---------------------------------------------------------------------------
# config parsing


_SCHEMA = {
    "experiment": {"mode": str, "seed": int, "output": str},
    "constellation": {"source": str, "design_snr_db": float},
    "sweep": {
        "snr_start_db": float,
        "snr_stop_db": float,
        "snr_step_db": float,
        "estimator": str,
        "mc_symbols": int,
    },
    "channel": {
        "spans": int,
        "launch_power_dbm": float,
        "symbol_rate_hz": float,
        "channel_spacing_hz": float,
        "oversampling": int,
        "symbols": int,
        "transmitter_snr_db": float,
        "linewidth_hz": float,
        "max_step_m": float,
    },
    "dsp": {
        "rrc_rolloff": float,
        "equalizer_taps": int,
        "equalizer_step": float,
        "equalizer_passes": int,
        "cpe_block_length": int,
        "dbp_steps_per_span": int,
    },
    "fec": {
        "matrix": str,
        "rates": str,
        "bch_overhead": float,
        "ber_threshold": float,
    },
    "band": {
        "channels": int,
        "mean_nf_db": float,
        "nf_tilt_db": float,
        "signal_tilt_db": float,
        "start_nm": float,
        "stop_nm": float,
        "transceiver_snr_db": float,
    },
    "shape": {
        "iterations": int,
        "papr_weight": float,
        "add_markers": bool,
        "ring_gain": float,
    },
}

# (section, key) -> ExperimentConfig field where names differ
_FIELD_MAP = {
    ("experiment", "output"): "output_dir",
    ("channel", "spans"): "span_count",
    ("fec", "matrix"): "fec_matrix",
    ("fec", "rates"): "fec_rates",
    ("band", "channels"): "band_channels",
    ("band", "start_nm"): "band_start_nm",
    ("band", "stop_nm"): "band_stop_nm",
    ("shape", "iterations"): "shape_iterations",
}


def _coerce(raw: str, kind):
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is float:
        return float(raw)  # accepts "inf"
    if kind is int:
        return int(raw, 10)
    return raw.strip()


def parse_config(path) -> tuple:
    """Read an INI experiment config.

    Returns ``(config, diagnostics)``; ``config`` is None when the file
    cannot be parsed at all.  Unknown sections or keys and values of the
    wrong type are reported as ``section.key: message`` diagnostics.
    """
    diags = []
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        return None, [f"config: cannot read {path}: {exc.strerror or exc}"]
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            errs = getattr(exc, "errors", None)
            if errs:
                line = errs[0][0]
        where = f"line {line}: " if line else ""
        return None, [f"config: {where}{exc.message.splitlines()[0]}"]

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            diags.append(f"{section}: unknown section")
            continue
        for key, raw in parser.items(section):
            kind = _SCHEMA[section].get(key)
            if kind is None:
                diags.append(f"{section}.{key}: unknown key")
                continue
            try:
                val = _coerce(raw, kind)
            except ValueError:
                diags.append(
                    f"{section}.{key}: expected {kind.__name__}, got {raw!r}"
                )
                continue
            field_name = _FIELD_MAP.get((section, key), key)
            if field_name == "fec_rates":
                val = tuple(val.split())
            values[field_name] = val
    return ExperimentConfig(**values), diags


def _is_builtin(name: str) -> bool:
    return name in cst.builtin_names()


def validate_config(cfg: ExperimentConfig) -> list:
    """All invariant violations, as ``section.key: message`` strings."""
    d = []
    if cfg.mode not in MODES:
        d.append(f"experiment.mode: unknown mode {cfg.mode!r}; choose from {', '.join(MODES)}")
    if cfg.seed < 0:
        d.append("experiment.seed: must be nonnegative")
    if not _is_builtin(cfg.source) and not os.path.isfile(cfg.source):
        d.append(f"constellation.source: not a builtin name and file does not exist: {cfg.source}")
    if cfg.snr_step_db <= 0:
        d.append("sweep.snr_step_db: must be positive")
    elif cfg.snr_stop_db < cfg.snr_start_db:
        d.append("sweep.snr_stop_db: empty sweep range (stop below start)")
    if cfg.estimator not in ("gh", "mc"):
        d.append(f"sweep.estimator: unknown estimator {cfg.estimator!r} (gh or mc)")
    if cfg.mc_symbols < 1000:
        d.append("sweep.mc_symbols: need at least 1000 samples")
    if cfg.span_count < 1:
        d.append("channel.spans: must be at least 1")
    if cfg.symbol_rate_hz <= 0:
        d.append("channel.symbol_rate_hz: must be positive")
    elif cfg.channel_spacing_hz < cfg.symbol_rate_hz:
        d.append("channel.channel_spacing_hz: below the symbol rate (grid violation)")
    if cfg.oversampling < 2:
        d.append("channel.oversampling: must be at least 2")
    if cfg.symbols < 64:
        d.append("channel.symbols: must be at least 64")
    if cfg.linewidth_hz < 0:
        d.append("channel.linewidth_hz: must be nonnegative")
    if cfg.max_step_m <= 0:
        d.append("channel.max_step_m: must be positive")
    if not 0.0 < cfg.rrc_rolloff < 1.0:
        d.append("dsp.rrc_rolloff: must be in (0, 1)")
    if cfg.dbp_steps_per_span < 1:
        d.append("dsp.dbp_steps_per_span: must be at least 1")
    if cfg.fec_matrix and not os.path.isfile(cfg.fec_matrix):
        d.append(f"fec.matrix: file does not exist: {cfg.fec_matrix}")
    try:
        rates = [Fraction(r) for r in cfg.fec_rates]
        if not rates:
            d.append("fec.rates: must list at least one rate")
        elif any(not 0 < r < 1 for r in rates):
            d.append("fec.rates: every rate must be in (0, 1)")
    except (ValueError, ZeroDivisionError):
        d.append(f"fec.rates: unparseable rate list {' '.join(cfg.fec_rates)!r}")
    if not 0 <= cfg.bch_overhead < 1:
        d.append("fec.bch_overhead: must be in [0, 1)")
    if cfg.ber_threshold <= 0:
        d.append("fec.ber_threshold: must be positive")
    if cfg.band_channels < 1:
        d.append("band.channels: must be at least 1")
    if cfg.band_stop_nm <= cfg.band_start_nm and cfg.band_channels > 1:
        d.append("band.stop_nm: must exceed start_nm")
    if cfg.shape_iterations < 1:
        d.append("shape.iterations: must be at least 1")
    if cfg.papr_weight < 0:
        d.append("shape.papr_weight: must be nonnegative")
    if cfg.ring_gain < 1.0:
        d.append("shape.ring_gain: must be at least 1")
    return d


# ---------------------------------------------------------------------------
# deterministic CSV


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def _write_csv(path: str, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# shared pieces


def _load_constellation(cfg: ExperimentConfig) -> cst.Constellation:
    if _is_builtin(cfg.source):
        return cst.load_builtin(cfg.source)
    return cst.load_constellation(cfg.source)


def _sweep_points(cfg: ExperimentConfig) -> np.ndarray:
    count = int(math.floor((cfg.snr_stop_db - cfg.snr_start_db) / cfg.snr_step_db + 1e-9)) + 1
    return cfg.snr_start_db + cfg.snr_step_db * np.arange(count)


def _gmi_kwargs(cfg: ExperimentConfig, seed: int) -> dict:
    if cfg.estimator == "mc":
        return {"estimator": "monte_carlo", "samples": cfg.mc_symbols, "seed": seed}
    return {"estimator": "gauss_hermite", "order": 10}


def _dsp_config(cfg: ExperimentConfig) -> dsp.DspConfig:
    return dsp.DspConfig(
        rrc_rolloff=cfg.rrc_rolloff,
        equalizer_taps=cfg.equalizer_taps,
        equalizer_step=cfg.equalizer_step,
        equalizer_passes=cfg.equalizer_passes,
        cpe_block_length=cfg.cpe_block_length,
        dbp_steps_per_span=cfg.dbp_steps_per_span,
    )


def _aligned(rx: dsp.SymbolFrame, ref: dsp.SymbolFrame) -> dsp.SymbolFrame:
    """Remove per-polarization complex gain by least squares against the
    transmitted symbols (experiment-report alignment, not blind DSP)."""
    out = np.array(rx.symbols)
    for p in range(out.shape[0]):
        a = np.vdot(ref.symbols[p], out[p]) / np.vdot(ref.symbols[p], ref.symbols[p])
        if a == 0:
            raise ConfigurationError("received polarization is orthogonal to the reference")
        out[p] /= a
    return rx.with_symbols(out)


# ---------------------------------------------------------------------------
# modes


def _run_shape(cfg: ExperimentConfig, out_dir: str):
    from . import shaping

    initial = _load_constellation(cfg)
    shape_cfg = shaping.ShapingConfig(
        target_snr_db=cfg.design_snr_db,
        papr_penalty_weight=cfg.papr_weight,
        max_iterations=cfg.shape_iterations,
        jitter_seed=cfg.seed,
    )
    if cfg.papr_weight > 0:
        result = shaping.optimize_papr(initial, shape_cfg)
    else:
        result = shaping.optimize_awgn(initial, shape_cfg)
    shaped = result.constellation
    if cfg.add_markers:
        shaped = cst.add_ring_markers(shaped, ring_gain=cfg.ring_gain)

    shaped_path = os.path.join(out_dir, "shaped.txt")
    cst.save_constellation(shaped, shaped_path)

    gmi0 = cst.gmi_estimate(initial, cfg.design_snr_db)
    gmi1 = cst.gmi_estimate(shaped, cfg.design_snr_db)
    papr_i, papr_q = cst.papr(shaped)
    columns = (
        "design_snr_db",
        "gmi_initial_2d",
        "gmi_shaped_2d",
        "gap_shaped_4d",
        "papr_i",
        "papr_q",
        "iterations",
        "converged",
    )
    rows = [(
        cfg.design_snr_db,
        gmi0,
        gmi1,
        cst.gap_to_capacity(shaped, cfg.design_snr_db),
        papr_i,
        papr_q,
        result.iterations,
        result.converged,
    )]
    return columns, rows, [shaped_path]


_SWEEP_BUILTINS = (
    ("gap_square", "square64"),
    ("gap_awgn", "awgn12"),
    ("gap_papr", "papr12"),
    ("gap_system", "system12"),
)


def _run_gap_sweep(cfg: ExperimentConfig, out_dir: str, workers: int = 1):
    snrs = _sweep_points(cfg)
    if snrs.size == 0:
        raise ConfigurationError("sweep range is empty")
    designs = [(col, cst.load_builtin(name)) for col, name in _SWEEP_BUILTINS]
    kwargs = _gmi_kwargs(cfg, cfg.seed)

    def one(snr: float):
        return tuple(cst.gap_to_capacity(c, float(snr), **kwargs) for _, c in designs)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            gaps = list(pool.map(one, snrs))
    else:
        gaps = [one(s) for s in snrs]
    columns = ("snr_db",) + tuple(col for col, _ in designs)
    rows = [(float(s),) + g for s, g in zip(snrs, gaps)]
    return columns, rows, []


def _coded_ber(cfg, llr_magnitudes, rng) -> float:
    """Measured post-decode error ratio on the configured code.

    Random information words are encoded, the codeword bits impressed as
    signs on the measured LLR magnitudes (the channel is symmetric under
    the bit labeling, so this is equivalent to remapping and
    retransmitting), and the result decoded.
    """
    h = fec.load_alist(cfg.fec_matrix)
    enc = fec.systematic_encoder(h)
    flat = llr_magnitudes.reshape(-1)
    n_cw = flat.size // h.cols
    if n_cw == 0:
        return float("nan")
    info = rng.integers(0, 2, size=(n_cw, enc.k)).astype(np.uint8)
    cw = enc.encode(info)
    # sign-impress the codeword on the all-zero-calibrated LLR stream
    mag = flat[: n_cw * h.cols].reshape(n_cw, h.cols)
    signed = np.where(cw == 1, -mag, mag)
    res = fec.ldpc_decode(signed, h)
    return fec.ber_measure(res.bits, cw)


def _run_awgn_e2e(cfg: ExperimentConfig, out_dir: str):
    c = _load_constellation(cfg)
    snrs = _sweep_points(cfg)
    if snrs.size == 0:
        raise ConfigurationError("sweep range is empty")
    rates = [Fraction(r) for r in cfg.fec_rates]
    m = c.bit_matrix.shape[1]
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for snr_db in snrs:
        idx = rng.integers(0, len(c.points), size=cfg.symbols)
        tx = c.points[idx]
        noise_var = 10.0 ** (-float(snr_db) / 10.0)
        noise = rng.normal(size=(cfg.symbols, 2)) @ np.array([1.0, 1.0j])
        rx = tx + math.sqrt(noise_var / 2.0) * noise
        llrs = cst.bitwise_llrs(c, rx, noise_var)
        bits = c.bit_matrix[idx]
        gmi_2d = cst.gmi_from_llrs(llrs, bits)
        ber_pre = float(np.mean((llrs < 0).astype(np.uint8) != bits))
        rate, feasible = fec.select_rate(2.0 * gmi_2d, rates, bits_per_4d=2.0 * m)
        net, _ = fec.net_throughput(
            [float(rate) * 2.0 * m], cfg.symbol_rate_hz, cfg.bch_overhead, pre_bch=True
        )
        # ber_post_fec is what enters the outer code: measured through the
        # configured inner code, or the ideal-inner-code model (error free
        # at a feasible rate) when no matrix is given
        if cfg.fec_matrix:
            ber_post = _coded_ber(cfg, np.abs(llrs), rng)
        else:
            ber_post = 0.0 if feasible else float("nan")
        gate = fec.post_fec_gate(ber_post, cfg.ber_threshold) if math.isfinite(ber_post) else False
        gap_4d = 2.0 * (math.log2(1.0 + 10.0 ** (float(snr_db) / 10.0)) - gmi_2d)
        rows.append(
            (
                float(snr_db),
                gmi_2d,
                gap_4d,
                ber_pre,
                str(rate),
                feasible,
                net[0],
                gate,
                ber_post,
            )
        )
    columns = (
        "snr_db",
        "gmi_2d",
        "gap_4d",
        "ber_pre_fec",
        "code_rate",
        "rate_feasible",
        "net_gbps",
        "gate_pass",
        "ber_post_fec",
    )
    return columns, rows, []


def _receiver_chain(wave, spans, c, cfg, dsp_cfg, use_dbp: bool):
    """Receive one waveform: dispersion handling, matched filter,
    decimation, optional carrier phase tracking."""
    if use_dbp:
        comp = dsp.dbp(wave, spans, steps_per_span=cfg.dbp_steps_per_span)
    else:
        total_d = cfg.span_count * sum(
            seg.dispersion_ps_nm_km * seg.length_m / 1e3 for seg in spans[0].segments
        )
        comp = dsp.cd_compensate(wave, total_d)
    sym = dsp.decimate(dsp.matched_filter(comp, rolloff=cfg.rrc_rolloff))
    if cfg.linewidth_hz > 0:
        sym = dsp.vv_cpe(sym, c, dsp_cfg).frame
    return sym


def _symbol_metrics(sym, ref, c, tx_bits):
    aligned = _aligned(sym, ref)
    snr_db = dsp.snr_estimate(aligned, ref)
    llr_frame = dsp.llr_demap(aligned, c)
    m = llr_frame.llrs.shape[2]
    llrs = llr_frame.llrs.reshape(-1, m)
    bits = tx_bits.reshape(-1, m)
    gmi_2d = cst.gmi_from_llrs(llrs, bits)
    ber = float(np.mean((llrs < 0).astype(np.uint8) != bits))
    return snr_db, gmi_2d, ber


def _run_fiber_e2e(cfg: ExperimentConfig, out_dir: str):
    c = _load_constellation(cfg)
    dsp_cfg = _dsp_config(cfg)
    ref, idx = dsp.random_symbols(c, cfg.symbols, seed=cfg.seed)
    tx_bits = c.bit_matrix[idx]

    # transceiver impairment is symbol-referred (back-to-back SNR), so it
    # is injected before pulse shaping rather than as wideband noise
    tx = ref
    if math.isfinite(cfg.transmitter_snr_db):
        rng = np.random.default_rng(cfg.seed + 1)
        nv = 10.0 ** (-cfg.transmitter_snr_db / 10.0) * float(
            np.mean(np.abs(ref.symbols) ** 2)
        )
        noise = rng.normal(size=ref.symbols.shape + (2,)) @ np.array([1.0, 1.0j])
        tx = ref.with_symbols(ref.symbols + math.sqrt(nv / 2.0) * noise)

    wave = dsp.rrc_shape(tx, cfg.oversampling, rolloff=cfg.rrc_rolloff)
    wave = ch.with_power(wave, cfg.launch_power_dbm)
    if cfg.linewidth_hz > 0:
        walk = ch.wiener_phase_walk(
            wave.samples.shape[1], cfg.linewidth_hz, wave.sample_rate, seed=cfg.seed + 2
        )
        wave = ch.apply_phase(wave, walk)
    spans = [ch.hybrid_span()] * cfg.span_count
    link = ch.propagate_link(wave, spans, seed=cfg.seed + 3, max_step_m=cfg.max_step_m)

    sym_cdc = _receiver_chain(link, spans, c, cfg, dsp_cfg, use_dbp=False)
    sym_dbp = _receiver_chain(link, spans, c, cfg, dsp_cfg, use_dbp=True)
    snr_pre, gmi_pre, _ = _symbol_metrics(sym_cdc, ref, c, tx_bits)
    snr_post, gmi_post, ber_pre = _symbol_metrics(sym_dbp, ref, c, tx_bits)
    gate = fec.post_fec_gate(ber_pre, cfg.ber_threshold)
    ber_post = 0.0 if gate else ber_pre

    columns = (
        "snr_pre_dbp",
        "snr_post_dbp",
        "gmi_pre",
        "gmi_post",
        "ber_pre_fec",
        "ber_post_fec",
    )
    rows = [(snr_pre, snr_post, gmi_pre, gmi_post, ber_pre, ber_post)]
    return columns, rows, []


def _run_linkbudget(cfg: ExperimentConfig, out_dir: str):
    model = linkbudget.default_band_model(
        channels=cfg.band_channels,
        mean_nf_db=cfg.mean_nf_db,
        nf_tilt_db=cfg.nf_tilt_db,
        signal_tilt_db=cfg.signal_tilt_db,
        mean_power_dbm=cfg.launch_power_dbm,
        start_nm=cfg.band_start_nm,
        stop_nm=cfg.band_stop_nm,
    )
    span = ch.hybrid_span(noise_figure_db=cfg.mean_nf_db)
    profile = linkbudget.band_snr_profile(
        model, cfg.span_count, span, bandwidth_hz=cfg.symbol_rate_hz
    )
    rows = []
    for (wl, ase), power in zip(profile, model.per_channel_power_dbm):
        nli = linkbudget.gn_nli_estimate(
            span,
            power,
            channel_count=cfg.band_channels,
            spacing_hz=cfg.channel_spacing_hz,
            symbol_rate_hz=cfg.symbol_rate_hz,
            span_count=cfg.span_count,
        )
        total = linkbudget.combine_snr([ase, nli, cfg.transceiver_snr_db])
        rows.append((wl, ase, nli, total))
    columns = ("wavelength", "ase_snr", "nli_snr", "total_snr")
    return columns, rows, []


# ---------------------------------------------------------------------------
# orchestration


def _config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:
        return "unknown"


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> MetricsReport:
    """Validate, run, and persist one experiment.

    ``out_dir`` and ``seed`` override the config.  Raises
    :class:`ConfigurationError` on diagnostics (before anything is
    written) and re-raises runtime failures after writing a failed
    manifest and removing partial tables.
    """
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if out_dir is not None:
        cfg = dataclasses.replace(cfg, output_dir=out_dir)
    if workers < 1:
        raise ConfigurationError("workers must be at least 1")
    diags = validate_config(cfg)
    if diags:
        raise ConfigurationError("\n".join(diags))

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    manifest_path = os.path.join(out, "manifest.json")
    csv_path = os.path.join(out, f"{cfg.mode}.csv")
    tmp_path = csv_path + ".tmp"
    started = time.time()
    outputs: list = []
    status, error = "ok", None
    try:
        if cfg.mode == "shape":
            columns, rows, extra = _run_shape(cfg, out)
        elif cfg.mode == "gap_sweep":
            columns, rows, extra = _run_gap_sweep(cfg, out, workers=workers)
        elif cfg.mode == "awgn_e2e":
            columns, rows, extra = _run_awgn_e2e(cfg, out)
        elif cfg.mode == "fiber_e2e":
            columns, rows, extra = _run_fiber_e2e(cfg, out)
        else:
            columns, rows, extra = _run_linkbudget(cfg, out)
        _write_csv(tmp_path, columns, rows)
        os.replace(tmp_path, csv_path)
        outputs = [csv_path] + extra
    except BaseException as exc:
        status = "failed"
        error = f"{type(exc).__name__}: {exc}"
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    finally:
        manifest = {
            "mode": cfg.mode,
            "seed": cfg.seed,
            "config_sha256": _config_hash(cfg),
            "package_version": _package_version(),
            "wall_time_s": round(time.time() - started, 3),
            "status": status,
            "error": error,
            "outputs": [os.path.basename(p) for p in outputs],
        }
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    return MetricsReport(
        mode=cfg.mode,
        columns=tuple(columns),
        rows=tuple(tuple(r) for r in rows),
        outputs=tuple(outputs + [manifest_path]),
        manifest_path=manifest_path,
    )
