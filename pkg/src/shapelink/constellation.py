"""Labeled 64-point constellations, GMI/PAPR metrics, and ring markers.

The central design object is a :class:`Constellation`: 64 complex points with
distinct 6-bit labels, normalized to unit average power.  The module provides

* builders (:func:`square64`, :func:`load_builtin`) and text-file I/O,
* bit-interleaved GMI estimation over the complex AWGN channel, via
  Gauss-Hermite quadrature (deterministic, fast) or Monte Carlo (for
  reported figures),
* per-dimension peak-to-average power ratio,
* :func:`add_ring_markers`, which moves the four outermost points onto a
  common outer ring so blind phase estimation can key on them.

The GMI of a bit-interleaved system with uniform input is

    GMI = m - sum_k E[ log2(1 + exp(-(1 - 2 b_k) * LLR_k)) ]

with LLR_k = log(P(y|b_k=0) / P(y|b_k=1)) computed from circular Gaussian
metrics.  Both estimators evaluate exactly this quantity; they differ only in
how the expectation over noise is taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import DegenerateInputError

__all__ = [
    "Constellation",
    "square64",
    "load_builtin",
    "builtin_names",
    "load_constellation",
    "save_constellation",
    "gmi_estimate",
    "gap_to_capacity",
    "gmi_from_llrs",
    "bitwise_llrs",
    "papr",
    "add_ring_markers",
    "normalized",
]

_TINY = 1e-300


def normalized(points: np.ndarray) -> np.ndarray:
    """Scale a complex point set to unit average power."""
    points = np.asarray(points, dtype=np.complex128)
    power = np.mean(np.abs(points) ** 2)
    if power <= 0.0:
        raise ValueError("cannot normalize an all-zero point set")
    return points / np.sqrt(power)


@dataclass(frozen=True)
class Constellation:
    """64 labeled complex points at unit average power.

    Parameters
    ----------
    points : ndarray of complex, shape (64,)
        Point coordinates.  Mean of ``|p|**2`` must equal 1 within 1e-12.
    labels : tuple of str
        64 distinct 6-character bit strings, parallel to ``points``.
        Coincident points with distinct labels are permitted.
    marker_indices : frozenset of int
        Indices of points designated as ring markers (possibly empty).  If
        nonempty, all markers must share one common radius strictly greater
        than the radius of every non-marker point.
    design_snr_db : float or None
        SNR the constellation was shaped for, if any.
    """

    points: np.ndarray
    labels: tuple
    marker_indices: frozenset = field(default_factory=frozenset)
    design_snr_db: float | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.complex128)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "marker_indices", frozenset(self.marker_indices))
        if pts.shape != (64,):
            raise ValueError("a Constellation has exactly 64 points")
        if len(self.labels) != 64 or len(set(self.labels)) != 64:
            raise ValueError("labels must be 64 distinct bit strings")
        for lab in self.labels:
            if len(lab) != 6 or any(ch not in "01" for ch in lab):
                raise ValueError(f"bad 6-bit label: {lab!r}")
        if not np.all(np.isfinite(pts.view(np.float64))):
            raise ValueError("points must be finite")
        power = np.mean(np.abs(pts) ** 2)
        if abs(power - 1.0) > 1e-12:
            raise ValueError(f"mean power {power!r} is not 1 within 1e-12")
        if self.marker_indices:
            idx = sorted(self.marker_indices)
            if min(idx) < 0 or max(idx) >= 64:
                raise ValueError("marker index out of range")
            radii = np.abs(pts)
            r_mark = radii[idx]
            others = np.delete(radii, idx)
            if not np.allclose(r_mark, r_mark[0], rtol=1e-9, atol=1e-12):
                raise ValueError("marker points must share a common radius")
            if others.size and r_mark.min() <= others.max():
                raise ValueError("marker radius must exceed all non-marker radii")

    @property
    def bit_matrix(self) -> np.ndarray:
        """(64, 6) uint8 array of label bits; bit k is character k of the label."""
        return _bit_matrix(self.labels)

    def radius_set(self, tol: float = 1e-6) -> np.ndarray:
        """Distinct point radii (ascending), merged within ``tol`` (used by
        the radius-directed equalizer)."""
        radii = np.sort(np.abs(self.points))
        keep = [radii[0]]
        for r in radii[1:]:
            if r - keep[-1] > tol:
                keep.append(r)
        return np.asarray(keep)

    def marker_radius(self) -> float:
        """Common radius of the marker ring."""
        if not self.marker_indices:
            raise ValueError("constellation has no ring markers")
        return float(np.abs(self.points[sorted(self.marker_indices)]).mean())

    def replace(self, **kw) -> "Constellation":
        data = {
            "points": self.points,
            "labels": self.labels,
            "marker_indices": self.marker_indices,
            "design_snr_db": self.design_snr_db,
        }
        data.update(kw)
        return Constellation(**data)


def _bit_matrix(labels) -> np.ndarray:
    return np.array([[int(ch) for ch in lab] for lab in labels], dtype=np.uint8)


def _gray3(i: int) -> str:
    return format(i ^ (i >> 1), "03b")


def square64() -> Constellation:
    """Gray-labeled square 64QAM at unit average power.

    Levels are -7, -5, ..., +7 before normalization; the first three label
    bits select the I level and the last three the Q level, each axis
    Gray-coded.  Mean power of the integer grid is 42 (21 per dimension), so
    the normalization factor is 1/sqrt(42).
    """
    levels = np.arange(-7, 8, 2, dtype=np.float64)
    pts = []
    labs = []
    for i, li in enumerate(levels):
        for q, lq in enumerate(levels):
            pts.append(li + 1j * lq)
            labs.append(_gray3(i) + _gray3(q))
    pts = np.asarray(pts) / math.sqrt(42.0)
    return Constellation(points=pts, labels=tuple(labs))


# ---------------------------------------------------------------------------
# GMI estimation
# ---------------------------------------------------------------------------


def _coset_zero_matrix(bits: np.ndarray) -> np.ndarray:
    # column k selects the points whose bit k is 0
    return (bits == 0).astype(np.float64)


def gmi_estimate(
    c,
    snr_db: float,
    estimator: str = "gauss_hermite",
    order: int = 10,
    samples: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Bit-interleaved GMI of ``c`` on the complex AWGN channel, bit/2D.

    Parameters
    ----------
    c : Constellation or ndarray
        Constellation (or raw unit-power points with implicit binary labels
        for size-generic internal use).
    snr_db : float
        Es/N0 in dB for the unit-power constellation.
    estimator : {"gauss_hermite", "monte_carlo"}
        Deterministic quadrature (order >= 4) or seeded Monte Carlo.
    order : int
        Gauss-Hermite order per real dimension (default 10).
    samples, seed : int
        Monte Carlo sample count and RNG seed.

    Returns
    -------
    float
        GMI in [0, m] bit per 2D symbol (m = log2(point count)).
    """
    points, bits = _points_and_bits(c)
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    noise_var = 10.0 ** (-snr_db / 10.0) * float(np.mean(np.abs(points) ** 2))
    if estimator == "gauss_hermite":
        if order < 4:
            raise ValueError("gauss_hermite order must be >= 4")
        return _gmi_gauss_hermite(points, bits, noise_var, order)
    if estimator == "monte_carlo":
        return _gmi_monte_carlo(points, bits, noise_var, samples, seed)
    raise ValueError(f"unknown estimator {estimator!r}")


def _points_and_bits(c):
    if isinstance(c, Constellation):
        return c.points, c.bit_matrix
    points = np.asarray(c, dtype=np.complex128)
    m = int(round(math.log2(points.size)))
    if 2**m != points.size:
        raise ValueError("point count must be a power of two")
    bits = ((np.arange(points.size)[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(
        np.uint8
    )
    return points, bits


def _score_rows(logq, tx_bits, c0):
    # sum over bits of ln(S_all) - ln(S_same), per row; stable via row shift
    shift = logq.max(axis=-1, keepdims=True)
    p = np.exp(logq - shift)
    s_all = p.sum(axis=-1)
    s0 = p @ c0
    s_same = np.where(tx_bits == 0, s0, s_all[:, None] - s0)
    s_same = np.maximum(s_same, _TINY)
    m = tx_bits.shape[1]
    return m * np.log(s_all) - np.log(s_same).sum(axis=-1)


def _gh_nodes(noise_var: float, order: int):
    t, w = hermgauss(order)
    nodes = math.sqrt(noise_var) * (t[:, None] + 1j * t[None, :]).ravel()
    weights = (w[:, None] * w[None, :]).ravel() / math.pi
    return nodes, weights


def _gmi_gauss_hermite(points, bits, noise_var, order) -> float:
    big_m, m = bits.shape
    nodes, weights = _gh_nodes(noise_var, order)
    y = points[:, None] + nodes[None, :]  # (M, Q)
    d2 = np.abs(y[:, :, None] - points[None, None, :]) ** 2
    logq = (-d2 / noise_var).reshape(big_m * nodes.size, big_m)
    tx_bits = np.repeat(bits, nodes.size, axis=0)
    score = _score_rows(logq, tx_bits, _coset_zero_matrix(bits))
    score = score.reshape(big_m, nodes.size)
    loss = float((score @ weights).mean()) / math.log(2.0)
    return m - loss


def _gmi_monte_carlo(points, bits, noise_var, samples, seed) -> float:
    big_m, m = bits.shape
    rng = np.random.default_rng(seed)
    c0 = _coset_zero_matrix(bits)
    chunk = 1 << 17
    total = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        idx = rng.integers(0, big_m, size=n)
        noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = points[idx] + noise * math.sqrt(noise_var / 2.0)
        logq = -(np.abs(y[:, None] - points[None, :]) ** 2) / noise_var
        total += float(_score_rows(logq, bits[idx], c0).sum())
        done += n
    return m - total / (samples * math.log(2.0))


def bitwise_llrs(
    c, symbols: np.ndarray, noise_variance: float, max_log: bool = False
) -> np.ndarray:
    """Per-bit LLRs log(P(b=0)/P(b=1)) under a circular Gaussian metric.

    Positive LLR means bit 0 is more likely.  ``noise_variance`` is the total
    (2D) complex noise variance.  ``max_log`` replaces the full sums with
    maxima.  Returns an (n, m) array aligned to label bit order.
    """
    points, bits = _points_and_bits(c)
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    m = bits.shape[1]
    out = np.empty((symbols.size, m))
    c0 = _coset_zero_matrix(bits)
    c1 = 1.0 - c0
    chunk = 1 << 17
    for start in range(0, symbols.size, chunk):
        y = symbols[start : start + chunk]
        logq = -(np.abs(y[:, None] - points[None, :]) ** 2) / noise_variance
        if max_log:
            big_neg = -1e30
            l0 = np.max(logq[:, :, None] + np.where(c0, 0.0, big_neg)[None, :, :], axis=1)
            l1 = np.max(logq[:, :, None] + np.where(c1, 0.0, big_neg)[None, :, :], axis=1)
            out[start : start + chunk] = l0 - l1
        else:
            shift = logq.max(axis=-1, keepdims=True)
            p = np.exp(logq - shift)
            s0 = np.maximum(p @ c0, _TINY)
            s1 = np.maximum(p @ c1, _TINY)
            out[start : start + chunk] = np.log(s0) - np.log(s1)
    return out


def gmi_from_llrs(llrs: np.ndarray, tx_bits: np.ndarray) -> float:
    """GMI (bit/2D) from demapper LLRs and the transmitted bits.

    Evaluates m - sum_k mean(log2(1 + exp(-(1-2b) L))) with the stable
    log1p-exp form; this is the Monte Carlo GMI of whatever produced the
    LLRs, so mismatched LLRs yield a lower (achievable) rate.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    tx_bits = np.asarray(tx_bits)
    if llrs.shape != tx_bits.shape:
        raise ValueError("llrs and tx_bits must have matching shapes")
    sign = 1.0 - 2.0 * tx_bits
    m = llrs.shape[1]
    return m - float(np.logaddexp(0.0, -sign * llrs).mean(axis=0).sum()) / math.log(2.0)


def gap_to_capacity(c, snr_db: float, **estimator_kw) -> float:
    """Gap of ``c`` to the Gaussian capacity at ``snr_db``, bit per 4D symbol.

    Defined as 2 * (log2(1 + SNR) - GMI_2D); both polarizations carry the
    same constellation, hence the factor 2.
    """
    cap = math.log2(1.0 + 10.0 ** (snr_db / 10.0))
    return 2.0 * (cap - gmi_estimate(c, snr_db, **estimator_kw))


# ---------------------------------------------------------------------------
# PAPR
# ---------------------------------------------------------------------------


def papr(c) -> tuple[float, float]:
    """Per-dimension peak-to-average power ratio (papr_i, papr_q).

    papr_i = max(Re(p)^2) / mean(Re(p)^2) over the points, and likewise for
    the quadrature dimension.  Gray-coded square 64QAM gives exactly 49/21
    in both dimensions (levels +/-1..7: peak 49, mean 21).
    """
    points = c.points if isinstance(c, Constellation) else np.asarray(c, np.complex128)
    out = []
    for comp in (points.real, points.imag):
        mean_sq = np.mean(comp**2)
        if mean_sq == 0.0:
            raise DegenerateInputError("all-zero dimension has no PAPR")
        out.append(float(np.max(comp**2) / mean_sq))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Ring markers
# ---------------------------------------------------------------------------


def _marker_candidates(points: np.ndarray) -> np.ndarray:
    # four outermost points; ties broken by radius descending then angle
    # ascending so the choice is deterministic
    radii = np.abs(points)
    angles = np.mod(np.angle(points), 2.0 * math.pi)
    order = np.lexsort((angles, -radii))
    return order[:4]


def _marker_target(points: np.ndarray, markers: np.ndarray, ring_gain: float) -> float:
    # outward move only: the common ring sits at ring_gain times the largest
    # non-marker radius, but never below where the outermost point already is
    # (a near-unity gain on square QAM must leave the corners untouched)
    radii = np.abs(points)
    return max(ring_gain * np.delete(radii, markers).max(), radii[markers].max())


def _marker_ring(points: np.ndarray, markers: np.ndarray, target: float) -> np.ndarray:
    # markers land on an exactly 4-fold-symmetric ring: the pi/2-spaced
    # angle lattice nearest their current angles, so every marker's 4th
    # power carries the same constant and blind phase estimation on the
    # ring is unbiased.  Points already symmetric (square QAM corners)
    # are left on their own angles.
    ang = np.angle(points[markers])
    base = np.angle(np.exp(4j * ang).sum()) / 4.0
    order = np.argsort(np.mod(ang - base, 2.0 * math.pi))
    slots = base + 0.5 * math.pi * np.arange(4)
    ring = points[markers].copy()
    ring[order] = target * np.exp(1j * slots)
    return ring


def add_ring_markers(c, ring_gain: float = 1.15):
    """Move the four outermost points onto a common marker ring.

    The ring radius is ``ring_gain`` times the largest non-marker radius
    (measured before the move), or the current outermost radius if that is
    already larger, so markers only ever move outward.  Marker angles are
    snapped to the nearest exactly quarter-turn-symmetric set (identity
    for square QAM corners), which makes the ring's 4th power carry a
    single label-independent constant.  The whole constellation is then
    renormalized to unit power, which scales every point uniformly.  The
    four marker indices are recorded on the result.
    """
    if ring_gain <= 1.0:
        raise ValueError("ring_gain must be > 1")
    if isinstance(c, Constellation):
        points = np.array(c.points)
        if len(points) < 4:
            raise ValueError("need at least 4 points")
        markers = _marker_candidates(points)
        target = _marker_target(points, markers, ring_gain)
        points[markers] = _marker_ring(points, markers, target)
        return Constellation(
            points=normalized(points),
            labels=c.labels,
            marker_indices=frozenset(int(i) for i in markers),
            design_snr_db=c.design_snr_db,
        )
    points = np.array(np.asarray(c, dtype=np.complex128))
    if points.size < 4:
        raise ValueError("need at least 4 points")
    markers = _marker_candidates(points)
    target = _marker_target(points, markers, ring_gain)
    points[markers] = _marker_ring(points, markers, target)
    return normalized(points), markers


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

_FORMAT_DOC = """
Text format, one point per line: `<6-bit label> <I> <Q>` with I/Q in decimal.
Lines starting with `#` are comments.  Header comments record metadata:

    # design_snr_db: 12.0
    # marker_indices: 3 17 42 60

The point set must be unit average power; the reader validates every
Constellation invariant.
"""


def save_constellation(c: Constellation, path) -> None:
    """Write ``c`` in the text interchange format (17 significant digits,
    enough for an exact round trip)."""
    lines = ["# shapelink constellation, 64 points, unit average power"]
    if c.design_snr_db is not None:
        lines.append(f"# design_snr_db: {c.design_snr_db!r}")
    if c.marker_indices:
        lines.append("# marker_indices: " + " ".join(str(i) for i in sorted(c.marker_indices)))
    for lab, p in zip(c.labels, c.points):
        lines.append(f"{lab} {p.real:.17g} {p.imag:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_constellation(path) -> Constellation:
    """Read the text interchange format and validate all invariants."""
    labels = []
    pts = []
    design = None
    markers: frozenset = frozenset()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("design_snr_db:"):
                    design = float(body.split(":", 1)[1])
                elif body.startswith("marker_indices:"):
                    markers = frozenset(int(t) for t in body.split(":", 1)[1].split())
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected '<label> <I> <Q>'")
            labels.append(parts[0])
            pts.append(float(parts[1]) + 1j * float(parts[2]))
    return Constellation(
        points=np.asarray(pts),
        labels=tuple(labels),
        marker_indices=markers,
        design_snr_db=design,
    )


_BUILTIN_FILES = {
    "awgn12": "awgn12.txt",
    "papr12": "papr12.txt",
    "system12": "system12.txt",
}


def builtin_names() -> tuple:
    """Names accepted by :func:`load_builtin`."""
    return ("square64",) + tuple(sorted(_BUILTIN_FILES))


def load_builtin(name: str) -> Constellation:
    """Load one of the shipped constellations.

    ``square64`` is constructed exactly; ``awgn12``, ``papr12`` and
    ``system12`` are the three shaping stages tailored at 12 dB, shipped as
    package data (regenerable with the `shape` CLI verb).
    """
    if name == "square64":
        return square64()
    try:
        fname = _BUILTIN_FILES[name]
    except KeyError:
        raise ValueError(f"unknown builtin constellation {name!r}") from None
    from importlib.resources import files

    return load_constellation(files("shapelink.data").joinpath(fname))
