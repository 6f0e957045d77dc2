"""Soft-decision LDPC decoding and throughput accounting.

The decoder is a flooding-schedule normalized min-sum (factor 0.75, up
to 50 iterations by default) operating on batches of codewords at once;
codewords whose syndrome reaches zero are frozen immediately.  Parity-
check matrices travel in a plain-text adjacency format (see
:func:`save_alist` / :func:`load_alist`) rather than being embedded.

The outer hard-decision code is modeled, not implemented: a pre-FEC BER
threshold gate plus a fixed rate deduction (:func:`post_fec_gate`,
:func:`net_throughput`).

LLR sign convention matches the demapper: positive means bit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "ParityCheckMatrix",
    "RatePlan",
    "DecodeResult",
    "SystematicEncoder",
    "ldpc_decode",
    "systematic_encoder",
    "make_regular_ldpc",
    "hamming74",
    "load_alist",
    "save_alist",
    "select_rate",
    "net_throughput",
    "ber_measure",
    "post_fec_gate",
]


# ---------------------------------------------------------------------------
# matrix type and I/O


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse binary parity-check matrix as per-row column index lists.

    ``row_cols[r]`` holds the sorted column positions of the ones in
    check r.  Duplicate entries within a row are invalid (they would
    cancel over GF(2)); every column must participate in at least one
    check, and there must be more columns than rows (a code with
    nonzero-rate systematic form).
    """

    rows: int
    cols: int
    row_cols: tuple

    def __post_init__(self):
        if self.rows < 1 or self.cols <= self.rows:
            raise ValueError("need cols > rows >= 1")
        if len(self.row_cols) != self.rows:
            raise ValueError("row_cols length must equal rows")
        seen = np.zeros(self.cols, dtype=bool)
        canon = []
        for r, entries in enumerate(self.row_cols):
            entries = tuple(int(c) for c in entries)
            if len(set(entries)) != len(entries):
                raise ValueError(f"duplicate column in row {r}")
            if entries and not all(0 <= c < self.cols for c in entries):
                raise ValueError(f"column index out of range in row {r}")
            seen[list(entries)] = True
            canon.append(tuple(sorted(entries)))
        if not seen.all():
            raise ValueError("every column must appear in at least one check")
        object.__setattr__(self, "row_cols", tuple(canon))

    @property
    def n_edges(self) -> int:
        return sum(len(r) for r in self.row_cols)

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for r, entries in enumerate(self.row_cols):
            h[r, list(entries)] = 1
        return h

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """H x mod 2; accepts (cols,) or (batch, cols)."""
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        if bits.shape[1] != self.cols:
            raise ValueError("bit length must equal cols")
        out = np.zeros((bits.shape[0], self.rows), dtype=np.uint8)
        for r, entries in enumerate(self.row_cols):
            if entries:
                out[:, r] = bits[:, list(entries)].sum(axis=1) % 2
        return out


def save_alist(h: ParityCheckMatrix, path) -> None:
    """Write the adjacency text format.

    Line 1: ``cols rows``; line 2: ``max_col_degree max_row_degree``;
    line 3: per-column degrees; line 4: per-row degrees; then one line
    per column with its 1-based row positions, then one line per row
    with its 1-based column positions.  (Degenerate zero entries are not
    padded; lines may be shorter than the maxima.)
    """
    dense = h.to_dense()
    col_rows = [np.flatnonzero(dense[:, c]) + 1 for c in range(h.cols)]
    row_cols = [np.asarray(r) + 1 for r in map(list, h.row_cols)]
    lines = [
        f"{h.cols} {h.rows}",
        f"{max(len(c) for c in col_rows)} {max((len(r) for r in row_cols), default=0)}",
        " ".join(str(len(c)) for c in col_rows),
        " ".join(str(len(r)) for r in row_cols),
    ]
    lines += [" ".join(map(str, c)) for c in col_rows]
    lines += [" ".join(map(str, r)) for r in row_cols]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_alist(path) -> ParityCheckMatrix:
    """Parse the adjacency text format written by :func:`save_alist`."""
    with open(path, "r", encoding="ascii") as fh:
        chunks = [line.split() for line in fh if line.strip()]
    try:
        cols, rows = int(chunks[0][0]), int(chunks[0][1])
        col_deg = [int(x) for x in chunks[2]]
        row_deg = [int(x) for x in chunks[3]]
        if len(col_deg) != cols or len(row_deg) != rows:
            raise IndexError
        col_lines = chunks[4 : 4 + cols]
        row_lines = chunks[4 + cols : 4 + cols + rows]
        if len(row_lines) != rows:
            raise IndexError
        row_cols = []
        for r, line in enumerate(row_lines):
            entries = [int(x) - 1 for x in line]
            if len(entries) != row_deg[r]:
                raise ValueError(f"row {r} degree mismatch")
            row_cols.append(tuple(entries))
        # cross-check the column adjacency against the row adjacency
        h = ParityCheckMatrix(rows=rows, cols=cols, row_cols=tuple(row_cols))
        dense = h.to_dense()
        for c, line in enumerate(col_lines):
            entries = sorted(int(x) - 1 for x in line)
            if len(entries) != col_deg[c] or list(np.flatnonzero(dense[:, c])) != entries:
                raise ValueError(f"column {c} adjacency mismatch")
        return h
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed parity-check file: {exc}") from exc


# ---------------------------------------------------------------------------
# decoding


@dataclass(frozen=True)
class DecodeResult:
    """Hard decisions plus convergence data.

    ``iterations`` counts syndrome checks: 1 means the channel decisions
    were already a codeword.  For batched input all fields carry a
    leading batch axis (``syndrome_ok`` per codeword).
    """

    bits: np.ndarray
    iterations: np.ndarray
    syndrome_ok: np.ndarray


def _edge_layout(h: ParityCheckMatrix):
    edge_col = np.concatenate([np.array(r, dtype=np.int64) for r in h.row_cols if r])
    degrees = np.array([len(r) for r in h.row_cols])
    max_deg = degrees.max()
    row_edge = np.full((h.rows, max_deg), -1, dtype=np.int64)
    e = 0
    for r, d in enumerate(degrees):
        row_edge[r, :d] = np.arange(e, e + d)
        e += d
    return edge_col, row_edge, degrees


def ldpc_decode(
    llrs: np.ndarray,
    h: ParityCheckMatrix,
    max_iters: int = 50,
    normalization: float = 0.75,
) -> DecodeResult:
    """Normalized min-sum decoding, flooding schedule, batched.

    ``llrs`` is (cols,) for one codeword or (batch, cols); positive LLR
    means bit 0.  Each iteration starts with a syndrome check (so an
    already-valid word returns after 1 iteration with no message
    passing); codewords that reach a zero syndrome are frozen and
    reported with the iteration count at which they converged.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    llrs = np.atleast_2d(llrs)
    if llrs.shape[1] != h.cols:
        raise ValueError("LLR length must equal the number of columns")
    if not np.all(np.isfinite(llrs)):
        raise ValueError("LLRs must be finite")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    b = llrs.shape[0]

    edge_col, row_edge, _ = _edge_layout(h)
    n_edges = edge_col.size
    pad = row_edge < 0
    live_slots = ~pad
    # row_edge flattened over real slots visits every edge exactly once
    slot_to_edge = row_edge[live_slots]
    row_edge_safe = np.where(pad, 0, row_edge)
    deg_ix = np.arange(row_edge.shape[1])

    c2v = np.zeros((b, n_edges))
    total = llrs.copy()
    done = np.zeros(b, dtype=bool)
    iters = np.full(b, max_iters, dtype=np.int64)
    final_bits = np.zeros((b, h.cols), dtype=np.uint8)
    clip = 1e3

    for it in range(1, max_iters + 1):
        act = np.flatnonzero(~done)
        bits = (total[act] < 0).astype(np.uint8)
        par = bits[:, edge_col][:, row_edge_safe]
        par[:, pad] = 0
        ok = ~np.any(par.sum(axis=2) % 2, axis=1)
        hit = act[ok]
        if hit.size:
            final_bits[hit] = bits[ok]
            iters[hit] = it
            done[hit] = True
        if done.all() or it == max_iters:
            break
        act = np.flatnonzero(~done)

        v2c = total[act][:, edge_col] - c2v[act]
        ve = v2c[:, row_edge_safe]
        av = np.abs(ve)
        av[:, pad] = np.inf
        arg1 = av.argmin(axis=2)
        min1 = np.take_along_axis(av, arg1[..., None], axis=2)[..., 0]
        av2 = av.copy()
        np.put_along_axis(av2, arg1[..., None], np.inf, axis=2)
        min2 = av2.min(axis=2)
        sgn = np.where(ve < 0, -1.0, 1.0)
        sgn[:, pad] = 1.0
        row_sign = sgn.prod(axis=2)
        excl_min = np.where(
            deg_ix[None, None, :] == arg1[..., None], min2[..., None], min1[..., None]
        )
        msg = normalization * row_sign[..., None] * sgn * excl_min
        np.clip(msg, -clip, clip, out=msg)
        upd = np.empty((act.size, n_edges))
        upd[:, slot_to_edge] = msg[:, live_slots]
        c2v[act] = upd
        flat = (np.arange(act.size)[:, None] * h.cols + edge_col[None, :]).ravel()
        acc = np.bincount(flat, weights=upd.ravel(), minlength=act.size * h.cols)
        total[act] = llrs[act] + acc.reshape(act.size, h.cols)

    undone = ~done
    if undone.any():
        final_bits[undone] = (total[undone] < 0).astype(np.uint8)
    if single:
        return DecodeResult(
            bits=final_bits[0], iterations=int(iters[0]), syndrome_ok=bool(done[0])
        )
    return DecodeResult(bits=final_bits, iterations=iters, syndrome_ok=done)


# ---------------------------------------------------------------------------
# encoding


@dataclass(frozen=True)
class SystematicEncoder:
    """GF(2) systematic encoder for a loaded parity-check matrix.

    ``info_positions`` are the codeword columns that carry information
    bits (the non-pivot columns of the row-reduced matrix); the
    remaining ``parity_positions`` are solved from the checks.  ``rank``
    may be below the row count for redundant matrices, in which case the
    information length exceeds cols - rows.
    """

    h: ParityCheckMatrix
    info_positions: np.ndarray
    parity_positions: np.ndarray
    _solver: np.ndarray  # (n_parity, k) over GF(2)

    @property
    def k(self) -> int:
        return self.info_positions.size

    @property
    def rank(self) -> int:
        return self.parity_positions.size

    def encode(self, info_bits: np.ndarray) -> np.ndarray:
        """(k,) or (batch, k) information bits -> codeword(s)."""
        info = np.atleast_2d(np.asarray(info_bits, dtype=np.uint8))
        if info.shape[1] != self.k:
            raise ValueError(f"expected {self.k} information bits")
        out = np.zeros((info.shape[0], self.h.cols), dtype=np.uint8)
        out[:, self.info_positions] = info
        out[:, self.parity_positions] = (info @ self._solver.T) % 2
        return out[0] if np.asarray(info_bits).ndim == 1 else out


def systematic_encoder(h: ParityCheckMatrix) -> SystematicEncoder:
    """Row-reduce H over GF(2) and return the systematic encoder."""
    m = h.to_dense().astype(np.uint8)
    rows, cols = m.shape
    pivot_cols = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hot = np.flatnonzero(m[r:, c]) + r
        if hot.size == 0:
            continue
        if hot[0] != r:
            m[[r, hot[0]]] = m[[hot[0], r]]
        elim = np.flatnonzero(m[:, c])
        elim = elim[elim != r]
        m[elim] ^= m[r]
        pivot_cols.append(c)
        r += 1
    pivots = np.array(pivot_cols, dtype=np.int64)
    info = np.setdiff1d(np.arange(cols), pivots)
    # reduced rows: pivot_bit = sum of that row's info-column bits
    solver = m[: pivots.size][:, info]
    return SystematicEncoder(
        h=h, info_positions=info, parity_positions=pivots, _solver=solver
    )


# ---------------------------------------------------------------------------
# code construction


def make_regular_ldpc(
    n: int, row_weight: int = 6, col_weight: int = 3, seed: int = 0
) -> ParityCheckMatrix:
    """Random regular code from the socket-matching ensemble.

    Every column gets exactly ``col_weight`` checks and rows average
    ``row_weight`` entries; column assignments that would duplicate a
    row entry are resampled.  Deterministic for a fixed seed.
    """
    if n * col_weight % row_weight:
        raise ValueError("n * col_weight must be divisible by row_weight")
    rows = n * col_weight // row_weight
    if rows >= n:
        raise ValueError("the configuration has a nonpositive code rate")
    rng = np.random.default_rng(seed)
    sockets = np.repeat(np.arange(rows), row_weight)
    rng.shuffle(sockets)
    cols = sockets.reshape(n, col_weight)
    # repair duplicate row entries within a column by swapping one of the
    # clashing sockets with a random socket from another column
    for _ in range(100 * n):
        dup = [j for j in range(n) if len(set(cols[j])) != col_weight]
        if not dup:
            break
        for j in dup:
            vals, counts = np.unique(cols[j], return_counts=True)
            bad = int(np.flatnonzero(cols[j] == vals[np.argmax(counts)])[0])
            k = int(rng.integers(n))
            s = int(rng.integers(col_weight))
            if k == j or cols[k, s] in cols[j]:
                continue
            if cols[j, bad] in np.delete(cols[k], s):
                continue
            cols[j, bad], cols[k, s] = cols[k, s], cols[j, bad]
    else:
        raise RuntimeError("could not repair the regular matrix draw")
    row_cols = [[] for _ in range(rows)]
    for j in range(n):
        for r in cols[j]:
            row_cols[r].append(j)
    return ParityCheckMatrix(
        rows=rows, cols=n, row_cols=tuple(tuple(r) for r in row_cols)
    )


def hamming74() -> ParityCheckMatrix:
    """The (7,4) single-error-correcting code with one redundant check.

    Rows 0..2 are the positional parity checks; row 3 is their GF(2)
    sum.  The extra row leaves the codebook unchanged (rank stays 3)
    but breaks the message-passing oscillation that otherwise traps
    min-sum on errors in the position shared by all three checks, so
    iterative decoding matches maximum-likelihood on every single-error
    pattern.
    """
    return ParityCheckMatrix(
        rows=4,
        cols=7,
        row_cols=((0, 2, 4, 6), (1, 2, 5, 6), (3, 4, 5, 6), (0, 1, 3, 6)),
    )


# ---------------------------------------------------------------------------
# rate and throughput arithmetic


@dataclass(frozen=True)
class RatePlan:
    """Code-rate bookkeeping for one channel."""

    code_rate: Fraction
    bch_overhead: float = 0.005
    bch_ber_threshold: float = 3e-4
    symbol_rate: float = 35e9
    bits_per_4d_symbol: float = 12.0

    def __post_init__(self):
        if not 0 < self.code_rate < 1:
            raise ValueError("code_rate must be in (0, 1)")
        if self.bch_overhead < 0:
            raise ValueError("bch_overhead must be nonnegative")


def select_rate(
    gmi_per_4d: float,
    available_rates,
    bits_per_4d: float = 12.0,
    margin: float = 1.0,
) -> tuple[Fraction, bool]:
    """Largest code rate supported by the measured information rate.

    Returns ``(rate, feasible)`` where feasibility means
    rate x bits_per_4d <= gmi_per_4d x margin; with no feasible entry
    the lowest rate is returned flagged infeasible.
    """
    rates = sorted(Fraction(r) for r in available_rates)
    if not rates:
        raise ValueError("available_rates must be nonempty")
    feasible = [r for r in rates if float(r) * bits_per_4d <= gmi_per_4d * margin]
    if feasible:
        return feasible[-1], True
    return rates[0], False


def net_throughput(
    per_channel_info_bits_per_symbol,
    symbol_rate: float,
    bch_overhead: float = 0.005,
    pre_bch: bool = False,
) -> tuple[list, float]:
    """Per-channel net bit rates (Gb/s) and the total (Tb/s).

    ``per_channel_info_bits_per_symbol`` is already net of all coding
    unless ``pre_bch`` is set, in which case the outer-code overhead is
    deducted here.  Exact arithmetic: rate = bits x symbol_rate x
    (1 - overhead if pre_bch).
    """
    if symbol_rate <= 0:
        raise ValueError("symbol_rate must be positive")
    factor = (1.0 - bch_overhead) if pre_bch else 1.0
    per_channel = [
        float(bits) * symbol_rate * factor / 1e9
        for bits in per_channel_info_bits_per_symbol
    ]
    return per_channel, sum(per_channel) / 1e3


def ber_measure(decided_bits: np.ndarray, reference_bits: np.ndarray) -> float:
    """Bit error ratio between two equal-length bit arrays."""
    a = np.asarray(decided_bits, dtype=np.uint8).ravel()
    b = np.asarray(reference_bits, dtype=np.uint8).ravel()
    if a.size != b.size:
        raise ValueError("bit sequences must have equal length")
    if a.size == 0:
        raise ValueError("bit sequences must be nonempty")
    return float(np.mean(a != b))


def post_fec_gate(ber: float, threshold: float = 3e-4) -> bool:
    """True iff the pre-FEC BER is strictly below the outer-code threshold.

    Strict: a BER exactly at the threshold fails the gate.
    """
    if ber < 0 or threshold <= 0:
        raise ValueError("ber must be >= 0 and threshold > 0")
    return ber < threshold
