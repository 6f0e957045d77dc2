"""Decoder, encoder, matrix I/O, and throughput accounting tests."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from shapelink import fec


def _hamming_codebook():
    enc = fec.systematic_encoder(fec.hamming74())
    words = [
        enc.encode(np.array(bits, dtype=np.uint8))
        for bits in itertools.product([0, 1], repeat=4)
    ]
    return np.array(words)


# ---------------------------------------------------------------------------
# parity-check matrix type


def test_matrix_rejects_duplicate_row_entry():
    with pytest.raises(ValueError):
        fec.ParityCheckMatrix(1, 4, ((0, 0, 1),))


def test_matrix_requires_more_cols_than_rows():
    with pytest.raises(ValueError):
        fec.ParityCheckMatrix(4, 4, ((0,), (1,), (2,), (3,)))


def test_matrix_requires_full_column_coverage():
    with pytest.raises(ValueError):
        fec.ParityCheckMatrix(1, 3, ((0, 1),))


def test_matrix_dense_matches_rows():
    h = fec.hamming74()
    dense = h.to_dense()
    assert dense.shape == (4, 7)
    for r, cols in enumerate(h.row_cols):
        assert set(np.flatnonzero(dense[r])) == set(cols)
    assert h.n_edges == dense.sum()


def test_syndrome_flags_single_flip():
    h = fec.hamming74()
    word = np.zeros(7, dtype=np.uint8)
    assert not h.syndrome(word).any()
    word[2] = 1
    syn = h.syndrome(word)[0]
    assert set(np.flatnonzero(syn)) == {0, 1}


# ---------------------------------------------------------------------------
# alist text round trip


def test_alist_round_trip(tmp_path):
    for h in (fec.hamming74(), fec.make_regular_ldpc(48, 6, 3, seed=3)):
        path = tmp_path / "h.alist"
        fec.save_alist(h, path)
        back = fec.load_alist(path)
        assert back.rows == h.rows and back.cols == h.cols
        assert back.row_cols == h.row_cols


def test_alist_rejects_truncated(tmp_path):
    path = tmp_path / "h.alist"
    fec.save_alist(fec.hamming74(), path)
    text = path.read_text().splitlines()
    path.write_text("\n".join(text[:-2]))
    with pytest.raises(ValueError):
        fec.load_alist(path)


def test_alist_rejects_degree_mismatch(tmp_path):
    path = tmp_path / "h.alist"
    fec.save_alist(fec.hamming74(), path)
    lines = path.read_text().splitlines()
    lines[3] = "4 4 4 3"
    path.write_text("\n".join(lines))
    with pytest.raises(ValueError):
        fec.load_alist(path)


# ---------------------------------------------------------------------------
# systematic encoder


def test_hamming_codebook_structure():
    words = _hamming_codebook()
    assert len({tuple(w) for w in words}) == 16
    h = fec.hamming74()
    assert not h.syndrome(words).any()
    dmin = min(
        int(np.sum(a != b)) for i, a in enumerate(words) for b in words[i + 1 :]
    )
    assert dmin == 3


def test_encoder_redundant_row_keeps_k():
    # the fourth check row is dependent, so rank 3 and four info bits
    enc = fec.systematic_encoder(fec.hamming74())
    assert enc.k == 4
    assert enc.rank == 3


def test_encoder_batch_and_single_shapes():
    enc = fec.systematic_encoder(fec.hamming74())
    one = enc.encode(np.array([1, 0, 1, 1], dtype=np.uint8))
    assert one.shape == (7,)
    many = enc.encode(np.tile([1, 0, 1, 1], (5, 1)))
    assert many.shape == (5, 7)
    assert np.array_equal(many[0], one)


def test_encoder_rejects_wrong_length():
    enc = fec.systematic_encoder(fec.hamming74())
    with pytest.raises(ValueError):
        enc.encode(np.zeros(5, dtype=np.uint8))


def test_encoder_valid_on_random_regular_code():
    h = fec.make_regular_ldpc(120, 6, 3, seed=5)
    enc = fec.systematic_encoder(h)
    assert enc.k == h.cols - enc.rank
    rng = np.random.default_rng(0)
    cws = enc.encode(rng.integers(0, 2, size=(16, enc.k)).astype(np.uint8))
    assert not h.syndrome(cws).any()


# ---------------------------------------------------------------------------
# decoding


def test_decode_valid_word_single_iteration():
    res = fec.ldpc_decode(np.full(7, 20.0), fec.hamming74())
    assert np.array_equal(res.bits, np.zeros(7, dtype=np.uint8))
    assert res.iterations == 1
    assert res.syndrome_ok is True


def test_decode_input_validation():
    h = fec.hamming74()
    with pytest.raises(ValueError):
        fec.ldpc_decode(np.zeros(6), h)
    with pytest.raises(ValueError):
        fec.ldpc_decode(np.full(7, np.nan), h)
    with pytest.raises(ValueError):
        fec.ldpc_decode(np.zeros(7), h, max_iters=0)


def test_single_flip_matches_exhaustive_ml():
    # oracle: maximize sum(llr * (1 - 2b)) over all 16 codewords
    h = fec.hamming74()
    words = _hamming_codebook()
    signs = 1.0 - 2.0 * words.astype(float)
    for flip_mag in (6.0, 3.0):
        for w in words:
            base = 6.0 * (1.0 - 2.0 * w.astype(float))
            for pos in range(7):
                llr = base.copy()
                llr[pos] = -np.sign(base[pos]) * flip_mag
                out = fec.ldpc_decode(llr, h)
                ml = words[int(np.argmax(signs @ llr))]
                assert out.syndrome_ok
                assert np.array_equal(out.bits, ml)
                assert np.array_equal(out.bits, w)


def test_random_llrs_do_not_false_converge():
    h = fec.make_regular_ldpc(1000, 6, 3, seed=1)
    rng = np.random.default_rng(7)
    res = fec.ldpc_decode(rng.normal(size=1000) * 0.5, h, max_iters=25)
    assert res.syndrome_ok is False
    assert res.iterations == 25
    assert h.syndrome(res.bits).any()


def test_converged_output_is_valid_codeword():
    h = fec.make_regular_ldpc(600, 6, 3, seed=2)
    enc = fec.systematic_encoder(h)
    rng = np.random.default_rng(11)
    cw = enc.encode(rng.integers(0, 2, size=(40, enc.k)).astype(np.uint8))
    x = 1.0 - 2.0 * cw.astype(float)
    y = x + 0.7 * rng.normal(size=x.shape)
    res = fec.ldpc_decode(2.0 * y / 0.49, h)
    ok = np.asarray(res.syndrome_ok)
    assert ok.any()
    assert not h.syndrome(res.bits[ok]).any()


def test_batched_decode_matches_single():
    h = fec.hamming74()
    rng = np.random.default_rng(3)
    llrs = rng.normal(size=(12, 7)) * 3.0
    batch = fec.ldpc_decode(llrs, h, max_iters=20)
    for i in range(12):
        one = fec.ldpc_decode(llrs[i], h, max_iters=20)
        assert np.array_equal(batch.bits[i], one.bits)
        assert batch.iterations[i] == one.iterations
        assert bool(batch.syndrome_ok[i]) == one.syndrome_ok


def test_min_sum_beats_hard_decision_at_3db():
    # BPSK, Eb/N0 = 3 dB, rate 1/2: hard-decision BER sits near the
    # Q-function value 0.0789 while the decoded BER collapses
    h = fec.make_regular_ldpc(1000, 6, 3, seed=1)
    enc = fec.systematic_encoder(h)
    rate = enc.k / h.cols
    assert rate == 0.5
    esn0 = 10 ** (3.0 / 10.0) * rate
    sigma2 = 1.0 / (2.0 * esn0)
    rng = np.random.default_rng(42)
    cw = enc.encode(rng.integers(0, 2, size=(200, enc.k)).astype(np.uint8))
    x = 1.0 - 2.0 * cw.astype(float)
    y = x + math.sqrt(sigma2) * rng.normal(size=x.shape)
    pre = fec.ber_measure((y < 0).astype(np.uint8), cw)
    res = fec.ldpc_decode(2.0 * y / sigma2, h)
    post = fec.ber_measure(res.bits, cw)
    assert 0.06 < pre < 0.095
    assert post < pre / 10.0


# ---------------------------------------------------------------------------
# regular code construction


def test_regular_code_degrees():
    h = fec.make_regular_ldpc(1000, 6, 3, seed=1)
    assert (h.rows, h.cols) == (500, 1000)
    assert all(len(r) == 6 for r in h.row_cols)
    col_deg = np.zeros(1000, dtype=int)
    for r in h.row_cols:
        col_deg[list(r)] += 1
    assert (col_deg == 3).all()


def test_regular_code_seed_determinism():
    a = fec.make_regular_ldpc(240, 6, 3, seed=9)
    b = fec.make_regular_ldpc(240, 6, 3, seed=9)
    c = fec.make_regular_ldpc(240, 6, 3, seed=10)
    assert a.row_cols == b.row_cols
    assert a.row_cols != c.row_cols


def test_regular_code_rejects_bad_shape():
    with pytest.raises(ValueError):
        fec.make_regular_ldpc(1001, 6, 3, seed=0)
    with pytest.raises(ValueError):
        fec.make_regular_ldpc(12, 3, 3, seed=0)


# ---------------------------------------------------------------------------
# rate selection and throughput


def test_select_rate_perfect_gmi():
    rate, ok = fec.select_rate(12.0, [Fraction(1, 2), Fraction(3, 4), Fraction(9, 10)])
    assert rate == Fraction(9, 10)
    assert ok


def test_select_rate_zero_gmi_flags_infeasible():
    rate, ok = fec.select_rate(0.0, [Fraction(1, 2), Fraction(3, 4)])
    assert rate == Fraction(1, 2)
    assert not ok


def test_select_rate_boundary_equality_feasible():
    # 5/6 x 12 = 10 exactly: equality counts as feasible
    rate, ok = fec.select_rate(10.0, [Fraction(1, 2), Fraction(5, 6), Fraction(8, 9)])
    assert rate == Fraction(5, 6)
    assert ok


def test_select_rate_margin_scales_requirement():
    rates = [Fraction(1, 2), Fraction(3, 4)]
    assert fec.select_rate(9.5, rates)[0] == Fraction(3, 4)
    assert fec.select_rate(9.5, rates, margin=0.9)[0] == Fraction(1, 2)


def test_select_rate_requires_rates():
    with pytest.raises(ValueError):
        fec.select_rate(5.0, [])


def test_net_throughput_anchor_values():
    per, total = fec.net_throughput([6.93], 35e9)
    assert per[0] == pytest.approx(242.55, rel=1e-12)
    per306, total306 = fec.net_throughput([6.93] * 306, 35e9)
    assert total306 == pytest.approx(74.2203, rel=1e-9)


def test_net_throughput_zero_channels():
    per, total = fec.net_throughput([], 35e9)
    assert per == []
    assert total == 0.0


def test_net_throughput_linear_and_additive():
    a, ta = fec.net_throughput([5.0, 6.0], 20e9)
    b, tb = fec.net_throughput([7.5], 20e9)
    both, tboth = fec.net_throughput([5.0, 6.0, 7.5], 20e9)
    assert both == a + b
    assert tboth == pytest.approx(ta + tb, rel=1e-15)
    doubled, tdouble = fec.net_throughput([5.0, 6.0], 40e9)
    assert tdouble == pytest.approx(2.0 * ta, rel=1e-15)


def test_net_throughput_pre_bch_deduction():
    base, _ = fec.net_throughput([8.0], 35e9)
    ded, _ = fec.net_throughput([8.0], 35e9, bch_overhead=0.005, pre_bch=True)
    assert ded[0] == pytest.approx(base[0] * 0.995, rel=1e-15)


def test_net_throughput_rejects_bad_rate():
    with pytest.raises(ValueError):
        fec.net_throughput([1.0], 0.0)


# ---------------------------------------------------------------------------
# BER and the outer-code gate


def test_ber_identical_is_zero_and_gate_true():
    bits = np.ones(1000, dtype=np.uint8)
    assert fec.ber_measure(bits, bits) == 0.0
    assert fec.post_fec_gate(0.0)


def test_gate_strict_at_threshold():
    n = 100_000
    ref = np.zeros(n, dtype=np.uint8)
    dec = ref.copy()
    dec[:30] = 1
    ber = fec.ber_measure(dec, ref)
    assert ber == 3e-4
    assert not fec.post_fec_gate(ber)
    dec[29] = 0
    assert fec.post_fec_gate(fec.ber_measure(dec, ref))


def test_ber_rejects_length_mismatch():
    with pytest.raises(ValueError):
        fec.ber_measure(np.zeros(4, dtype=np.uint8), np.zeros(5, dtype=np.uint8))
    with pytest.raises(ValueError):
        fec.ber_measure(np.array([], dtype=np.uint8), np.array([], dtype=np.uint8))


def test_rate_plan_validation():
    plan = fec.RatePlan(code_rate=Fraction(3, 4))
    assert plan.bch_overhead == 0.005
    with pytest.raises(ValueError):
        fec.RatePlan(code_rate=Fraction(7, 6))
    with pytest.raises(ValueError):
        fec.RatePlan(code_rate=Fraction(1, 2), bch_overhead=-0.1)
