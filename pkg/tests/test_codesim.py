import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recpriv.binaryexample import bsc, erasure_source, example_channels
from recpriv.codesim import (
    EncodeFailure,
    SimParams,
    build_codebook,
    decode,
    encode,
    exact_distortion,
    exact_equivocation,
    layer_count,
    product_law,
    simulate,
)
from recpriv.errors import ConfigError, SizingError
from recpriv.probcore import Alphabet, CondPmf, JointPmf, binary_entropy
from recpriv.regions import AuxChannels, SourceSpec

from conftest import random_instance

X2, Y1, Z1, U1, U2, H2 = (Alphabet("X", 2), Alphabet("Y", 1), Alphabet("Z", 1), Alphabet("U", 1),
                          Alphabet("U", 2), Alphabet("Xhat", 2))


def bit_source(p0=0.5, y=None, pxy=None):
    """Binary X; Y singleton unless ``pxy`` is given; Z singleton; F = X; Hamming."""
    if pxy is None:
        y, w = Y1, np.array([[p0], [1 - p0]])
    else:
        w = np.asarray(pxy)
    return SourceSpec(JointPmf((X2, y, Z1), w[:, :, None]), Alphabet("F", 2), H2,
                      np.tile([[0], [1]], (1, w.shape[1])), 1 - np.eye(2))


def flip_decoder(p_u, p_2, y=Y1):
    dec = np.repeat(bsc(p_2)[:, None, :], y.size, axis=1)
    return AuxChannels(CondPmf((X2,), (U2,), bsc(p_u)), CondPmf((U2, y), (H2,), dec))


def test_layer_count():
    assert layer_count(4, 0.0, 0.0) == 1
    assert layer_count(4, 0.5, 0.0) == 4
    assert layer_count(4, 0.5, 1e-14) == 4     # guard against float noise above an integer
    assert layer_count(3, 0.5, 0.1) == math.ceil(2 ** 1.8)


def test_codebook_counts_match_formulas():
    src, ch = erasure_source(0.5), example_channels(0.05, 0.1)
    params = SimParams(n=4, delta=0.1, seed=3)
    cb = build_codebook(src, ch, params)
    i = cb.info
    assert cb.t_codewords.shape == (layer_count(4, i["I(X;T)"], 0.1), 4)
    assert cb.n_t_bins == layer_count(4, i["I(X;T|Y)"], 0.2)
    assert cb.u_codewords.shape[1] == layer_count(4, i["I(X;U|T)"], 0.1)
    assert cb.n_u_bins == layer_count(4, i["I(X;U|T,Y)"], 0.2)
    # T = U copy: one U codeword per T codeword up to the slack
    assert cb.u_codewords.shape[1] == math.ceil(2 ** (4 * 0.1))
    assert cb.rate == (math.log2(cb.n_t_bins) + math.log2(cb.n_u_bins)) / 4


def test_bins_partition_and_are_balanced():
    cb = build_codebook(erasure_source(0.5), example_channels(0.05, 0.1), SimParams(n=6, seed=1))
    sizes = np.bincount(cb.t_bins, minlength=cb.n_t_bins)
    assert sizes.sum() == cb.t_codewords.shape[0]
    assert sizes.max() - sizes.min() <= 1
    for row in cb.u_bins:
        s = np.bincount(row, minlength=cb.n_u_bins)
        assert s.max() - s.min() <= 1


def test_codebook_is_seed_determined():
    src, ch = erasure_source(0.5), example_channels(0.05, 0.1)
    a = build_codebook(src, ch, SimParams(n=5, seed=9))
    b = build_codebook(src, ch, SimParams(n=5, seed=9))
    c = build_codebook(src, ch, SimParams(n=5, seed=10))
    assert np.array_equal(a.t_codewords, b.t_codewords) and np.array_equal(a.u_bins, b.u_bins)
    assert not np.array_equal(a.t_codewords, c.t_codewords)


def test_memory_cap_raises_sizing_error():
    with pytest.raises(SizingError) as exc:
        build_codebook(erasure_source(0.5), example_channels(0.05, 0.1), SimParams(n=8, memory_cap=100))
    assert exc.value.required > 100


def test_enumeration_budget_raises_sizing_error():
    cb = build_codebook(erasure_source(0.5), example_channels(0.05, 0.1),
                        SimParams(n=4, enumeration_budget=1000))
    with pytest.raises(SizingError) as exc:
        exact_equivocation(cb)
    assert exc.value.required == (2 * 3 * 1 * 2) ** 4


def test_loose_typicality_never_fails():
    cb = build_codebook(bit_source(), flip_decoder(0.1, 0.0), SimParams(n=4, epsilon=1e6, seed=0))
    for x in itertools.product(range(2), repeat=4):
        assert not isinstance(encode(cb, x), EncodeFailure)


def test_forbidden_symbol_fails_for_any_epsilon():
    src = bit_source(p0=1.0)
    ch = AuxChannels(CondPmf((X2,), (U2,), np.eye(2)), CondPmf((U2, Y1), (H2,), np.eye(2)[:, None, :]))
    for eps in (0.5, 10.0, 1e9):
        cb = build_codebook(src, ch, SimParams(n=3, epsilon=eps))
        assert isinstance(encode(cb, [0, 1, 0]), EncodeFailure)
        assert not isinstance(encode(cb, [0, 0, 0]), EncodeFailure)


def test_round_trip_with_singleton_bins():
    # Y singleton makes bin counts at least the codeword counts, so every bin is a singleton
    cb = build_codebook(bit_source(), flip_decoder(0.1, 0.0), SimParams(n=4, epsilon=2.0, delta=0.3, seed=4))
    assert cb.n_t_bins >= cb.t_codewords.shape[0]
    assert cb.n_u_bins >= cb.u_codewords.shape[1]
    hits = 0
    for x in itertools.product(range(2), repeat=4):
        e = encode(cb, x)
        if isinstance(e, EncodeFailure):
            continue
        hits += 1
        _, info = decode(cb, e.w1, e.w2, [0] * 4, draw_seed=0)
        assert (info.j, info.k) == (e.j, e.k)
        assert not info.ambiguous
    assert hits > 0


def test_decode_rejects_bad_bins():
    cb = build_codebook(bit_source(), flip_decoder(0.1, 0.0), SimParams(n=3))
    with pytest.raises(ConfigError):
        decode(cb, cb.n_t_bins, 0, [0, 0, 0], 0)
    with pytest.raises(ConfigError):
        decode(cb, 0, 0, [0, 1, 0], 0)


def test_erasure_decoder_copies_unerased_side_info():
    src, ch = erasure_source(0.5), example_channels(0.05, 0.1)
    cb = build_codebook(src, ch, SimParams(n=6, seed=2))
    rng = np.random.default_rng(0)
    checked = 0
    for trial in range(300):
        idx = rng.choice(6, size=6, p=src.pxyz.weights.ravel())
        x, y, _ = np.unravel_index(idx, src.pxyz.weights.shape)
        e = encode(cb, x)
        if isinstance(e, EncodeFailure):
            continue
        xhat, _ = decode(cb, e.w1, e.w2, y, draw_seed=trial)
        keep = y != 2
        assert np.array_equal(xhat[keep], y[keep])
        checked += 1
    assert checked > 0


def test_deterministic_decoder_ignores_draw_seed():
    src = erasure_source(0.5)
    cb = build_codebook(src, example_channels(0.05, 0.0), SimParams(n=5, seed=1))
    e = next(r for r in (encode(cb, x) for x in itertools.product(range(2), repeat=5))
             if not isinstance(r, EncodeFailure))
    y = [0, 2, 2, 1, 2]
    a, _ = decode(cb, e.w1, e.w2, y, draw_seed=1)
    b, _ = decode(cb, e.w1, e.w2, y, draw_seed=2)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_degenerate_exactness(n):
    det = build_codebook(bit_source(), flip_decoder(0.1, 0.0), SimParams(n=n, seed=n))
    assert exact_equivocation(det) == 0.0
    noisy = build_codebook(bit_source(), flip_decoder(0.1, 0.2), SimParams(n=n, seed=n))
    assert abs(exact_equivocation(noisy) - binary_entropy(0.2)) <= 1e-12


def test_single_codeword_reduces_to_mixture_entropy():
    y = Alphabet("Y", 2)
    pxy = np.array([[0.7 * 0.8, 0.7 * 0.2], [0.3 * 0.2, 0.3 * 0.8]])
    src = bit_source(pxy=pxy, y=y)
    dec = np.repeat(bsc(0.1)[None], 1, axis=0)                 # Xhat = Y flipped w.p. 0.1
    ch = AuxChannels(CondPmf((X2,), (U1,), np.ones((2, 1))), CondPmf((U1, y), (H2,), dec))
    cb = build_codebook(src, ch, SimParams(n=3, delta=0.0))
    assert cb.t_codewords.shape[0] == 1 and cb.u_codewords.shape[1] == 1
    p_y0 = 0.7 * 0.8 + 0.3 * 0.2
    assert exact_equivocation(cb) == pytest.approx(binary_entropy(p_y0 * 0.9 + (1 - p_y0) * 0.1), abs=1e-12)


def test_bin_relabeling_is_invisible():
    cb = build_codebook(erasure_source(0.5), example_channels(0.05, 0.1), SimParams(n=4, seed=5))
    rng = np.random.default_rng(1)
    p1, p2 = rng.permutation(cb.n_t_bins), rng.permutation(cb.n_u_bins)
    relabeled = dataclasses.replace(cb, t_bins=p1[cb.t_bins], u_bins=p2[cb.u_bins])
    assert exact_equivocation(relabeled) == pytest.approx(exact_equivocation(cb), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_product_law_factorizes(seed, n):
    rng = np.random.default_rng(seed)
    dec = rng.dirichlet(np.ones(3), size=(2, 2))
    u, y = rng.integers(0, 2, n), rng.integers(0, 2, n)
    law = product_law(dec, u, y)
    assert law.sum() == pytest.approx(1.0)
    h = lambda p: -float(np.sum(p[p > 0] * np.log2(p[p > 0])))
    assert h(law) == pytest.approx(sum(h(dec[a, b]) for a, b in zip(u, y)), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_exact_equivocation_range(seed, n):
    rng = np.random.default_rng(seed)
    src, ch = random_instance(rng, nx=2, ny=2, nz=2, nu=2, nh=2, nt=2)
    cb = build_codebook(src, ch, SimParams(n=n, seed=seed % 1000))
    v = exact_equivocation(cb)
    assert 0.0 <= v <= 1.0


def test_point_mass_decoder_never_raises_equivocation_without_side_info():
    rng = np.random.default_rng(8)
    for seed in range(5):
        p_u, p_2 = rng.uniform(0, 0.5, size=2)
        noisy = build_codebook(bit_source(), flip_decoder(p_u, p_2), SimParams(n=4, seed=seed))
        point = dataclasses.replace(noisy, channels=flip_decoder(p_u, 0.0))
        assert exact_equivocation(point) <= exact_equivocation(noisy) + 1e-12


def test_simulate_is_reproducible():
    cb = build_codebook(erasure_source(0.5), example_channels(0.05, 0.1), SimParams(n=4, seed=0))
    a, b = simulate(cb, 1, seed=7), simulate(cb, 1, seed=7)
    assert a.as_dict() == b.as_dict()
    many = simulate(cb, 50, seed=7, exact=False)
    assert many.exact_equivocation is None
    assert 0 <= many.encode_failure_rate <= 1


def test_point_mass_source_with_matching_codeword():
    src = bit_source(p0=1.0)
    ch = AuxChannels(CondPmf((X2,), (U2,), np.eye(2)), CondPmf((U2, Y1), (H2,), np.eye(2)[:, None, :]))
    cb = build_codebook(src, ch, SimParams(n=3))
    res = simulate(cb, 20, seed=1)
    assert res.encode_failure_rate == 0.0
    assert res.empirical_distortion == 0.0


def test_simulated_distortion_matches_exact_expectation():
    cb = build_codebook(erasure_source(0.5), example_channels(0.05, 0.1), SimParams(n=6, seed=0))
    res = simulate(cb, 10_000, seed=1, exact=False)
    target = exact_distortion(cb)
    assert abs(res.empirical_distortion - target) <= 3 * res.distortion_stderr
