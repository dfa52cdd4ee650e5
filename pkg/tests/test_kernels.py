"""Both kernel backends must agree bit-for-bit on identical inputs."""

import itertools

import numpy as np
import pytest

from mzqbc import codes, kernels

needs_numba = pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not installed")


def brute_min_weight(gen):
    k, n = gen.shape
    best = n + 1
    for msg in itertools.product((0, 1), repeat=k):
        if not any(msg):
            continue
        w = np.zeros(n, dtype=np.uint8)
        for j, bit in enumerate(msg):
            if bit:
                w ^= gen[j]
        best = min(best, int(w.sum()))
    return best


def test_pack_rows_guard():
    with pytest.raises(ValueError):
        kernels.pack_rows(np.zeros((2, 65), dtype=np.uint8))


@pytest.mark.parametrize("seed", range(5))
def test_min_weight_numpy_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    code = codes.random_code(n=10, k=5, rng=rng)
    masks = kernels.pack_rows(code.generator)
    assert kernels._min_weight_numpy(masks, code.n) == brute_min_weight(code.generator)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_min_weight_backends_agree(seed):
    rng = np.random.default_rng(100 + seed)
    code = codes.random_code(n=14, k=8, rng=rng)
    masks = kernels.pack_rows(code.generator)
    assert kernels._min_weight_numba(masks, code.n) == kernels._min_weight_numpy(
        masks, code.n
    )


def _binding_inputs(seed, trials=4096, n=8):
    rng = np.random.default_rng(seed)
    return (
        rng.random((trials, n)),
        rng.random((trials, n)),
        0.5,
        0.5,
        np.array([0, 4], dtype=np.int64),
        0.5,
    )


@needs_numba
@pytest.mark.parametrize("seed", range(3))
def test_binding_backends_agree(seed):
    args = _binding_inputs(seed)
    assert np.array_equal(
        kernels._binding_counts_numba(*args), kernels._binding_counts_numpy(*args)
    )


def test_binding_numpy_semantics():
    # two photons, one flipped position, hand-checkable draws
    u_mode = np.array([[0.1, 0.9], [0.1, 0.1], [0.9, 0.9]])
    u_mis = np.array([[0.1, 0.5], [0.9, 0.9], [0.5, 0.5]])
    flips = np.array([0], dtype=np.int64)
    # f=0.5, eps=0.5: trial0 intercept+mismatch at flip -> no proceed;
    # trial1 intercepts both, no mismatch -> proceed, not accept;
    # trial2 nothing intercepted -> proceed and accept
    out = kernels._binding_counts_numpy(u_mode, u_mis, 0.5, 0.5, flips, 10.0)
    assert out.tolist() == [2, 1, 1, 0]


def _concealing_inputs(seed, trials=2048):
    rng = np.random.default_rng(seed)
    code = codes.extended_hamming_8_4()
    words = code.codewords()
    parities = codes.coset_parities(code, codes.bits_from_string("11100000"))
    cw_idx = rng.integers(len(words), size=trials).astype(np.int64)
    intercept = rng.random((trials, code.n)) < 0.4
    u_mis = rng.random((trials, code.n))
    return words, parities, cw_idx, intercept, u_mis, 0.5, 0.5


@needs_numba
@pytest.mark.parametrize("seed", range(3))
def test_concealing_backends_agree(seed):
    args = _concealing_inputs(seed)
    a = kernels._concealing_stats_numba(*args)
    b = kernels._concealing_stats_numpy(*args)
    assert np.array_equal(a, b)


def test_concealing_numpy_posterior_bounds():
    words, parities, cw_idx, intercept, u_mis, eps, thr = _concealing_inputs(9)
    trials = len(cw_idx)
    out = kernels._concealing_stats_numpy(words, parities, cw_idx, intercept, u_mis, eps, thr)
    assert 0 <= out[0] <= trials
    assert 0 <= out[1] <= trials
    assert trials / 2 <= out[2] <= trials  # max posterior is always >= 1/2
