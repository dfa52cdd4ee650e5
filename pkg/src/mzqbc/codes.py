"""Binary linear (n,k,d) codes over GF(2).

Codewords are numpy uint8 vectors.  Everything is brute force by design:
the exhaustive 2^k enumeration is the correctness oracle for the protocol
analysis, and the sizes of interest are desk scale.  A hard guard refuses
enumerations beyond k=24 rather than approximating.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .util import GuardError

#: 2^k Gray-walk enumeration bound for the minimum distance.
ENUM_GUARD_K = 24
#: Bound for materializing the full codeword matrix in memory.
MATERIALIZE_GUARD_K = 20


def bits_from_string(s: str) -> np.ndarray:
    if not s or any(ch not in "01" for ch in s):
        raise ValueError(f"bit string must be nonempty over 0/1, got {s!r}")
    return np.array([int(ch) for ch in s], dtype=np.uint8)


def string_from_bits(bits: np.ndarray) -> str:
    return "".join(str(int(b)) for b in bits)


def gf2_rank(matrix: np.ndarray) -> int:
    m = matrix.copy().astype(np.uint8)
    rank = 0
    rows, cols = m.shape
    for col in range(cols):
        pivot = None
        for r in range(rank, rows):
            if m[r, col]:
                pivot = r
                break
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


@dataclass(frozen=True, eq=False)
class LinearCode:
    """A binary linear code given by a full-rank k x n generator matrix.

    `d` is the exact minimum distance (= minimum nonzero codeword weight),
    computed once at construction.
    """

    generator: np.ndarray
    n: int
    k: int
    d: int

    def codewords(self) -> np.ndarray:
        """All 2^k codewords as a (2^k, n) uint8 matrix, ordered by message
        index (row i encodes the little-endian bits of i)."""
        cached = getattr(self, "_codewords", None)
        if cached is not None:
            return cached
        if self.k > MATERIALIZE_GUARD_K:
            raise GuardError("enumeration too large")
        msgs = np.arange(1 << self.k, dtype=np.uint32)
        bits = (msgs[:, None] >> np.arange(self.k)[None, :]) & 1
        words = (bits.astype(np.uint8) @ self.generator) % 2
        words = words.astype(np.uint8)
        object.__setattr__(self, "_codewords", words)
        return words

    def contains(self, word: np.ndarray) -> bool:
        word = np.asarray(word, dtype=np.uint8)
        if word.shape != (self.n,):
            return False
        stacked = np.vstack([self.generator, word])
        return gf2_rank(stacked) == self.k


def code_from_generator(matrix) -> LinearCode:
    gen = np.asarray(matrix, dtype=np.uint8)
    if gen.ndim != 2 or gen.size == 0:
        raise ValueError("generator must be a nonempty 2-D 0/1 matrix")
    if not np.isin(gen, (0, 1)).all():
        raise ValueError("generator entries must be 0 or 1")
    k, n = gen.shape
    if gf2_rank(gen) != k:
        raise ValueError("generator not full rank")
    return LinearCode(generator=gen, n=n, k=k, d=min_distance_of_generator(gen))


def min_distance_of_generator(gen: np.ndarray) -> int:
    k, n = gen.shape
    if k > ENUM_GUARD_K:
        raise GuardError("enumeration too large")
    masks = kernels.pack_rows(gen)
    return int(kernels.min_weight(masks, n))


def min_distance(code: LinearCode) -> int:
    """Exact minimum distance; linearity makes it the min nonzero weight."""
    return min_distance_of_generator(code.generator)


def parity(c: np.ndarray, r: np.ndarray) -> int:
    """Inner product over GF(2): XOR of the AND-ed coordinates."""
    c = np.asarray(c, dtype=np.uint8)
    r = np.asarray(r, dtype=np.uint8)
    if c.shape != r.shape:
        raise ValueError("parity arguments must have equal length")
    return int(np.bitwise_xor.reduce(c & r))


def coset_parities(code: LinearCode, r: np.ndarray) -> np.ndarray:
    """parity(c, r) for every codeword, in codeword-matrix order."""
    r = np.asarray(r, dtype=np.uint8)
    if r.shape != (code.n,):
        raise ValueError(f"r must have length {code.n}")
    return ((code.codewords() & r[None, :]).sum(axis=1) % 2).astype(np.uint8)


def coset_split(code: LinearCode, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partition the codewords by their parity against the mask r."""
    r = np.asarray(r, dtype=np.uint8)
    if not r.any():
        raise ValueError("r must be nonzero")
    parities = coset_parities(code, r)
    words = code.codewords()
    return words[parities == 0], words[parities == 1]


def sample_codeword(
    code: LinearCode, r: np.ndarray, b: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform draw from the parity-b half of the code."""
    subset = coset_split(code, r)[b]
    if len(subset) == 0:
        raise ValueError("committed subset empty; choose different r")
    return subset[rng.integers(len(subset))].copy()


def midpoint_word(c_a: np.ndarray, c_b: np.ndarray) -> np.ndarray:
    """A word halfway between two codewords.

    Of the h differing positions (in index order) the first ceil(h/2) take
    c_b's value and the rest keep c_a's, so the result sits at distance
    ceil(h/2) from c_a and floor(h/2) from c_b.
    """
    c_a = np.asarray(c_a, dtype=np.uint8)
    c_b = np.asarray(c_b, dtype=np.uint8)
    if c_a.shape != c_b.shape:
        raise ValueError("codewords must have equal length")
    diff = np.flatnonzero(c_a != c_b)
    h = len(diff)
    if h < 2:
        raise ValueError("codewords must differ in at least 2 positions")
    mid = c_a.copy()
    take = (h + 1) // 2
    mid[diff[:take]] = c_b[diff[:take]]
    return mid


def consistent_codewords(
    code: LinearCode, positions, values
) -> np.ndarray:
    """All codewords agreeing with `values` at `positions` (possibly none)."""
    positions = np.asarray(positions, dtype=np.intp)
    values = np.asarray(values, dtype=np.uint8)
    if positions.shape != values.shape:
        raise ValueError("positions and values must have equal length")
    if len(np.unique(positions)) != len(positions):
        raise ValueError("positions must be distinct")
    words = code.codewords()
    if len(positions) == 0:
        return words
    mask = (words[:, positions] == values[None, :]).all(axis=1)
    return words[mask]


# ---------------------------------------------------------------------------
# built-in catalog

def repetition_code(n: int = 3) -> LinearCode:
    return code_from_generator(np.ones((1, n), dtype=np.uint8))


def hamming_7_4() -> LinearCode:
    return code_from_generator(
        [
            [1, 0, 0, 0, 1, 1, 0],
            [0, 1, 0, 0, 1, 0, 1],
            [0, 0, 1, 0, 0, 1, 1],
            [0, 0, 0, 1, 1, 1, 1],
        ]
    )


def extended_hamming_8_4() -> LinearCode:
    """Hamming (7,4) with an overall parity bit appended; d = 4."""
    gen = hamming_7_4().generator
    overall = gen.sum(axis=1) % 2
    return code_from_generator(np.hstack([gen, overall[:, None]]))


_GOLAY_B = [
    [0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 0, 1, 1, 1, 0, 0, 0, 1, 0],
    [1, 1, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1],
    [1, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1],
    [1, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0],
    [1, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1],
    [1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 1],
    [1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 1, 1],
    [1, 0, 0, 1, 0, 1, 1, 0, 1, 1, 1, 0],
    [1, 0, 1, 0, 1, 1, 0, 1, 1, 1, 0, 0],
    [1, 1, 0, 1, 1, 0, 1, 1, 1, 0, 0, 0],
    [1, 0, 1, 1, 0, 1, 1, 1, 0, 0, 0, 1],
]


def golay_24_12() -> LinearCode:
    gen = np.hstack([np.eye(12, dtype=np.uint8), np.array(_GOLAY_B, dtype=np.uint8)])
    return code_from_generator(gen)


def random_code(n: int, k: int, rng: np.random.Generator) -> LinearCode:
    """A random full-rank (n,k) code with exact brute-force distance."""
    if k >= n:
        raise ValueError("random_code expects k < n")
    while True:
        gen = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        if gf2_rank(gen) == k:
            return code_from_generator(gen)


BUILTIN_CODES = {
    "repetition": repetition_code,
    "hamming": hamming_7_4,
    "extended_hamming": extended_hamming_8_4,
    "golay": golay_24_12,
}


def builtin_code(name: str) -> LinearCode:
    try:
        return BUILTIN_CODES[name]()
    except KeyError:
        raise ValueError(
            f"unknown code {name!r}; choose from {sorted(BUILTIN_CODES)}"
        ) from None


# ---------------------------------------------------------------------------
# file formats

def read_generator_file(path) -> LinearCode:
    """Generator matrix from plain text: one row per line, '0'/'1' chars."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append(bits_from_string(line))
    if not rows:
        raise ValueError(f"no generator rows in {path}")
    if len({len(r) for r in rows}) != 1:
        raise ValueError("generator rows must all have the same length")
    return code_from_generator(np.vstack(rows))


def write_codewords_csv(path, words: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bits"])
        for w in words:
            writer.writerow([string_from_bits(w)])
