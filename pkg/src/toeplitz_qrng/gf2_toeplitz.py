"""Toeplitz hashing over GF(2).

The ``m x n`` matrix is defined by a seed ``s_1 .. s_{m+n-1}``; its entry at
row ``r``, column ``c`` (both 1-based) is ``s_{m-r+c}``, so the top row reads
``s_m .. s_{m+n-1}`` and the bottom row ``s_1 .. s_n``.

Three products are provided and must agree bit for bit:

``matvec_full``
    The whole matrix times the raw block. Slow and obviously correct; every
    other path is tested against it.
``matvec_blocked``
    The same product split into ``n/k`` sub-matrix products of size
    ``m x k``, each evaluated column by column (AND each column with its
    input bit, XOR the columns together), then XOR-accumulated.
:class:`StepTables`
    The production kernel. Columns are packed into 64-bit words and
    grouped 8 at a time into 256-entry XOR lookup tables, so one step costs
    ``ceil(k/8)`` table reads per output word.

Public indices (rows, columns, steps, seed bits) are 1-based. Arrays are
0-based underneath.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bits import as_bits, bits_to_words, pack_bits, unpack_bits, words_to_bits
from .errors import ConfigurationError, UsageError

CHUNK_BITS = 8


@dataclass(frozen=True)
class ExtractorDims:
    """Block geometry: ``m`` output bits from ``n`` input bits, ``k`` per step."""

    m: int
    n: int
    k: int

    def __post_init__(self):
        for name in ("m", "n", "k"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {value}")
        if self.n % self.k:
            raise ConfigurationError(f"k={self.k} does not divide n={self.n}")
        if self.m >= self.n:
            raise ConfigurationError(f"m={self.m} must be smaller than n={self.n}")

    @property
    def steps(self):
        return self.n // self.k

    @property
    def seed_length(self):
        return self.m + self.n - 1

    @property
    def window_length(self):
        return self.m + self.k - 1

    @property
    def ratio(self):
        return self.m / self.n

    def __str__(self):
        return f"{self.m}x{self.n}/k={self.k}"


@dataclass(frozen=True, eq=False)
class Seed:
    """The ``m+n-1`` bits defining one Toeplitz matrix.

    ``bits[0]`` holds ``s_1``. The array is made read-only on construction.
    """

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(as_bits(self.bits, name="seed"), dtype=np.uint8)
        if arr.ndim != 1:
            raise UsageError("seed must be a 1-D bit vector")
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        return isinstance(other, Seed) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __repr__(self):
        return f"Seed(length={len(self)})"

    def bit(self, i):
        """Seed bit ``s_i`` (1-based)."""
        if not 1 <= i <= len(self):
            raise UsageError(f"seed index {i} outside 1..{len(self)}")
        return int(self.bits[i - 1])

    @classmethod
    def random(cls, length, rng=None):
        rng = np.random.default_rng(rng)
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8))

    @classmethod
    def from_bytes(cls, data, length):
        data = bytes(data)
        if len(data) != -(-length // 8):
            raise UsageError(
                f"seed of {length} bits needs {-(-length // 8)} bytes, got {len(data)}"
            )
        return cls(unpack_bits(data, length))

    def to_bytes(self):
        return pack_bits(self.bits)

    def check(self, dims):
        if len(self) != dims.seed_length:
            raise ConfigurationError(
                f"seed has {len(self)} bits, dims {dims} need {dims.seed_length}"
            )


def _check_pair(seed, dims):
    if len(seed) != dims.seed_length:
        raise UsageError(f"seed has {len(seed)} bits, dims {dims} need {dims.seed_length}")


def toeplitz_entry(seed, dims, r, c):
    """Matrix entry at row ``r``, column ``c`` (1-based): seed bit ``s_{m-r+c}``."""
    _check_pair(seed, dims)
    if not 1 <= r <= dims.m:
        raise UsageError(f"row {r} outside 1..{dims.m}")
    if not 1 <= c <= dims.n:
        raise UsageError(f"column {c} outside 1..{dims.n}")
    return int(seed.bits[dims.m - r + c - 1])


def toeplitz_matrix(seed, dims):
    """The dense ``m x n`` matrix as a ``uint8`` array."""
    _check_pair(seed, dims)
    rows = np.arange(dims.m)[:, None]
    cols = np.arange(dims.n)[None, :]
    return seed.bits[dims.m - 1 - rows + cols]


def matvec_full(seed, dims, raw):
    """Reference product ``T @ raw`` over GF(2).

    ``raw`` may be a single ``n``-bit block or a batch of shape ``(..., n)``.
    """
    raw = as_bits(raw, dims.n, name="raw block")
    t = toeplitz_matrix(seed, dims).astype(np.int64)
    return ((raw.astype(np.int64) @ t.T) & 1).astype(np.uint8)


def submatrix_window(seed, dims, i):
    """Seed bits ``s_{(i-1)k+1} .. s_{m+ik-1}`` feeding step ``i`` (1-based)."""
    _check_pair(seed, dims)
    if not 1 <= i <= dims.steps:
        raise UsageError(f"step {i} outside 1..{dims.steps}")
    return seed.bits[(i - 1) * dims.k : dims.m + i * dims.k - 1]


def submatrix_product(window, step, dims):
    """One ``m x k`` sub-matrix times a ``k``-bit step word.

    Column ``j`` of the sub-matrix, read bottom to top, is window bits
    ``j .. j+m-1``. Each column is ANDed with input bit ``d_j`` and the
    ``k`` masked columns are XORed together.
    """
    window = as_bits(window, dims.window_length, name="window")
    step = as_bits(step, dims.k, name="step word")
    rows = np.arange(dims.m)[:, None]
    cols = np.arange(dims.k)[None, :]
    sub = window[dims.m - 1 - rows + cols]
    masked = sub & step[..., None, :]
    return np.bitwise_xor.reduce(masked, axis=-1)


def matvec_blocked(seed, dims, raw):
    """``T @ raw`` as the XOR of ``n/k`` sub-matrix products."""
    raw = as_bits(raw, dims.n, name="raw block")
    _check_pair(seed, dims)
    k = dims.k
    acc = np.zeros(raw.shape[:-1] + (dims.m,), dtype=np.uint8)
    for i in range(1, dims.steps + 1):
        window = submatrix_window(seed, dims, i)
        acc ^= submatrix_product(window, raw[..., (i - 1) * k : i * k], dims)
    return acc


class StepTables:
    """Packed lookup tables for fast block extraction.

    For step ``i`` the ``k`` input bits are cut into chunks of up to 8 bits.
    ``table[i, q, v]`` is the XOR of the packed columns selected by the bits
    of ``v`` in chunk ``q``, stored as ``W = ceil(m/64)`` little-endian words.
    """

    def __init__(self, seed, dims):
        seed.check(dims)
        self.seed = seed
        self.dims = dims
        m, n, k = dims.m, dims.n, dims.k
        self.words = max(1, -(-m // 64))
        self.chunks_per_step = -(-k // CHUNK_BITS)
        self.chunk_widths = [
            min(CHUNK_BITS, k - q * CHUNK_BITS) for q in range(self.chunks_per_step)
        ]
        entries = 1 << self.chunk_widths[0]

        # column c (0-based input bit) read top to bottom is s_{m+c} .. s_{c+1}
        rows = np.arange(m)[None, :]
        cols = np.arange(n)[:, None]
        packed_cols = bits_to_words(seed.bits[m - 1 - rows + cols])

        table = np.zeros((dims.steps, self.chunks_per_step, entries, self.words), "<u8")
        for i in range(dims.steps):
            for q, width in enumerate(self.chunk_widths):
                t = table[i, q]
                base = i * k + q * CHUNK_BITS
                for b in range(width):
                    t[1 << b : 2 << b] = t[: 1 << b] ^ packed_cols[base + b]
        self.table = table
        self._flat = table.reshape(-1, entries, self.words)

    def chunk_values(self, steps):
        """Chunk indices for step words given as bits, shape ``(..., k)``."""
        steps = as_bits(steps, self.dims.k, name="step word")
        out = np.zeros(steps.shape[:-1] + (self.chunks_per_step,), dtype=np.uint8)
        for q, width in enumerate(self.chunk_widths):
            part = steps[..., q * CHUNK_BITS : q * CHUNK_BITS + width]
            weights = (1 << np.arange(width)).astype(np.uint16)
            out[..., q] = (part.astype(np.uint16) * weights).sum(axis=-1)
        return out

    def sample_chunks(self, samples):
        """Chunk indices for ``k``-bit unsigned samples (one sample per step)."""
        samples = np.asarray(samples)
        if self.chunks_per_step == 1:
            return (samples & np.uint64(0xFF)).astype(np.uint8)[..., None]
        if self.dims.k % 8 == 0 and samples.dtype.itemsize * 8 == self.dims.k:
            le = np.ascontiguousarray(samples, dtype=samples.dtype.newbyteorder("<"))
            return le.view(np.uint8).reshape(samples.shape + (self.chunks_per_step,))
        wide = samples.astype(np.uint64)
        shifts = (np.arange(self.chunks_per_step) * CHUNK_BITS).astype(np.uint64)
        return ((wide[..., None] >> shifts) & np.uint64(0xFF)).astype(np.uint8)

    def step_words(self, i, chunks):
        """Packed product of 0-based step ``i`` for one step's chunk indices."""
        acc = np.zeros(self.words, dtype="<u8")
        for q in range(self.chunks_per_step):
            acc ^= self.table[i, q, chunks[q]]
        return acc

    def blocks_words(self, chunks):
        """Packed outputs for whole blocks; ``chunks`` has shape ``(B, steps*C)``."""
        chunks = np.ascontiguousarray(chunks, dtype=np.uint8)
        if chunks.ndim != 2 or chunks.shape[1] != self._flat.shape[0]:
            raise UsageError(
                f"expected chunk rows of length {self._flat.shape[0]}, got {chunks.shape}"
            )
        return _kernels.xor_gather(self._flat, chunks)

    def to_bits(self, words):
        return words_to_bits(words, self.dims.m)

    def matvec(self, raw):
        """Same contract as :func:`matvec_full`, via the packed tables."""
        raw = as_bits(raw, self.dims.n, name="raw block")
        batch = raw.reshape(-1, self.dims.steps, self.dims.k)
        chunks = self.chunk_values(batch).reshape(batch.shape[0], -1)
        out = self.to_bits(self.blocks_words(chunks))
        return out.reshape(raw.shape[:-1] + (self.dims.m,))
