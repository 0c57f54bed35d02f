"""Streaming Toeplitz extractor.

One :class:`ExtractorState` consumes ``k``-bit step words. Each step
XORs one sub-matrix product into an ``m``-bit accumulator; after ``n/k``
steps the accumulator is emitted as an output block and cleared. The seed is
fixed for the lifetime of the state, and step ``i`` always reads the seed
window starting at bit ``(i-1)k+1``.

Bulk sample input goes through the packed kernel. Single steps use the same
lookup tables, so both routes leave the state identical.
"""

import numpy as np

from .bits import as_bits, words_to_bits
from .errors import ConfigurationError, UsageError
from .gf2_toeplitz import StepTables


class ExtractorState:
    """Pipeline state for one channel.

    Attributes
    ----------
    dims, seed
        Fixed for the session.
    step_index : int
        Number of steps ingested into the current block, ``0 .. n/k - 1``.
    blocks_emitted, bits_in, bits_out : int
        Running counters. ``bits_in`` counts every ingested bit, including
        ones later discarded by :meth:`reset`.

    Instances are not thread-safe; hand them between threads only at block
    boundaries.
    """

    def __init__(self, dims, seed):
        seed.check(dims)
        self.dims = dims
        self.seed = seed
        self.tables = StepTables(seed, dims)
        self.step_index = 0
        self._acc = np.zeros(self.tables.words, dtype="<u8")
        self.blocks_emitted = 0
        self.bits_in = 0
        self.bits_out = 0

    def __repr__(self):
        return (
            f"ExtractorState({self.dims}, step={self.step_index}, "
            f"blocks={self.blocks_emitted})"
        )

    @property
    def accumulator(self):
        """Current ``m``-bit running XOR (a copy)."""
        return words_to_bits(self._acc, self.dims.m)

    def _emit(self, count):
        self.blocks_emitted += count
        self.bits_out += count * self.dims.m

    def _advance(self, chunks):
        """Apply one step given its chunk indices; return emitted words or None."""
        self._acc ^= self.tables.step_words(self.step_index, chunks)
        self.step_index += 1
        self.bits_in += self.dims.k
        if self.step_index == self.dims.steps:
            out = self._acc.copy()
            self._acc[:] = 0
            self.step_index = 0
            self._emit(1)
            return out
        return None

    def ingest_step(self, step):
        """Consume one ``k``-bit step word (bit ``d_1`` first).

        Returns the ``m``-bit output block when this step completes one,
        otherwise ``None``.
        """
        step = as_bits(step, self.dims.k, name="step word")
        if step.ndim != 1:
            raise UsageError("ingest_step takes a single step word")
        out = self._advance(self.tables.chunk_values(step))
        return None if out is None else words_to_bits(out, self.dims.m)

    def ingest_samples(self, samples, sample_bits=None):
        """Consume unsigned ``sample_bits``-wide samples, one per step.

        Sample bit 0 (the LSB) is ``d_1`` of its step. Returns every block
        completed by this call as a ``(blocks, m)`` array.
        """
        return words_to_bits(self.ingest_samples_words(samples, sample_bits), self.dims.m)

    def ingest_samples_words(self, samples, sample_bits=None):
        """As :meth:`ingest_samples` but returns packed ``uint64`` rows."""
        k = self.dims.k
        if sample_bits is None:
            sample_bits = k
        if sample_bits != k:
            raise ConfigurationError(f"sample width {sample_bits} != step width k={k}")
        if k > 64:
            raise ConfigurationError("samples wider than 64 bits are not supported")
        samples = np.asarray(samples)
        if samples.ndim != 1:
            raise UsageError("samples must be a 1-D sequence")
        if samples.size and not np.issubdtype(samples.dtype, np.integer):
            raise UsageError(f"samples must be integers, got {samples.dtype}")
        if samples.size:
            if samples.min() < 0 or (k < 64 and int(samples.max()) >> k):
                raise UsageError(f"sample values must fit in {k} unsigned bits")
        else:
            return np.zeros((0, self.tables.words), dtype="<u8")

        steps = self.dims.steps
        chunks = self.tables.sample_chunks(samples.astype(np.uint64, copy=False)
                                           if samples.dtype.kind == "i" else samples)
        out = []
        pos = 0
        # finish a block already in progress
        while self.step_index and pos < len(chunks):
            emitted = self._advance(chunks[pos])
            pos += 1
            if emitted is not None:
                out.append(emitted[None, :])

        whole = (len(chunks) - pos) // steps
        if whole:
            block_chunks = chunks[pos : pos + whole * steps].reshape(whole, -1)
            out.append(self.tables.blocks_words(block_chunks))
            pos += whole * steps
            self.bits_in += whole * self.dims.n
            self._emit(whole)

        while pos < len(chunks):
            self._advance(chunks[pos])
            pos += 1

        if not out:
            return np.zeros((0, self.tables.words), dtype="<u8")
        return np.concatenate(out) if len(out) > 1 else out[0]

    def reset(self):
        """Drop the partial block; counters are kept."""
        self._acc[:] = 0
        self.step_index = 0


def new_extractor(dims, seed):
    """Fresh :class:`ExtractorState` for ``dims`` and ``seed``."""
    return ExtractorState(dims, seed)
