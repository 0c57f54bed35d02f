"""Bit-vector helpers and the packing convention used everywhere.

Bitstreams are packed LSB-first: bit 1 of a vector is the least significant
bit of byte 0, bit 9 is the LSB of byte 1, and so on. Seeds, raw blocks and
extracted output all use this one convention, which also makes a stream of
little-endian ``b``-bit samples identical to the concatenation of their bits
(sample LSB first).
"""

import numpy as np

from .errors import UsageError


def as_bits(x, length=None, name="bits"):
    """Validate and return ``x`` as a ``uint8`` array of 0/1 values.

    The last axis is the bit axis; leading axes are treated as a batch.
    """
    arr = np.asarray(x)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    elif arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise UsageError(f"{name} must be integer or boolean, got {arr.dtype}")
    if arr.ndim == 0:
        raise UsageError(f"{name} must be a vector")
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise UsageError(f"{name} must contain only 0 and 1")
    if length is not None and arr.shape[-1] != length:
        raise UsageError(f"{name} has length {arr.shape[-1]}, expected {length}")
    return arr.astype(np.uint8, copy=False)


def pack_bits(bits):
    """Pack a 0/1 vector into bytes, LSB-first. The tail byte is zero padded."""
    bits = as_bits(bits)
    return np.packbits(bits, axis=-1, bitorder="little").tobytes()


def unpack_bits(data, count=None):
    """Inverse of :func:`pack_bits`; ``count`` trims the zero padding."""
    arr = np.frombuffer(bytes(data), dtype=np.uint8)
    bits = np.unpackbits(arr, bitorder="little")
    if count is not None:
        if count > bits.size:
            raise UsageError(f"asked for {count} bits but only {bits.size} available")
        bits = bits[:count]
    return bits


def words_to_bits(words, nbits):
    """Expand packed ``uint64`` rows ``(..., W)`` into ``(..., nbits)`` bit rows."""
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8).reshape(words.shape[:-1] + (words.shape[-1] * 8,))
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :nbits]


def bits_to_words(bits):
    """Pack ``(..., nbits)`` bit rows into ``(..., ceil(nbits/64))`` ``uint64`` rows."""
    bits = as_bits(bits)
    nbits = bits.shape[-1]
    nwords = max(1, -(-nbits // 64))
    pad = nwords * 64 - nbits
    if pad:
        widths = [(0, 0)] * (bits.ndim - 1) + [(0, pad)]
        bits = np.pad(bits, widths)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    packed = np.ascontiguousarray(packed)
    return packed.view("<u8").reshape(bits.shape[:-1] + (nwords,))


def samples_to_bits(samples, sample_bits):
    """Expand unsigned samples into their bits, LSB of each sample first."""
    samples = np.asarray(samples, dtype=np.uint64)
    shifts = np.arange(sample_bits, dtype=np.uint64)
    bits = (samples[..., None] >> shifts) & np.uint64(1)
    return bits.reshape(samples.shape[:-1] + (-1,)).astype(np.uint8)
