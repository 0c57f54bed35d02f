"""Inner loop of the packed extractor.

Compiled with numba when available (``nogil`` so channel threads run in
parallel); otherwise a chunked numpy gather is used.
"""

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_NUMPY_BATCH = 4096


def _xor_gather_numpy(table, chunks):
    nblocks, nlookups = chunks.shape
    out = np.empty((nblocks, table.shape[2]), dtype="<u8")
    idx = np.arange(nlookups)
    for start in range(0, nblocks, _NUMPY_BATCH):
        part = chunks[start : start + _NUMPY_BATCH]
        out[start : start + len(part)] = np.bitwise_xor.reduce(table[idx, part], axis=1)
    return out


if numba is not None:

    @numba.njit(nogil=True, cache=True)
    def _xor_gather_jit(table, chunks, out):
        nblocks, nlookups = chunks.shape
        nwords = table.shape[2]
        acc = np.zeros(nwords, dtype=np.uint64)
        for b in range(nblocks):
            for w in range(nwords):
                acc[w] = 0
            for j in range(nlookups):
                v = chunks[b, j]
                for w in range(nwords):
                    acc[w] ^= table[j, v, w]
            for w in range(nwords):
                out[b, w] = acc[w]

    def xor_gather(table, chunks):
        out = np.empty((chunks.shape[0], table.shape[2]), dtype=np.uint64)
        _xor_gather_jit(table, chunks, out)
        return out.view("<u8")

else:  # pragma: no cover
    xor_gather = _xor_gather_numpy

HAVE_NUMBA = numba is not None
