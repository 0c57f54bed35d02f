"""Software throughput of the packed kernel.

One channel runs in one thread; three channels run in three threads. The
kernel releases the GIL, so the parallel figure scales with the number of
available cores.
"""

import os

from toeplitz_qrng.bench import REFERENCE_DIMS, TABLE_HEADER, bench_channels, bench_kernel

samples = 48 * 100_000
print(TABLE_HEADER)
single = bench_kernel(REFERENCE_DIMS[0], samples)
print(single.row())
multi = bench_channels(REFERENCE_DIMS, samples)
print(multi.row())
cpus = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
print(f"\nparallel / single: {multi.raw_bps / single.raw_bps:.2f}x with {cpus} CPU(s)")
