"""Statistical checks on raw and extracted streams."""

from .correlation import CorrelationSeries, acf, ccf, decimalize
from .kld import KldReport, choose_bin_count, kld, kld_noise_level, word_histogram
from .monitor import BatchTimeline, TimelinePoint, batch_monitor
from .nist import (
    NATIVE_TESTS,
    TestReport,
    block_frequency_test,
    cusum_test,
    export_bitstream,
    monobit_test,
    pass_rate,
    proportion_interval,
    run_tests,
    runs_test,
)

__all__ = [
    "BatchTimeline",
    "CorrelationSeries",
    "KldReport",
    "NATIVE_TESTS",
    "TestReport",
    "TimelinePoint",
    "acf",
    "batch_monitor",
    "block_frequency_test",
    "ccf",
    "choose_bin_count",
    "cusum_test",
    "decimalize",
    "export_bitstream",
    "kld",
    "kld_noise_level",
    "monobit_test",
    "pass_rate",
    "proportion_interval",
    "run_tests",
    "runs_test",
    "word_histogram",
]
