import math

import numpy as np
import pytest

from offsetlock import CounterSeries


def brute_force_adev_overlapping(readings, m):
    """Literal double-loop evaluation of the overlapping two-sample deviation.

    Written independently of the library implementation: block averages are
    formed by explicit Python sums, then sigma = sqrt(0.5 * mean of squared
    consecutive-average differences) over all overlapping starts.
    """
    y = list(readings)
    n = len(y)
    if n < 2 * m:
        return None
    sq_sum = 0.0
    pairs = 0
    for k in range(n - 2 * m + 1):
        avg1 = sum(y[k:k + m]) / m
        avg2 = sum(y[k + m:k + 2 * m]) / m
        d = avg2 - avg1
        sq_sum += d * d
        pairs += 1
    return math.sqrt(0.5 * (sq_sum / pairs))


def brute_force_adev_nonoverlapping(readings, m):
    """Strided (disjoint-interval) two-sample deviation, double-loop style."""
    y = list(readings)
    n_blocks = len(y) // m
    if n_blocks < 2:
        return None
    blocks = [sum(y[i * m:(i + 1) * m]) / m for i in range(n_blocks)]
    sq_sum = 0.0
    for b1, b2 in zip(blocks, blocks[1:]):
        sq_sum += (b2 - b1) ** 2
    return math.sqrt(0.5 * sq_sum / (n_blocks - 1))


@pytest.fixture
def make_series():
    def _make(readings, gate_s=1.0, nominal_hz=0):
        return CounterSeries(nominal_hz=nominal_hz, gate_s=gate_s,
                             readings=np.asarray(readings, dtype=float))
    return _make
