"""Scalar statistics over short non-negative series, and burst detectors.

Every function accepts an empty series and returns the neutral value for
its range instead of raising.
"""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np
from scipy.special import betainc

CWT_WIDTHS = (2, 5, 10, 20)


def _arr(series) -> np.ndarray:
    return np.asarray(series, dtype=np.float64).ravel()


def ts_quantile(series, q: float) -> float:
    """Linear-interpolation quantile at position (n-1)*q of the sorted values."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    x = np.sort(_arr(series))
    n = x.size
    if n == 0:
        return 0.0
    pos = (n - 1) * q
    lo = int(math.floor(pos))
    frac = pos - lo
    if lo + 1 >= n:
        return float(x[lo])
    return float(x[lo] + frac * (x[lo + 1] - x[lo]))


def ts_median(series) -> float:
    return ts_quantile(series, 0.5)


def ts_mean(series) -> float:
    x = _arr(series)
    return float(x.mean()) if x.size else 0.0


def ts_fft0_real(series) -> float:
    """Real part of the zero-frequency DFT coefficient (the plain sum)."""
    x = _arr(series)
    if x.size == 0:
        return 0.0
    return float(np.fft.rfft(x)[0].real)


def ricker(points: int, width: float) -> np.ndarray:
    """Mexican-hat wavelet sampled at ``points`` integers centred on (points-1)/2."""
    amp = 2.0 / (math.sqrt(3.0 * width) * math.pi**0.25)
    t = np.arange(points, dtype=np.float64) - (points - 1) / 2.0
    tsq = (t / width) ** 2
    return amp * (1.0 - tsq) * np.exp(-tsq / 2.0)


def ts_cwt_coeff0(series, width: float) -> float:
    """First coefficient of the Ricker CWT at ``width`` (same-mode convolution)."""
    x = _arr(series)
    n = x.size
    if n == 0:
        return 0.0
    m = min(int(10 * width), n)
    full = np.convolve(x, ricker(m, width), mode="full")
    return float(full[(m - 1) // 2])


def ts_energy_ratio_chunk(series, num_segments: int = 10, focus: int = 0) -> float:
    """Share of squared mass falling in chunk ``focus`` of ``num_segments``."""
    if not 0 <= focus < num_segments:
        raise ValueError("focus outside [0, num_segments)")
    x = _arr(series)
    total = float(np.sum(x * x))
    if total == 0.0:
        return 0.0
    chunk = np.array_split(x, num_segments)[focus]
    return float(np.sum(chunk * chunk)) / total


def ts_index_mass_quantile(series, q: float) -> float:
    """Relative position at which the cumulative mass first reaches q of the total.

    Mass is taken as absolute value so signed input stays well defined.
    """
    x = np.abs(_arr(series))
    n = x.size
    if n == 0:
        return 1.0
    total = float(x.sum())
    if total == 0.0:
        return 1.0
    cum = np.cumsum(x)
    i = int(np.argmax(cum >= q * total))
    return (i + 1) / n


# residual sum of squares below this fraction of the total is treated as an exact fit
_EXACT_FIT = 1e-20


def ts_linear_trend_pvalue(series) -> float:
    """Two-sided p-value of the OLS slope of x against 0..n-1."""
    y = _arr(series)
    n = y.size
    if n < 3:
        return 1.0
    t = np.arange(n, dtype=np.float64)
    tm, ym = t.mean(), y.mean()
    sxx = float(np.sum((t - tm) ** 2))
    sxy = float(np.sum((t - tm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    if syy == 0.0:
        return 1.0
    slope = sxy / sxx
    resid = y - (ym + slope * (t - tm))
    ssr = float(np.sum(resid * resid))
    if ssr <= _EXACT_FIT * syy:
        return 0.0 if slope != 0.0 else 1.0
    df = n - 2
    se = math.sqrt(ssr / df / sxx)
    tstat = slope / se
    # two-sided tail of Student t via the regularized incomplete beta
    return float(betainc(df / 2.0, 0.5, df / (df + tstat * tstat)))


def temporal_bursts(event_blocks: Sequence[int], gap_max: int = 1) -> tuple:
    """Runs of >= 2 events whose successive gaps are <= gap_max: (count, longest)."""
    count = longest = 0
    run = 1
    for prev, cur in zip(event_blocks, event_blocks[1:]):
        if cur - prev <= gap_max:
            run += 1
        else:
            if run >= 2:
                count += 1
                longest = max(longest, run)
            run = 1
    if run >= 2:
        count += 1
        longest = max(longest, run)
    return count, longest


def degree_bursts(counts: Mapping[int, int], threshold: int = 2, first_block=None) -> tuple:
    """Blocks whose count reaches ``threshold``, and the offset of the peak block.

    The offset is measured from ``first_block`` (default: smallest key); ties
    go to the earliest block; 0 when no block qualifies.
    """
    if not counts:
        return 0, 0
    blocks = sorted(counts)
    first = blocks[0] if first_block is None else first_block
    hits = [b for b in blocks if counts[b] >= threshold]
    if not hits:
        return 0, 0
    peak = max(blocks, key=lambda b: (counts[b], -b))
    return len(hits), peak - first


def value_bursts(series: Sequence, run_min: int = 2) -> tuple:
    """Runs of >= run_min equal consecutive values: (count, start of longest)."""
    count = 0
    best_len, best_start = 0, 0
    i, n = 0, len(series)
    while i < n:
        j = i + 1
        while j < n and series[j] == series[i]:
            j += 1
        length = j - i
        if length >= run_min:
            count += 1
            if length > best_len:
                best_len, best_start = length, i
        i = j
    return count, best_start
