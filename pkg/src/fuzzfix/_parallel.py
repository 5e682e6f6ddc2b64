"""Deterministic chunked scans over flat sample ranges.

Scans are split into fixed-size chunks (independent of the worker count) and
may be evaluated by a thread pool.  Results are folded in chunk order with
order-independent reductions (exact float minimum, first index in global
sample order), so every report is byte-identical for any number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

CHUNK = 65536

MarginFn = Callable[[int, int], np.ndarray]


@dataclass(frozen=True)
class ScanResult:
    """Fold of one margin scan.

    ``worst_margin`` is the exact minimum margin, ``worst_index`` the first
    global sample index attaining it, ``first_bad`` the first index whose
    margin falls below the tolerance (None when the scan passes).
    """

    n: int
    worst_margin: float
    worst_index: int
    first_bad: int | None

    @property
    def passed(self) -> bool:
        return self.first_bad is None


def _fold(a: ScanResult, b: ScanResult) -> ScanResult:
    # a precedes b in global sample order; ties keep the earlier index
    if b.n == 0:
        return a
    if a.n == 0:
        return b
    if b.worst_margin < a.worst_margin:
        worst, worst_index = b.worst_margin, b.worst_index
    else:
        worst, worst_index = a.worst_margin, a.worst_index
    first_bad = a.first_bad if a.first_bad is not None else b.first_bad
    return ScanResult(a.n + b.n, worst, worst_index, first_bad)


def _spans(n: int, offset: int) -> list[tuple[int, int]]:
    return [(offset + s, offset + min(s + CHUNK, n)) for s in range(0, n, CHUNK)]


def scan_segments(
    segments: Sequence[tuple[int, MarginFn]],
    tolerance: float,
    jobs: int = 1,
) -> ScanResult:
    """Scan concatenated margin segments; a sample is bad iff margin < tolerance.

    Each segment is ``(n, margins_fn)`` where ``margins_fn(start, stop)``
    returns the margins for *segment-local* indices [start, stop).  Global
    indices run over segments in order.
    """
    spans: list[tuple[int, int, MarginFn, int]] = []
    offset = 0
    for n, fn in segments:
        for lo, hi in _spans(n, offset):
            spans.append((lo, hi, fn, offset))
        offset += n

    def one(span: tuple[int, int, MarginFn, int]) -> ScanResult:
        lo, hi, fn, base = span
        m = np.asarray(fn(lo - base, hi - base), dtype=float)
        i = int(np.argmin(m))
        bad = np.nonzero(m < tolerance)[0]
        first_bad = lo + int(bad[0]) if bad.size else None
        return ScanResult(hi - lo, float(m[i]), lo + i, first_bad)

    if jobs > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(one, spans))
    else:
        parts = [one(s) for s in spans]

    out = ScanResult(0, math.inf, -1, None)
    for p in parts:
        out = _fold(out, p)
    return out


def map_concat(n: int, fn: MarginFn, jobs: int = 1) -> np.ndarray:
    """Evaluate ``fn`` over fixed chunks of range(n), concatenated in order.

    The result array is identical for any ``jobs``, so summaries computed
    from it (means, quantiles) are partition-independent by construction.
    """
    spans = _spans(n, 0)
    if jobs > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda s: np.asarray(fn(*s), dtype=float), spans))
    else:
        parts = [np.asarray(fn(*s), dtype=float) for s in spans]
    return np.concatenate(parts) if parts else np.empty(0)
