"""Block-range segmentation for the 1-Day / 3-Day / 1-Month / ALL granularities."""
from __future__ import annotations

import csv
from itertools import repeat
from enum import Enum
from typing import Iterable, NamedTuple, Optional

BLOCKS_PER_DAY = 6000


class Granularity(Enum):
    DAY1 = "day1"
    DAY3 = "day3"
    MONTH1 = "month1"
    ALL = "all"

    @property
    def days(self) -> Optional[int]:
        return {"day1": 1, "day3": 3, "month1": 30, "all": None}[self.value]

    def span(self, blocks_per_day: int = BLOCKS_PER_DAY) -> Optional[int]:
        return None if self.days is None else self.days * blocks_per_day


_NAMES = {
    "day1": Granularity.DAY1,
    "1-day": Granularity.DAY1,
    "day": Granularity.DAY1,
    "day3": Granularity.DAY3,
    "3-day": Granularity.DAY3,
    "month1": Granularity.MONTH1,
    "1-month": Granularity.MONTH1,
    "month": Granularity.MONTH1,
    "all": Granularity.ALL,
}


def parse_granularity(name: str) -> Granularity:
    try:
        return _NAMES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown granularity {name!r}") from None


class Segment(NamedTuple):
    granularity: Granularity
    index: int
    start: int
    end: int

    @property
    def query_start(self) -> int:
        # genesis-block rows (block 0) belong to the first segment
        return 0 if self.index == 1 else self.start

    @property
    def length(self) -> int:
        return self.end - self.start + 1


def segment_bounds(granularity: Granularity, max_block: int, blocks_per_day: int = BLOCKS_PER_DAY) -> list:
    """Tile [1, max_block]; the trailing partial segment is kept (ceiling count)."""
    if max_block < 1:
        raise ValueError("max_block must be >= 1")
    span = granularity.span(blocks_per_day)
    if span is None:
        return [Segment(granularity, 1, 1, max_block)]
    count = -(-max_block // span)
    last = (count - 1) * span
    segs = list(map(Segment._make, zip(repeat(granularity), range(1, count), range(1, last, span), range(span, last + 1, span))))
    segs.append(Segment(granularity, count, last + 1, max_block))
    return segs


def segment_index(block: int, granularity: Granularity, blocks_per_day: int = BLOCKS_PER_DAY) -> int:
    span = granularity.span(blocks_per_day)
    if span is None:
        return 1
    return max(block - 1, 0) // span + 1


def assign_activity(store, segments: list, accounts: Optional[Iterable[str]] = None) -> dict:
    """Map segment index to the sorted accounts with at least one transaction in it."""
    if not segments:
        return {}
    by_index = {s.index: s for s in segments}
    span = segments[1].start - segments[0].start if len(segments) > 1 else None
    wanted = set(accounts) if accounts is not None else None
    active: dict = {}
    for tx in store.events:
        if span is None:
            idx = 1
        else:
            idx = max(tx.block - 1, 0) // span + 1
        if idx not in by_index or tx.block > by_index[idx].end:
            continue
        bucket = active.setdefault(idx, set())
        for a in (tx.sender, tx.receiver):
            if a is not None and (wanted is None or a in wanted):
                bucket.add(a)
    return {i: sorted(v) for i, v in sorted(active.items()) if v}


def write_segments(path, segments_by_granularity: dict):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["granularity", "index", "startBlock", "endBlock"])
        for gran, segs in segments_by_granularity.items():
            for s in segs:
                w.writerow([gran.value, s.index, s.start, s.end])
