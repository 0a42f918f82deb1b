"""Per-message engagement metrics.

The virality ratio compares a message's forwards with the mean forwards of
its k temporal neighbours in the same channel::

    ratio = forwards / max(1, mean(neighbour forwards))

A message is viral when ``ratio >= viral_threshold``. Engagement rate is
``(reactions_total + replies_count) / max(1, views)``. Absent forwards and
replies count as 0, absent views as 1.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, TypeVar

METRIC_COLUMNS = ("virality_ratio", "is_viral", "engagement_rate")

T = TypeVar("T")


@dataclass(frozen=True)
class MetricParams:
    k_neighbors: int = 10
    viral_threshold: float = 3.0

    def __post_init__(self) -> None:
        if self.k_neighbors < 2 or self.k_neighbors % 2:
            raise ValueError("k_neighbors must be an even integer >= 2")
        if not self.viral_threshold > 0:
            raise ValueError("viral_threshold must be positive")


@dataclass(frozen=True)
class MessageMetrics:
    virality_ratio: float
    is_viral: bool
    engagement_rate: float


def _get(record: Any, name: str) -> Any:
    if isinstance(record, Mapping):
        return record.get(name)
    values = getattr(record, "values", None)
    if isinstance(values, Mapping) and name in values:
        return values[name]
    return getattr(record, name, None)


def neighbor_indices(n: int, index: int, k: int) -> list[int]:
    """Positions of up to k/2 neighbours on each side of ``index``.

    Near a boundary the shortfall is taken from the other side, so the
    result has ``min(k, n - 1)`` entries.
    """
    half = k // 2
    before = min(half, index)
    after = min(half, n - 1 - index)
    if before < half:
        after = min(n - 1 - index, after + half - before)
    if after < half:
        before = min(index, before + half - after)
    return list(range(index - before, index)) + list(range(index + 1, index + 1 + after))


def neighbor_window(records: Sequence[T], index: int, k: int) -> list[T]:
    return [records[i] for i in neighbor_indices(len(records), index, k)]


def virality_ratio(m: Any, neighbors: Sequence[Any]) -> float:
    forwards = _get(m, "forwards") or 0
    if not neighbors:
        return float(forwards)
    total = sum(_get(r, "forwards") or 0 for r in neighbors)
    # mean below 1 clamps the divisor to 1; f*n/total keeps a single rounding
    if total < len(neighbors):
        return float(forwards)
    return forwards * len(neighbors) / total


def engagement_rate(m: Any) -> float:
    interactions = (_get(m, "reactions_total") or 0) + (_get(m, "replies_count") or 0)
    views = _get(m, "views")
    return interactions / max(1, views if views is not None else 1)


def _order_key(record: Any) -> tuple:
    return (_get(record, "date") or 0, _get(record, "message_id") or 0)


def compute_metrics(records: Sequence[Any], params: MetricParams = MetricParams()) -> list[MessageMetrics]:
    """Metrics for every record, aligned with the input order.

    Neighbourhoods are formed per channel over (date, message_id) order, so
    the input order itself never matters.
    """
    by_channel: dict[Any, list[int]] = defaultdict(list)
    for i, r in enumerate(records):
        by_channel[_get(r, "channel_id")].append(i)
    out: list[MessageMetrics | None] = [None] * len(records)
    for positions in by_channel.values():
        positions.sort(key=lambda i: _order_key(records[i]))
        channel = [records[i] for i in positions]
        for j, i in enumerate(positions):
            ratio = virality_ratio(channel[j], neighbor_window(channel, j, params.k_neighbors))
            out[i] = MessageMetrics(
                virality_ratio=ratio,
                is_viral=ratio >= params.viral_threshold,
                engagement_rate=engagement_rate(channel[j]),
            )
    return out  # type: ignore[return-value]


def annotate(rows: Sequence[dict], params: MetricParams = MetricParams()) -> list[dict]:
    """Copy of ``rows`` with the metric columns added."""
    return [
        {**row, "virality_ratio": mm.virality_ratio, "is_viral": mm.is_viral, "engagement_rate": mm.engagement_rate}
        for row, mm in zip(rows, compute_metrics(rows, params))
    ]
