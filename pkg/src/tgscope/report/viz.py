"""Static HTML views of a topic model: topics over time, topic hierarchy, keywords.

Each page is a standalone XHTML-compatible document with inline SVG and the
plotted data embedded as a JSON block, so it opens offline and parses as XML.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from tgscope.report.outputs import SinkUnwritable, TopicInfo, topic_infos
from tgscope.topics.model import OUTLIER, TopicModel

TIME_FILE = "viz_topics_over_time.html"
HIERARCHY_FILE = "viz_hierarchy.html"
KEYWORDS_FILE = "viz_keywords.html"
VIZ_FILES = (TIME_FILE, HIERARCHY_FILE, KEYWORDS_FILE)

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
DAY = 86400


def _colour(topic: int) -> str:
    return "#999999" if topic == OUTLIER else PALETTE[topic % len(PALETTE)]


def _day(ts: int) -> int:
    return ts - ts % DAY


def _day_label(day: int) -> str:
    return (datetime(1970, 1, 1, tzinfo=timezone.utc) + timedelta(seconds=day)).date().isoformat()


def topics_over_time(rows: Sequence[dict]) -> dict[str, Any]:
    """Per-topic message counts in contiguous daily UTC bins.

    One series per topic id present in ``rows``; bins run from the first to
    the last day seen.
    """
    if not rows:
        return {"bins": [], "series": []}
    days = [_day(int(r["date"])) for r in rows]
    first, last = min(days), max(days)
    n_bins = (last - first) // DAY + 1
    topics = sorted({int(r["topic_id"]) for r in rows})
    counts = {t: [0] * n_bins for t in topics}
    for day, r in zip(days, rows):
        counts[int(r["topic_id"])][(day - first) // DAY] += 1
    return {
        "bins": [_day_label(first + i * DAY) for i in range(n_bins)],
        "series": [{"topic_id": t, "counts": counts[t]} for t in topics],
    }


def cosine_distances(rows: np.ndarray) -> np.ndarray:
    """Pairwise 1 - cos; a zero row is at distance 1 from everything but itself."""
    rows = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(rows, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = rows / safe[:, None]
    dist = 1.0 - unit @ unit.T
    zero = norms == 0
    dist[zero, :] = 1.0
    dist[:, zero] = 1.0
    # rounding keeps identical rows at exactly 0 despite float noise
    dist = np.clip(np.round(dist, 12), 0.0, 2.0)
    np.fill_diagonal(dist, 0.0)
    return dist


def average_linkage(dist: np.ndarray) -> list[dict[str, Any]]:
    """UPGMA merges as ``{left, right, distance, size}``.

    Leaves are nodes ``0..n-1``; merge ``k`` creates node ``n + k``. The
    closest pair merges first, ties going to the pair with the lowest node
    ids, so leaves (in topic id order) win over later clusters.
    """
    n = len(dist)
    active: dict[int, int] = {i: 1 for i in range(n)}
    d: dict[tuple[int, int], float] = {(i, j): float(dist[i, j]) for i in range(n) for j in range(i + 1, n)}
    merges = []
    next_id = n
    while len(active) > 1:
        (a, b), best = min(d.items(), key=lambda kv: (kv[1], kv[0]))
        na, nb = active.pop(a), active.pop(b)
        for k in active:
            dak = d.pop((min(a, k), max(a, k)))
            dbk = d.pop((min(b, k), max(b, k)))
            d[(k, next_id)] = (na * dak + nb * dbk) / (na + nb)
        del d[(a, b)]
        active[next_id] = na + nb
        merges.append({"left": a, "right": b, "distance": best, "size": na + nb})
        next_id += 1
    return merges


def topic_hierarchy(model: TopicModel) -> dict[str, Any]:
    leaves = [t for t in model.topic_ids if t != OUTLIER]
    if not leaves:
        return {"leaves": [], "merges": []}
    rows = np.vstack([model.ctfidf_row(t) for t in leaves])
    return {"leaves": leaves, "merges": average_linkage(cosine_distances(rows))}


def keyword_table(infos: Sequence[TopicInfo]) -> list[dict[str, Any]]:
    # same 4-decimal values as topic_info.csv
    return [
        {"topic_id": i.topic_id, "keywords": [[term, round(w, 4)] for term, w in i.keywords]}
        for i in infos
    ]


def _json_block(data: Any) -> str:
    text = json.dumps(data, ensure_ascii=False, separators=(",", ":"))
    return text.replace("&", "\\u0026").replace("<", "\\u003c").replace(">", "\\u003e")


def _page(title: str, svg: str, data: Any) -> str:
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8"/>\n'
        f"<title>{escape(title)}</title>\n"
        "<style>body{font-family:sans-serif;margin:1.5em}text{font-size:11px}</style>\n"
        "</head>\n<body>\n"
        f"<h1>{escape(title)}</h1>\n{svg}\n"
        f'<script type="application/json" id="chart-data">{_json_block(data)}</script>\n'
        "</body>\n</html>\n"
    )


def _text(x: float, y: float, s: str, anchor: str = "start", extra: str = "") -> str:
    return f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}"{extra}>{escape(s)}</text>'


def _empty_svg(message: str) -> str:
    return f'<svg width="400" height="60" viewBox="0 0 400 60">{_text(10, 30, message)}</svg>'


def time_svg(data: dict[str, Any]) -> str:
    bins, series = data["bins"], data["series"]
    if not bins:
        return _empty_svg("no messages")
    w, h, left, bottom, top = 900, 420, 50, 60, 20
    plot_w, plot_h = w - left - 160, h - bottom - top
    peak = max((max(s["counts"]) for s in series), default=1) or 1
    step = plot_w / max(1, len(bins) - 1)

    def xy(i: int, c: int) -> str:
        return f"{left + i * step:.1f},{top + plot_h - c / peak * plot_h:.1f}"

    parts = [f'<svg width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    parts.append(f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="#000"/>')
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#000"/>')
    parts.append(_text(left - 5, top + 4, str(peak), "end"))
    parts.append(_text(left - 5, top + plot_h, "0", "end"))
    label_every = max(1, len(bins) // 10)
    for i, label in enumerate(bins):
        if i % label_every == 0:
            parts.append(_text(left + i * step, top + plot_h + 15, label, "middle"))
    for k, s in enumerate(series):
        colour = _colour(s["topic_id"])
        points = " ".join(xy(i, c) for i, c in enumerate(s["counts"]))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{points}"/>')
        ly = top + 15 * k
        parts.append(f'<rect x="{left + plot_w + 15}" y="{ly}" width="10" height="10" fill="{colour}"/>')
        parts.append(_text(left + plot_w + 30, ly + 9, f"topic {s['topic_id']}"))
    parts.append("</svg>")
    return "".join(parts)


def hierarchy_svg(data: dict[str, Any], labels: dict[int, str]) -> str:
    leaves, merges = data["leaves"], data["merges"]
    if not leaves:
        return _empty_svg("no topics besides outliers")
    n = len(leaves)
    children = {n + k: (m["left"], m["right"]) for k, m in enumerate(merges)}
    height = {n + k: m["distance"] for k, m in enumerate(merges)}
    order: list[int] = []

    def walk(node: int) -> None:
        if node < n:
            order.append(node)
        else:
            walk(children[node][0])
            walk(children[node][1])

    walk(n + len(merges) - 1 if merges else 0)
    row_h, left, right_w = 24, 20, 360
    w, h = 900, row_h * n + 40
    top_d = max(height.values(), default=0.0) or 1.0
    xscale = right_w / top_d
    pos: dict[int, tuple[float, float]] = {}
    for rank, leaf in enumerate(order):
        pos[leaf] = (left + right_w, 20 + rank * row_h)
    parts = [f'<svg width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    for node in sorted(children):
        a, b = children[node]
        x = left + right_w - height[node] * xscale
        (xa, ya), (xb, yb) = pos[a], pos[b]
        parts.append(
            f'<polyline fill="none" stroke="#333" points="{xa:.1f},{ya:.1f} {x:.1f},{ya:.1f} {x:.1f},{yb:.1f} {xb:.1f},{yb:.1f}"/>'
        )
        pos[node] = (x, (ya + yb) / 2)
    for leaf in order:
        x, y = pos[leaf]
        topic = leaves[leaf]
        parts.append(_text(x + 6, y + 4, f"{topic}: {labels.get(topic, '')}"[:90]))
    parts.append("</svg>")
    return "".join(parts)


def keywords_svg(table: list[dict[str, Any]]) -> str:
    shown = [t for t in table if t["keywords"]]
    if not shown:
        return _empty_svg("no keywords")
    bar_h, block_gap, label_w, bar_w = 14, 30, 140, 300
    blocks = []
    y = 10
    for t in shown:
        blocks.append((y, t))
        y += block_gap + bar_h * len(t["keywords"])
    parts = [f'<svg width="{label_w + bar_w + 120}" height="{y}" viewBox="0 0 {label_w + bar_w + 120} {y}">']
    for y0, t in blocks:
        colour = _colour(t["topic_id"])
        peak = max(w for _, w in t["keywords"]) or 1.0
        parts.append(_text(0, y0 + 10, f"topic {t['topic_id']}", extra=' font-weight="bold"'))
        for i, (term, weight) in enumerate(t["keywords"]):
            yy = y0 + 16 + i * bar_h
            parts.append(_text(label_w - 6, yy + 10, term, "end"))
            parts.append(
                f'<rect x="{label_w}" y="{yy}" width="{weight / peak * bar_w:.1f}" height="{bar_h - 3}" fill="{colour}"/>'
            )
            parts.append(_text(label_w + weight / peak * bar_w + 4, yy + 10, f"{weight:.4f}"))
    parts.append("</svg>")
    return "".join(parts)


def render_visualizations(
    model: TopicModel,
    rows: Sequence[dict],
    out_dir: str | Path,
    infos: Optional[Sequence[TopicInfo]] = None,
) -> list[Path]:
    """Write the three HTML views and return their paths.

    ``rows`` are the annotated records (with ``date`` and ``topic_id``);
    ``infos`` default to the model's own keywords and descriptions.
    """
    if infos is None:
        infos = topic_infos(model, [int(r["topic_id"]) for r in rows])
    labels = {i.topic_id: i.description for i in infos}
    time_data = topics_over_time(rows)
    tree = topic_hierarchy(model)
    table = keyword_table(infos)
    pages = {
        TIME_FILE: _page("Topics over time", time_svg(time_data), time_data),
        HIERARCHY_FILE: _page("Topic hierarchy", hierarchy_svg(tree, labels), tree),
        KEYWORDS_FILE: _page("Topic keywords", keywords_svg(table), table),
    }
    out_dir = Path(out_dir)
    written = []
    for name, html in pages.items():
        path = out_dir / name
        try:
            path.write_text(html, encoding="utf-8")
        except OSError as exc:
            raise SinkUnwritable(f"{path}: {exc}") from exc
        written.append(path)
    return written


def extract_data(html: str) -> Any:
    """Read back the JSON block embedded in a rendered page."""
    start = html.index('id="chart-data">') + len('id="chart-data">')
    end = html.index("</script>", start)
    return json.loads(html[start:end])


__all__ = [
    "HIERARCHY_FILE", "KEYWORDS_FILE", "TIME_FILE", "VIZ_FILES", "average_linkage", "cosine_distances",
    "extract_data", "keyword_table", "render_visualizations", "topic_hierarchy", "topics_over_time",
]
