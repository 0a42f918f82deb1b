"""Output tables and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import shutil
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from tgscope.tables import write_table
from tgscope.topics.describe import offline_description
from tgscope.topics.model import TopicModel

MESSAGES_FILE = "messages_annotated.csv"
TOPIC_INFO_FILE = "topic_info.csv"
CHANNELS_FILE = "channels_list_details.csv"
MANIFEST_FILE = "manifest.json"
MODEL_FILE = "topic_model.bin"
TOPIC_INFO_COLUMNS = ("topic_id", "size", "keywords", "description")


class SinkUnwritable(OSError):
    """An output file or directory could not be written."""


@dataclass
class TopicInfo:
    topic_id: int
    size: int
    keywords: list[tuple[str, float]]
    description: str

    def to_row(self) -> list[Any]:
        return [self.topic_id, self.size, format_keywords(self.keywords), self.description]


def format_keywords(keywords: Iterable[tuple[str, float]]) -> str:
    return ";".join(f"{term}:{weight:.4f}" for term, weight in keywords)


def parse_keywords(cell: str) -> list[tuple[str, float]]:
    out = []
    for pair in filter(None, cell.split(";")):
        term, _, weight = pair.rpartition(":")
        out.append((term, float(weight)))
    return out


def topic_infos(model: TopicModel, topic_ids: Sequence[int]) -> list[TopicInfo]:
    """One row per model topic, outliers first; sizes count the assigned records."""
    counts: dict[int, int] = {}
    for t in topic_ids:
        counts[t] = counts.get(t, 0) + 1
    infos = []
    for t in model.topics:
        infos.append(
            TopicInfo(
                topic_id=t,
                size=counts.get(t, 0),
                keywords=list(model.topic_keywords.get(t, [])),
                description=model.descriptions.get(t) or offline_description(model, t),
            )
        )
    return infos


def utc_now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


@dataclass
class RunManifest:
    description: str
    started_at: str
    finished_at: Optional[str] = None
    config: dict[str, Any] = field(default_factory=dict)
    input_digests: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    stages: list[dict[str, Any]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def _ensure_dir(out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SinkUnwritable(f"{out_dir}: {exc}") from exc


def write_channel_details(rows_source: str | Path, out_path: Path) -> None:
    if Path(rows_source).resolve() != out_path.resolve():
        shutil.copyfile(rows_source, out_path)


def write_manifest(manifest: RunManifest, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    path = out_dir / MANIFEST_FILE
    if MANIFEST_FILE not in manifest.outputs:
        manifest.outputs = sorted(set(manifest.outputs) | {MANIFEST_FILE})
    try:
        path.write_text(json.dumps(manifest.to_json(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise SinkUnwritable(f"{path}: {exc}") from exc
    return path


def write_outputs(
    rows: Sequence[dict],
    columns: Sequence[str],
    infos: Sequence[TopicInfo],
    channel_details: str | Path | Sequence[dict] | None,
    manifest: Optional[RunManifest],
    out_dir: str | Path,
) -> list[Path]:
    """Write the annotated messages, topic info, channel details and manifest.

    ``rows`` must already carry ``topic_id``. ``channel_details`` is either a
    details CSV produced by the crawl stage or a list of row dicts. The
    manifest goes last and lists every file written so far in ``out_dir``.
    """
    out_dir = Path(out_dir)
    _ensure_dir(out_dir)
    written: list[Path] = []
    cols = list(columns)
    if "topic_id" not in cols:
        cols.append("topic_id")
    try:
        write_table(out_dir / MESSAGES_FILE, rows, cols)
        written.append(out_dir / MESSAGES_FILE)
        with open(out_dir / TOPIC_INFO_FILE, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(TOPIC_INFO_COLUMNS)
            for info in infos:
                w.writerow(info.to_row())
        written.append(out_dir / TOPIC_INFO_FILE)
        details_path = out_dir / CHANNELS_FILE
        if isinstance(channel_details, (str, Path)):
            write_channel_details(channel_details, details_path)
        elif channel_details is not None:
            details = list(channel_details)
            header = list(details[0]) if details else []
            with open(details_path, "w", newline="", encoding="utf-8") as fh:
                w = csv.DictWriter(fh, fieldnames=header, lineterminator="\r\n")
                w.writeheader()
                w.writerows(details)
        if details_path.exists():
            written.append(details_path)
    except OSError as exc:
        raise SinkUnwritable(str(exc)) from exc
    if manifest is not None:
        manifest.outputs = sorted(set(manifest.outputs) | {p.name for p in written})
        if manifest.finished_at is None:
            manifest.finished_at = utc_now()
        written.append(write_manifest(manifest, out_dir))
    return written
