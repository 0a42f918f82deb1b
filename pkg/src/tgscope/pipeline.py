"""Pipeline configuration and stage orchestration.

Stages run in the order crawl, clean, metrics, nlp, topics, report. Each one
reads only the file written by the stage before it, so any stage can also be
run on its own against an existing output directory.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from tgscope import cleaner, metrics, textprep
from tgscope.crawler import (
    CrawlError,
    CrawlSinks,
    CrawlWindow,
    RateLimitPolicy,
    make_provider,
    read_channels_from_csv,
    snowball,
    write_channels_csv,
)
from tgscope.model import ArchiveError, format_ts, read_archive
from tgscope.report import (
    CHANNELS_FILE,
    MODEL_FILE,
    RunManifest,
    SinkUnwritable,
    file_digest,
    render_visualizations,
    topic_infos,
    utc_now,
    write_manifest,
    write_outputs,
)
from tgscope.tables import read_table, write_table
from tgscope.topics import (
    EmbeddingError,
    EmbeddingProvider,
    TopicModelConfig,
    assign_topics,
    describe_topics,
    load_model,
    load_stopwords,
    save_model,
    train_topic_model,
)
from tgscope.topics.describe import DEFAULT_LLM_MODEL

logger = logging.getLogger(__name__)

STAGES = ("crawl", "clean", "metrics", "nlp", "topics", "report")
MESSAGES_JSONL = "messages.jsonl"
CHANNELS_LIST = "channels_list.csv"
CLEAN_FILE = "messages_clean.csv"
METRICS_FILE = "messages_metrics.csv"
NLP_FILE = "messages_nlp.csv"
ASSIGNMENTS_FILE = "topic_assignments.csv"
ASSIGNMENT_COLUMNS = ["channel_id", "message_id", "topic_id"]
PARTIAL = ".partial"

EXIT_OK, EXIT_USAGE, EXIT_CRAWL, EXIT_PROCESSING, EXIT_OUTPUT = 0, 2, 3, 4, 5
SECRET_FIELDS = ("api_id", "api_hash", "openai_key")


def bundled_archive() -> Path:
    return Path(str(resources.files("tgscope.data").joinpath("sample_archive")))


@dataclass
class PipelineConfig:
    start_date: Optional[int] = None
    end_date: Optional[int] = None
    channels_file: Path = field(default_factory=lambda: bundled_archive() / "channels_sample.csv")
    api_id: Optional[str] = None
    api_hash: Optional[str] = None
    openai_key: Optional[str] = None
    description: str = ""
    limit: Optional[int] = None
    capture_urls: bool = True
    capture_emojis: bool = True
    capture_mentions: bool = True
    features: Optional[list[str]] = None
    k_neighbors: int = 10
    viral_threshold: float = 3.0
    extractor_sample_ratio: float = 1.0
    viewer_generate_viz: bool = True
    provider: str = "archive"
    provider_root: str = field(default_factory=lambda: str(bundled_archive()))
    requests_per_second: float = 1.0
    max_retries: int = 3
    max_parallel_channels: int = 4
    snowball_rounds: int = 1
    seed: int = 0
    out_dir: Path = Path("output")
    lexicon: Optional[Path] = None
    stopwords: str = "es"
    embedder: str = "hashed"
    embedding_dim: int = 384
    embedding_endpoint: Optional[str] = None
    reduced_dim: int = 5
    cluster_eps: float = 0.5
    cluster_min_points: int = 10
    min_topic_size: int = 10
    n_keywords: int = 10
    llm_endpoint: Optional[str] = None
    llm_model: str = DEFAULT_LLM_MODEL

    def __post_init__(self) -> None:
        self.out_dir = Path(self.out_dir)
        self.channels_file = Path(self.channels_file)

    def window(self) -> CrawlWindow:
        if self.start_date is None or self.end_date is None:
            raise ValueError("crawling needs start_date and end_date")
        return CrawlWindow(self.start_date, self.end_date, self.limit)

    def policy(self) -> RateLimitPolicy:
        return RateLimitPolicy(self.requests_per_second, self.max_retries, self.max_parallel_channels)

    def capture_flags(self) -> cleaner.CaptureFlags:
        return cleaner.CaptureFlags(self.capture_urls, self.capture_emojis, self.capture_mentions)

    def feature_list(self) -> cleaner.FeatureList:
        return cleaner.FeatureList(self.features) if self.features else cleaner.FeatureList()

    def metric_params(self) -> metrics.MetricParams:
        return metrics.MetricParams(self.k_neighbors, self.viral_threshold)

    def topic_config(self) -> TopicModelConfig:
        return TopicModelConfig(
            sample_ratio=self.extractor_sample_ratio,
            reduced_dim=self.reduced_dim,
            cluster_eps=self.cluster_eps,
            cluster_min_points=self.cluster_min_points,
            n_keywords=self.n_keywords,
            seed=self.seed,
            min_topic_size=self.min_topic_size,
        )

    def embedding_provider(self) -> EmbeddingProvider:
        return EmbeddingProvider(
            kind=self.embedder, dim=self.embedding_dim, endpoint=self.embedding_endpoint, seed=self.seed
        )

    def snapshot(self) -> dict[str, Any]:
        """Config as stored in the manifest: secrets become presence flags."""
        out: dict[str, Any] = {}
        for key, value in asdict(self).items():
            if key in SECRET_FIELDS:
                out[f"{key}_present"] = bool(value)
            elif key in ("start_date", "end_date") and value is not None:
                out[key] = format_ts(value)
            elif isinstance(value, Path):
                out[key] = str(value)
            else:
                out[key] = value
        return out


class StageError(Exception):
    """A stage failed; ``exit_code`` follows the CLI contract."""

    def __init__(self, stage: str, cause: BaseException, exit_code: int) -> None:
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code


def _write(path: Path, rows, columns: Sequence[str]) -> int:
    try:
        return write_table(path, rows, list(columns))
    except OSError as exc:
        raise SinkUnwritable(f"{path}: {exc}") from exc


def _need(path: Path, stage: str) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"{path} not found; run the stage before {stage} first")
    return path


class Run:
    """State shared by the stages of one invocation."""

    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self.out = config.out_dir
        self.manifest = RunManifest(
            description=config.description, started_at=utc_now(), config=config.snapshot()
        )
        self.produced: list[str] = []

    def record(self, *paths: Path) -> None:
        for p in paths:
            if p.name not in self.produced:
                self.produced.append(p.name)

    def digest_input(self, path: Path) -> None:
        if path.is_file():
            self.manifest.input_digests[str(path)] = file_digest(path)

    # stages -----------------------------------------------------------------

    def crawl(self) -> None:
        cfg = self.config
        seeds = read_channels_from_csv(cfg.channels_file)
        self.digest_input(cfg.channels_file)
        if cfg.provider == "archive":
            root = Path(cfg.provider_root)
            for p in sorted(root.glob("channels.json")) + sorted(root.glob("messages_*.jsonl")):
                self.digest_input(p)
        provider = make_provider(cfg.provider, cfg.provider_root)
        self.out.mkdir(parents=True, exist_ok=True)
        # write under temporary names so a failed crawl leaves no stage files behind
        sinks = CrawlSinks(self.out / (MESSAGES_JSONL + PARTIAL), self.out / (CHANNELS_FILE + PARTIAL))
        channels, report = snowball(provider, seeds, cfg.snowball_rounds, cfg.window(), cfg.policy(), sinks)
        for ref, kind in report.failures:
            self.manifest.warnings.append(f"crawl: channel {ref} failed ({kind})")
        if report.channels_processed == 0:
            kinds = sorted({k for _, k in report.failures}) or ["no seeds"]
            raise CrawlError(f"no channel could be crawled ({', '.join(kinds)})")
        os.replace(sinks.messages_path, self.out / MESSAGES_JSONL)
        os.replace(sinks.details_path, self.out / CHANNELS_FILE)
        write_channels_csv(self.out / CHANNELS_LIST, channels)
        self.record(self.out / MESSAGES_JSONL, self.out / CHANNELS_FILE, self.out / CHANNELS_LIST)
        logger.info(
            "event=crawl_done channels=%d messages=%d rounds=%d failures=%d",
            report.channels_processed, report.messages_fetched, report.rounds, len(report.failures),
        )

    def clean(self) -> None:
        src = _need(self.out / MESSAGES_JSONL, "clean")
        messages = read_archive(src)
        features = self.config.feature_list()
        records = cleaner.flatten(messages, features, self.config.capture_flags())
        n = _write(self.out / CLEAN_FILE, (r.to_row() for r in records), cleaner.clean_columns(features))
        self.record(self.out / CLEAN_FILE)
        logger.info("event=clean_done rows=%d", n)

    def metrics(self) -> None:
        columns, rows = read_table(_need(self.out / CLEAN_FILE, "metrics"))
        out = metrics.annotate(rows, self.config.metric_params())
        n = _write(self.out / METRICS_FILE, out, columns + list(metrics.METRIC_COLUMNS))
        self.record(self.out / METRICS_FILE)
        logger.info("event=metrics_done rows=%d viral=%d", n, sum(1 for r in out if r["is_viral"]))

    def nlp(self) -> None:
        columns, rows = read_table(_need(self.out / METRICS_FILE, "nlp"))
        if self.config.lexicon is not None:
            self.digest_input(self.config.lexicon)
        lexicon = textprep.load_lexicon(self.config.lexicon)
        out = textprep.annotate(rows, lexicon)
        n = _write(self.out / NLP_FILE, out, columns + list(textprep.NLP_COLUMNS))
        self.record(self.out / NLP_FILE)
        logger.info("event=nlp_done rows=%d", n)

    def topics(self) -> None:
        cfg = self.config
        _, rows = read_table(_need(self.out / NLP_FILE, "topics"))
        stop = load_stopwords(cfg.stopwords)
        provider = cfg.embedding_provider()
        started = time.monotonic()
        model = train_topic_model(rows, provider, cfg.topic_config(), stop)
        _, warnings = describe_topics(model, cfg.llm_endpoint, cfg.openai_key, cfg.llm_model)
        self.manifest.warnings.extend(warnings)
        try:
            save_model(model, self.out / MODEL_FILE)
        except OSError as exc:
            raise SinkUnwritable(f"{self.out / MODEL_FILE}: {exc}") from exc
        labels = assign_topics(model, rows)
        assignments = [
            {"channel_id": r["channel_id"], "message_id": r["message_id"], "topic_id": t}
            for r, t in zip(rows, labels)
        ]
        _write(self.out / ASSIGNMENTS_FILE, assignments, ASSIGNMENT_COLUMNS)
        self.record(self.out / MODEL_FILE, self.out / ASSIGNMENTS_FILE)
        logger.info(
            "event=topics_done topics=%d trained_on=%d rows=%d seconds=%.2f",
            len(model.topic_sizes) - (1 if -1 in model.topic_sizes else 0), model.n_training, len(rows),
            time.monotonic() - started,
        )

    def report(self) -> None:
        columns, rows = read_table(_need(self.out / NLP_FILE, "report"))
        _, assigned = read_table(_need(self.out / ASSIGNMENTS_FILE, "report"))
        model = load_model(_need(self.out / MODEL_FILE, "report"))
        by_key = {(a["channel_id"], a["message_id"]): a["topic_id"] for a in assigned}
        missing = [r for r in rows if (r["channel_id"], r["message_id"]) not in by_key]
        if missing:
            raise ValueError(f"{len(missing)} messages have no topic assignment")
        annotated = [{**r, "topic_id": by_key[(r["channel_id"], r["message_id"])]} for r in rows]
        infos = topic_infos(model, [r["topic_id"] for r in annotated])
        details = self.out / CHANNELS_FILE
        if self.config.viewer_generate_viz:
            self.record(*render_visualizations(model, annotated, self.out, infos))
        written = write_outputs(annotated, columns + ["topic_id"], infos, details if details.exists() else None,
                                None, self.out)
        self.record(*written)
        logger.info("event=report_done rows=%d topics=%d", len(annotated), len(infos))




def _exit_code(stage: str, exc: BaseException) -> int:
    if stage == "crawl":
        return EXIT_CRAWL
    if stage == "report" or isinstance(exc, SinkUnwritable):
        return EXIT_OUTPUT
    return EXIT_PROCESSING

_EXPECTED = (
    CrawlError, ArchiveError, EmbeddingError, OSError, ValueError, KeyError,
)


def run_stages(config: PipelineConfig, stages: Sequence[str] = STAGES) -> RunManifest:
    """Run ``stages`` in pipeline order and write the manifest last.

    A failing stage raises :class:`StageError` after the manifest (with the
    failure recorded) is written; files from earlier stages stay in place.
    """
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise ValueError(f"unknown stage {unknown[0]!r}")
    run = Run(config)
    logger.info("event=run_start description=%r stages=%s out_dir=%s", config.description, ",".join(stages), config.out_dir)
    failure: Optional[StageError] = None
    for stage in (s for s in STAGES if s in stages):
        step: Callable[[], None] = getattr(run, stage)
        started = time.monotonic()
        try:
            step()
        except _EXPECTED as exc:
            failure = StageError(stage, exc, _exit_code(stage, exc))
            run.manifest.stages.append({"stage": stage, "status": "failed", "error": f"{exc.__class__.__name__}: {exc}"})
            logger.error("event=stage_failed stage=%s error=%s detail=%r", stage, exc.__class__.__name__, str(exc))
            break
        elapsed = round(time.monotonic() - started, 3)
        run.manifest.stages.append({"stage": stage, "status": "ok", "seconds": elapsed})
        logger.info("event=stage_done stage=%s seconds=%.3f", stage, elapsed)

    run.manifest.outputs = list(run.produced)
    run.manifest.finished_at = utc_now()
    if config.out_dir.is_dir() and (failure is None or failure.stage != "crawl" or run.produced):
        try:
            write_manifest(run.manifest, config.out_dir)
        except SinkUnwritable as exc:
            if failure is None:
                failure = StageError("report", exc, EXIT_OUTPUT)
    if failure is not None:
        raise failure
    logger.info("event=run_done outputs=%d", len(run.manifest.outputs))
    return run.manifest


def run_pipeline(config: PipelineConfig) -> RunManifest:
    return run_stages(config, STAGES)
