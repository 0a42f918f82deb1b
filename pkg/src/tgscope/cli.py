"""Command line entry point.

``tgscope [run|crawl|clean|metrics|nlp|topics|report] [flags]``; without a
subcommand the full pipeline runs. Flags use snake_case names and also accept
the kebab-case spelling.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from tgscope.cleaner import FeatureList
from tgscope.model import BadTimestamp, parse_ts
from tgscope.pipeline import (
    EXIT_OK,
    EXIT_USAGE,
    STAGES,
    PipelineConfig,
    StageError,
    bundled_archive,
    run_stages,
)
from tgscope.topics.describe import DEFAULT_LLM_MODEL, OPENAI_CHAT_URL

COMMANDS = ("run",) + STAGES
ENV_SECRETS = {"api_id": "TG_API_ID", "api_hash": "TG_API_HASH", "openai_key": "OPENAI_API_KEY"}


class UsageError(ValueError):
    """Bad command line; the message names the offending flag."""


class DateOrderError(UsageError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _timestamp(value: str) -> int:
    try:
        return parse_ts(value)
    except BadTimestamp as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return n


def _positive_float(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return x


def _ratio(value: str) -> float:
    x = float(value)
    if not 0 < x <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {value}")
    return x


def _even_k(value: str) -> int:
    k = int(value)
    if k < 2 or k % 2:
        raise argparse.ArgumentTypeError(f"must be an even integer >= 2, got {value}")
    return k


def _names(flag: str) -> list[str]:
    names = [f"--{flag}"]
    if "_" in flag:
        names.append("--" + flag.replace("_", "-"))
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tgscope", description=__doc__.split("\n\n")[0], allow_abbrev=False)

    def add(flag: str, **kw) -> None:
        p.add_argument(*_names(flag), dest=flag, **kw)

    add("api_id", help="Telegram API id (or TG_API_ID); kept for a live provider adapter")
    add("api_hash", help="Telegram API hash (or TG_API_HASH)")
    add("start_date", type=_timestamp, help="window start, RFC 3339 with offset")
    add("end_date", type=_timestamp, help="window end (exclusive), RFC 3339 with offset")
    add("channels_file", type=Path, default=None, help="seed channels CSV (default: bundled sample)")
    add("limit", type=_positive_int, help="keep at most N most recent messages per channel")
    add("snowball_rounds", type=_positive_int, default=1, help="rounds of recommended-channel expansion")
    add("provider", choices=("archive", "http"), default="archive")
    add("provider_root", default=None, help="archive directory or HTTP base URL (default: bundled archive)")
    add("requests_per_second", type=_positive_float, default=1.0)
    add("max_retries", type=int, default=3)
    add("max_parallel_channels", type=_positive_int, default=4)

    add("capture_urls", action=argparse.BooleanOptionalAction, default=True)
    add("capture_emojis", action=argparse.BooleanOptionalAction, default=True)
    add("capture_mentions", action=argparse.BooleanOptionalAction, default=True)
    add("features", help="comma-separated message fields to keep")

    add("k_neighbors", type=_even_k, default=10, help="neighbours used for the virality ratio")
    add("viral_threshold", type=_positive_float, default=3.0)
    add("lexicon", type=Path, help="sentiment lexicon TSV (default: bundled Spanish lexicon)")

    add("extractor_sample_ratio", type=_ratio, default=1.0, help="share of messages used to train topics")
    add("stopwords", default="es", help="stopword language code(s), a file, or none")
    add("embedder", choices=("hashed", "remote"), default="hashed")
    add("embedding_dim", type=_positive_int, default=384)
    add("embedding_endpoint", help="base URL of a remote embedding service")
    add("reduced_dim", type=_positive_int, default=5)
    add("cluster_eps", type=_positive_float, default=0.5)
    add("cluster_min_points", type=_positive_int, default=10)
    add("min_topic_size", type=_positive_int, default=10)
    add("n_keywords", type=_positive_int, default=10)
    add("openai_key", help="key for topic descriptions (or OPENAI_API_KEY)")
    add("llm_endpoint", help="chat-completions URL (default: OpenAI when a key is set)")
    add("llm_model", default=DEFAULT_LLM_MODEL)

    add("viewer_generate_viz", action=argparse.BooleanOptionalAction, default=True)
    add("description", default="", help="free text saved in the run manifest")
    add("seed", type=int, default=0)
    add("out_dir", type=Path, default=Path("output"))
    add("log_level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return p


def split_command(argv: Sequence[str]) -> tuple[str, list[str]]:
    argv = list(argv)
    if argv and argv[0] in COMMANDS:
        return argv[0], argv[1:]
    if argv and not argv[0].startswith("-") and argv[0] not in ("help",):
        raise UsageError(f"unknown command {argv[0]!r}; expected one of {', '.join(COMMANDS)}")
    return "run", argv


def parse_config(argv: Sequence[str], env: Optional[dict] = None) -> PipelineConfig:
    """Build a config from flags; secrets fall back to the environment."""
    command, rest = split_command(argv)
    ns = build_parser().parse_args(rest)
    env = os.environ if env is None else env
    secrets = {k: getattr(ns, k) or env.get(var) or None for k, var in ENV_SECRETS.items()}

    if command in ("run", "crawl"):
        for flag in ("start_date", "end_date"):
            if getattr(ns, flag) is None:
                raise UsageError(f"argument --{flag} is required for {command}")
    if ns.start_date is not None and ns.end_date is not None and not ns.start_date < ns.end_date:
        raise DateOrderError("argument --start_date must be earlier than --end_date")
    if ns.max_retries < 0:
        raise UsageError("argument --max_retries must be >= 0")
    if ns.embedder == "remote" and not ns.embedding_endpoint:
        raise UsageError("argument --embedding_endpoint is required with --embedder remote")
    if ns.reduced_dim > ns.embedding_dim:
        raise UsageError("argument --reduced_dim must not exceed --embedding_dim")
    features = [f.strip() for f in ns.features.split(",") if f.strip()] if ns.features else None
    if features:
        try:
            FeatureList(features)
        except ValueError as exc:
            raise UsageError(f"argument --features: {exc}") from None

    llm_endpoint = ns.llm_endpoint or (OPENAI_CHAT_URL if secrets["openai_key"] else None)
    return PipelineConfig(
        start_date=ns.start_date,
        end_date=ns.end_date,
        channels_file=ns.channels_file or bundled_archive() / "channels_sample.csv",
        description=ns.description,
        limit=ns.limit,
        capture_urls=ns.capture_urls,
        capture_emojis=ns.capture_emojis,
        capture_mentions=ns.capture_mentions,
        features=features,
        k_neighbors=ns.k_neighbors,
        viral_threshold=ns.viral_threshold,
        extractor_sample_ratio=ns.extractor_sample_ratio,
        viewer_generate_viz=ns.viewer_generate_viz,
        provider=ns.provider,
        provider_root=ns.provider_root or str(bundled_archive()),
        requests_per_second=ns.requests_per_second,
        max_retries=ns.max_retries,
        max_parallel_channels=ns.max_parallel_channels,
        snowball_rounds=ns.snowball_rounds,
        seed=ns.seed,
        out_dir=ns.out_dir,
        lexicon=ns.lexicon,
        stopwords=ns.stopwords,
        embedder=ns.embedder,
        embedding_dim=ns.embedding_dim,
        embedding_endpoint=ns.embedding_endpoint,
        reduced_dim=ns.reduced_dim,
        cluster_eps=ns.cluster_eps,
        cluster_min_points=ns.cluster_min_points,
        min_topic_size=ns.min_topic_size,
        n_keywords=ns.n_keywords,
        llm_endpoint=llm_endpoint,
        llm_model=ns.llm_model,
        **secrets,
    )


class _UTCFormatter(logging.Formatter):
    converter = time.gmtime

    def formatTime(self, record, datefmt=None):  # noqa: N802
        return time.strftime("%Y-%m-%dT%H:%M:%S", self.converter(record.created)) + f".{int(record.msecs):03d}Z"


def configure_logging(level: str = "INFO") -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_UTCFormatter("ts=%(asctime)s level=%(levelname)s logger=%(name)s %(message)s"))
    root = logging.getLogger("tgscope")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def _log_level(argv: Sequence[str]) -> str:
    for i, a in enumerate(argv):
        if a in ("--log_level", "--log-level") and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith(("--log_level=", "--log-level=")):
            return a.split("=", 1)[1]
    return "INFO"


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    log = logging.getLogger("tgscope.cli")
    if any(a in ("-h", "--help") for a in argv):
        build_parser().print_help()
        return EXIT_OK
    level = _log_level(argv)
    configure_logging(level if level in ("DEBUG", "INFO", "WARNING", "ERROR") else "INFO")
    try:
        command, _ = split_command(argv)
        config = parse_config(argv)
    except UsageError as exc:
        log.error("event=usage_error detail=%r", str(exc))
        print(f"tgscope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    stages = STAGES if command == "run" else (command,)
    try:
        run_stages(config, stages)
    except StageError as exc:
        print(f"tgscope: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
