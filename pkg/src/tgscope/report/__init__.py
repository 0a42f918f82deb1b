"""Output tables, run manifest and static HTML views."""

from tgscope.report.outputs import (
    CHANNELS_FILE,
    MANIFEST_FILE,
    MESSAGES_FILE,
    MODEL_FILE,
    TOPIC_INFO_COLUMNS,
    TOPIC_INFO_FILE,
    RunManifest,
    SinkUnwritable,
    TopicInfo,
    file_digest,
    format_keywords,
    parse_keywords,
    topic_infos,
    utc_now,
    write_manifest,
    write_outputs,
)
from tgscope.report.viz import (
    HIERARCHY_FILE,
    KEYWORDS_FILE,
    TIME_FILE,
    VIZ_FILES,
    average_linkage,
    cosine_distances,
    extract_data,
    keyword_table,
    render_visualizations,
    topic_hierarchy,
    topics_over_time,
)

__all__ = [
    "CHANNELS_FILE", "HIERARCHY_FILE", "KEYWORDS_FILE", "MANIFEST_FILE", "MESSAGES_FILE", "MODEL_FILE",
    "TIME_FILE", "TOPIC_INFO_COLUMNS", "TOPIC_INFO_FILE", "VIZ_FILES", "RunManifest", "SinkUnwritable",
    "TopicInfo", "average_linkage", "cosine_distances", "extract_data", "file_digest", "format_keywords",
    "keyword_table", "parse_keywords", "render_visualizations", "topic_hierarchy", "topic_infos",
    "topics_over_time", "utc_now", "write_manifest", "write_outputs",
]
