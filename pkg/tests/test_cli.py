from __future__ import annotations

import json
import os
import subprocess
import sys
from datetime import datetime
from pathlib import Path

import pytest

from tgscope.cli import DateOrderError, UsageError, main, parse_config, split_command
from tgscope.model import format_ts
from tgscope.pipeline import (
    ASSIGNMENTS_FILE,
    CLEAN_FILE,
    EXIT_CRAWL,
    EXIT_OK,
    EXIT_OUTPUT,
    EXIT_PROCESSING,
    EXIT_USAGE,
    METRICS_FILE,
    NLP_FILE,
    STAGES,
    PipelineConfig,
    StageError,
    bundled_archive,
    run_stages,
)
from tgscope.report import CHANNELS_FILE, MANIFEST_FILE, MESSAGES_FILE, MODEL_FILE, TOPIC_INFO_FILE, VIZ_FILES

CHANNELS = str(bundled_archive() / "channels_sample.csv")
WINDOW = ["--start_date", "2024-08-01T00:00:00+00:00", "--end_date", "2024-09-01T00:00:00+00:00"]
FAST = ["--requests_per_second", "100"]
CSVS = (CLEAN_FILE, METRICS_FILE, NLP_FILE, ASSIGNMENTS_FILE, MESSAGES_FILE, TOPIC_INFO_FILE, CHANNELS_FILE)


def utc(text):
    return int(datetime.strptime(text, "%Y-%m-%dT%H:%M:%S%z").timestamp())


def example_flags(out_dir):
    return ["--api_id", "12345", "--api_hash", "hash-abc", *WINDOW, "--channels_file", CHANNELS,
            "--openai_key", "sk-test", "--description", "Sample running, Aug 2024, using OpenAI API",
            "--out_dir", str(out_dir)]


# parsing ---------------------------------------------------------------------

def test_example_flags_parse(tmp_path):
    cfg = parse_config(example_flags(tmp_path), env={})
    assert cfg.start_date == utc("2024-08-01T00:00:00Z")
    assert cfg.end_date == utc("2024-09-01T00:00:00Z")
    assert cfg.api_id == "12345" and cfg.openai_key == "sk-test"
    assert cfg.description == "Sample running, Aug 2024, using OpenAI API"
    assert cfg.llm_endpoint is not None


def test_offsets_are_normalised():
    cfg = parse_config(["--start_date", "2024-08-01T02:00:00+02:00", "--end_date", "2024-08-02T00:00:00Z"], env={})
    assert cfg.start_date == utc("2024-08-01T00:00:00Z")
    assert format_ts(cfg.start_date) == "2024-08-01T00:00:00+00:00"


def test_date_order():
    with pytest.raises(DateOrderError):
        parse_config(["--start_date", "2024-09-01T00:00:00Z", "--end_date", "2024-08-01T00:00:00Z"], env={})
    with pytest.raises(DateOrderError):
        parse_config(["--start_date", "2024-09-01T00:00:00Z", "--end_date", "2024-09-01T00:00:00Z"], env={})


@pytest.mark.parametrize("argv,flag", [
    (["--extractor_sample_ratio", "0"], "extractor_sample_ratio"),
    (["--extractor_sample_ratio", "1.5"], "extractor_sample_ratio"),
    (["--k_neighbors", "3"], "k_neighbors"),
    (["--requests_per_second", "0"], "requests_per_second"),
    (["--start_date", "2024-08-01"], "start_date"),
    (["--features", "id,bogus"], "features"),
])
def test_bad_values_name_the_flag(argv, flag):
    base = WINDOW if not argv[0] == "--start_date" else WINDOW[2:]
    with pytest.raises(UsageError, match=flag):
        parse_config(base + argv, env={})


def test_unknown_flag_and_command():
    with pytest.raises(UsageError):
        parse_config(WINDOW + ["--no_such_flag", "1"], env={})
    with pytest.raises(UsageError):
        parse_config(WINDOW + ["--start"], env={})
    with pytest.raises(UsageError):
        split_command(["frobnicate"])


def test_dates_required_only_for_crawl():
    with pytest.raises(UsageError, match="start_date"):
        parse_config([], env={})
    with pytest.raises(UsageError):
        parse_config(["crawl"], env={})
    assert parse_config(["topics"], env={}).start_date is None


def test_env_secrets_and_precedence():
    env = {"TG_API_ID": "env-id", "TG_API_HASH": "env-hash", "OPENAI_API_KEY": "env-key"}
    cfg = parse_config(WINDOW, env=env)
    assert (cfg.api_id, cfg.api_hash, cfg.openai_key) == ("env-id", "env-hash", "env-key")
    cfg = parse_config(WINDOW + ["--api_id", "flag-id"], env=env)
    assert cfg.api_id == "flag-id" and cfg.api_hash == "env-hash"
    cfg = parse_config(WINDOW, env={})
    assert cfg.openai_key is None and cfg.llm_endpoint is None


def test_kebab_aliases():
    a = parse_config(WINDOW + ["--k_neighbors", "4", "--no-capture-urls", "--snowball-rounds", "2"], env={})
    b = parse_config(["--start-date", WINDOW[1], "--end-date", WINDOW[3], "--k-neighbors", "4",
                      "--no-capture_urls", "--snowball_rounds", "2"], env={})
    assert a == b and a.k_neighbors == 4 and not a.capture_urls and a.snowball_rounds == 2


def test_main_usage_exit_code(capsys):
    assert main(["--extractor_sample_ratio", "0", *WINDOW]) == EXIT_USAGE
    assert "extractor_sample_ratio" in capsys.readouterr().err
    assert main(["--help"]) == EXIT_OK


# runs ------------------------------------------------------------------------

def csv_bytes(out_dir):
    return {name: (out_dir / name).read_bytes() for name in CSVS}


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("full")
    assert main(example_flags(out)[:-6] + ["--description", "full", "--out_dir", str(out), *FAST,
                                              "--openai_key", "", "--log_level", "WARNING"]) == EXIT_OK
    return out


def test_full_run_outputs(full_run):
    manifest = json.loads((full_run / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert sorted(manifest["outputs"]) == sorted(os.listdir(full_run))
    assert [s["stage"] for s in manifest["stages"]] == list(STAGES)
    for name in (MESSAGES_FILE, TOPIC_INFO_FILE, CHANNELS_FILE, MODEL_FILE, *VIZ_FILES):
        assert name in manifest["outputs"]
    assert manifest["description"] == "full"
    assert all(v.startswith("sha256:") for v in manifest["input_digests"].values())
    assert CHANNELS in manifest["input_digests"]


def test_manifest_has_no_secrets(tmp_path):
    out = tmp_path / "o"
    assert main(example_flags(out) + FAST + ["--log_level", "WARNING", "--llm_endpoint", "http://127.0.0.1:9/x"]) == 0
    text = (out / MANIFEST_FILE).read_text(encoding="utf-8")
    for secret in ("12345", "hash-abc", "sk-test"):
        assert secret not in text
    cfg = json.loads(text)["config"]
    assert cfg["api_id_present"] and cfg["api_hash_present"] and cfg["openai_key_present"]
    assert json.loads(text)["warnings"]  # unreachable LLM falls back with warnings


def test_viz_off_keeps_csvs(full_run, tmp_path):
    out = tmp_path / "noviz"
    argv = [*WINDOW, "--channels_file", CHANNELS, "--description", "full", "--out_dir", str(out), *FAST,
            "--no-viewer_generate_viz", "--log_level", "WARNING"]
    assert main(argv) == EXIT_OK
    assert not any((out / v).exists() for v in VIZ_FILES)
    assert csv_bytes(out) == csv_bytes(full_run)


def test_stages_in_separate_processes(full_run, tmp_path):
    out = tmp_path / "staged"
    common = ["--channels_file", CHANNELS, "--out_dir", str(out), *FAST, "--log_level", "WARNING"]
    for stage in STAGES:
        extra = WINDOW if stage == "crawl" else []
        proc = subprocess.run([sys.executable, "-m", "tgscope", stage, *extra, *common],
                              capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0, proc.stderr
    assert csv_bytes(out) == csv_bytes(full_run)
    assert (out / MODEL_FILE).read_bytes() == (full_run / MODEL_FILE).read_bytes()


def test_stage_without_input_fails(tmp_path):
    assert main(["metrics", "--out_dir", str(tmp_path), "--log_level", "ERROR"]) == EXIT_PROCESSING


def test_unreachable_provider(tmp_path):
    out = tmp_path / "o"
    argv = [*WINDOW, "--channels_file", CHANNELS, "--provider", "http", "--provider_root", "http://127.0.0.1:9",
            "--max_retries", "0", "--out_dir", str(out), *FAST, "--log_level", "ERROR"]
    assert main(argv) == EXIT_CRAWL
    assert not list(out.glob("*.csv"))
    assert not (out / MANIFEST_FILE).exists()


def test_processing_failure_exit_code(tmp_path):
    cfg = PipelineConfig(start_date=1722470400, end_date=1725148800, out_dir=tmp_path, requests_per_second=100,
                         cluster_min_points=10_000)
    with pytest.raises(StageError) as info:
        run_stages(cfg)
    assert info.value.stage == "topics" and info.value.exit_code == EXIT_PROCESSING
    manifest = json.loads((tmp_path / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert manifest["stages"][-1]["status"] == "failed"
    assert (tmp_path / NLP_FILE).exists()


def test_output_failure_exit_code(full_run, tmp_path):
    out = tmp_path / "o"
    out.mkdir()
    for name in (NLP_FILE, ASSIGNMENTS_FILE, MODEL_FILE):
        (out / name).write_bytes((full_run / name).read_bytes())
    (out / MESSAGES_FILE).mkdir()  # a directory where the CSV should go
    assert main(["report", "--out_dir", str(out), "--log_level", "ERROR"]) == EXIT_OUTPUT


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tgscope", "--help"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and "--start_date" in proc.stdout


def test_log_lines_are_structured(tmp_path, capfd):
    main(["metrics", "--out_dir", str(tmp_path)])
    line = [l for l in capfd.readouterr().err.splitlines() if "stage_failed" in l][0]
    assert line.startswith("ts=") and "Z level=ERROR logger=tgscope.pipeline" in line
    assert Path(tmp_path).is_dir()
