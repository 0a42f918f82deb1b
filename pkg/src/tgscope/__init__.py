"""Collect, clean, enrich and topic-model public channel messages."""

__version__ = "0.1.0"
