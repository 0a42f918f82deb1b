"""Natural-language topic labels from a chat-completions endpoint."""

from __future__ import annotations

import logging
from typing import Optional

import httpx

from tgscope.topics.model import OUTLIER, TopicModel

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = "You label topics from keywords and sample documents with a short phrase."
OUTLIER_DESCRIPTION = "Outliers"
DEFAULT_LLM_MODEL = "gpt-4o-mini"
OPENAI_CHAT_URL = "https://api.openai.com/v1/chat/completions"


def offline_description(model: TopicModel, topic: int) -> str:
    if topic == OUTLIER:
        return OUTLIER_DESCRIPTION
    return ", ".join(term for term, _ in model.topic_keywords.get(topic, []))


def build_prompt(model: TopicModel, topic: int) -> list[dict]:
    keywords = ", ".join(term for term, _ in model.topic_keywords.get(topic, [])[: model.config.n_keywords])
    docs = "\n".join(d.replace("\n", " ") for d in model.representative_docs.get(topic, [])[:4])
    return [
        {"role": "system", "content": SYSTEM_PROMPT},
        {"role": "user", "content": f"KEYWORDS: {keywords}\nDOCS:\n{docs}"},
    ]


def _ask(client: httpx.Client, endpoint: str, api_key: Optional[str], llm_model: str, messages: list) -> str:
    headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
    resp = client.post(endpoint, json={"model": llm_model, "messages": messages}, headers=headers)
    resp.raise_for_status()
    content = resp.json()["choices"][0]["message"]["content"]
    return " ".join(str(content).split())


def describe_topics(
    model: TopicModel,
    llm_endpoint: Optional[str] = None,
    api_key: Optional[str] = None,
    llm_model: str = DEFAULT_LLM_MODEL,
    client: Optional[httpx.Client] = None,
    timeout: float = 30.0,
) -> tuple[dict[int, str], list[str]]:
    """Describe every topic; store and return the descriptions plus warnings.

    Without an endpoint, or when a request fails, a topic falls back to its
    keywords joined by ", ". The outlier topic is always "Outliers".
    """
    descriptions: dict[int, str] = {}
    warnings: list[str] = []
    own = llm_endpoint is not None and client is None
    if own:
        client = httpx.Client(timeout=timeout)
    try:
        for topic in model.topics:
            if topic == OUTLIER or llm_endpoint is None:
                descriptions[topic] = offline_description(model, topic)
                continue
            try:
                text = _ask(client, llm_endpoint, api_key, llm_model, build_prompt(model, topic))
                descriptions[topic] = text or offline_description(model, topic)
            except (httpx.HTTPError, ValueError, KeyError, IndexError, TypeError) as exc:
                msg = f"topic {topic}: description request failed ({exc.__class__.__name__}); using keywords"
                logger.warning("event=describe_fallback topic=%d error=%s", topic, exc.__class__.__name__)
                warnings.append(msg)
                descriptions[topic] = offline_description(model, topic)
    finally:
        if own:
            client.close()
    model.descriptions = descriptions
    return descriptions, warnings
