"""Write tests/data/extraction_cases.json.

Each constructed case joins known pieces (URLs, mentions, emojis, plain
words) with spaces, so the expected elements follow from the construction
and not from the extractor. A set of hand-written edge cases comes first.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT = Path(__file__).parents[1] / "tests/data/extraction_cases.json"

URLS = [
    ("https://t.me/canal_alpha", "https://t.me/canal_alpha", "t.me"),
    ("http://www.Example.ORG/path?q=1&b=2", "http://www.Example.ORG/path?q=1&b=2", "example.org"),
    ("https://youtu.be/dQw4w9WgXcQ", "https://youtu.be/dQw4w9WgXcQ", "youtu.be"),
    ("https://noticias.example.com/2024/08/luz.", "https://noticias.example.com/2024/08/luz", "noticias.example.com"),
    ("https://elpais.com/a,", "https://elpais.com/a", "elpais.com"),
    ("http://sub.domain.co.uk:8080/x#frag", "http://sub.domain.co.uk:8080/x#frag", "sub.domain.co.uk"),
    ("https://www.boe.es", "https://www.boe.es", "boe.es"),
    ("https://example.net/path_(x)", "https://example.net/path_(x", "example.net"),
]
MENTIONS = [("@redaccion", "redaccion"), ("@beta_news", "beta_news"), ("@periodista_24", "periodista_24"),
            ("@ABC", "ABC"), ("@x_y_z", "x_y_z")]
EMOJIS = ["🔥", "👍", "🇪🇸", "❤️", "👨‍⚕️", "👍🏽", "1️⃣", "⚽", "📢", "👨‍👩‍👧"]
WORDS = ["hola", "precio", "luz", "café", "ñandú", "gobierno", "¿qué", "tal?", "¡bien!", "2024", "50%", "a@b"]

EDGE = [
    ("see https://t.me/x and http://a.example.org/p @bob 🔥",
     ["https://t.me/x", "http://a.example.org/p"], ["t.me", "a.example.org"], ["🔥"], ["bob"]),
    ("correo: user@example.com", [], [], [], []),
    ("@ab es corto, @abc vale", [], [], [], ["abc"]),
    ("(ver https://example.com/page)", ["https://example.com/page"], ["example.com"], [], []),
    ("https://t.me/@handle", ["https://t.me/@handle"], ["t.me"], [], []),
    ("@" + "a" * 33 + " largo", [], [], [], []),
    ("visita www.example.com", [], [], [], []),
    ("HTTPS://WWW.EXAMPLE.COM/A", ["HTTPS://WWW.EXAMPLE.COM/A"], ["example.com"], [], []),
    ("¡Hola! 👋🏽 ¿Qué tal? 🇦🇷🇪🇸", [], [], ["👋🏽", "🇦🇷", "🇪🇸"], []),
    ("Familia 👨‍👩‍👧‍👦 unida", [], [], ["👨‍👩‍👧‍👦"], []),
    ("texto ☺ sin selector", [], [], [], []),
    ("teclas 1️⃣ y #️⃣", [], [], ["1️⃣", "#️⃣"], []),
    ("http://localhost:8080/status, ok", ["http://localhost:8080/status"], ["localhost"], [], []),
    ("a@bc.de @x_y_z.", [], [], [], ["x_y_z"]),
    ("", [], [], [], []),
]


def constructed(seed: int) -> dict:
    rng = random.Random(seed)
    pieces, urls, domains, emojis, mentions = [], [], [], [], []
    for _ in range(rng.randint(3, 9)):
        kind = rng.choice(["url", "mention", "emoji", "word", "word"])
        if kind == "url":
            text, url, dom = rng.choice(URLS)
            pieces.append(text)
            urls.append(url)
            domains.append(dom)
        elif kind == "mention":
            text, name = rng.choice(MENTIONS)
            pieces.append(text)
            mentions.append(name)
        elif kind == "emoji":
            e = rng.choice(EMOJIS)
            pieces.append(e)
            emojis.append(e)
        else:
            pieces.append(rng.choice(WORDS))
    return {"text": " ".join(pieces), "urls": urls, "domains": domains, "emojis": emojis, "mentions": mentions}


def main() -> None:
    cases = [dict(zip(("text", "urls", "domains", "emojis", "mentions"), e)) for e in EDGE]
    cases += [constructed(seed) for seed in range(50 - len(cases))]
    OUT.write_text(json.dumps(cases, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
