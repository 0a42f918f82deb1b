"""Regenerate the bundled sample archive under src/tgscope/data/sample_archive.

Three synthetic Spanish-language channels with 200 messages each, spread over
August 2024. Every message is drawn from one of four topic vocabularies, so
the topic pipeline has a known structure to recover. Output is fully
determined by the seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
from datetime import datetime, timezone
from pathlib import Path

TOPICS = {
    "energia": "gas precio factura luz electricidad tarifa consumo eléctrica kilovatio compañía recibo renovables".split(),
    "futbol": "gol equipo liga jugador entrenador estadio temporada afición fichaje delantero portero campeonato".split(),
    "salud": "vacuna hospital médico pacientes sanidad enfermedad tratamiento virus consulta urgencias enfermera clínica".split(),
    "politica": "gobierno elecciones ministro congreso ley votación presidente oposición reforma senado diputados coalición".split(),
}
FILLER = "el la de que en los las un una con por para del se".split()
SENTIMENT = "bueno excelente genial malo terrible caro barato crisis éxito problema vergüenza feliz".split()
NEGATORS = ["no", "nunca"]
EMOJIS = ["🔥", "👍", "😡", "⚽", "💡", "🇪🇸", "❤️", "👨‍⚕️", "📢"]
DOMAINS = ["https://t.me/", "https://www.elpais.com/", "http://noticias.example.org/", "https://youtu.be/"]
MENTIONS = ["redaccion", "canal_alpha", "beta_news", "gamma_info", "periodista_24"]
MEDIA = [
    None, None, None,
    {"kind_hint": "photo", "mime_type": "image/jpeg", "duration_s": None},
    {"kind_hint": "document", "mime_type": "video/mp4", "duration_s": 42.0},
    {"kind_hint": "webpage", "mime_type": None, "duration_s": None},
    {"kind_hint": "voice", "mime_type": "audio/ogg", "duration_s": 13.5},
    {"kind_hint": "document", "mime_type": "application/pdf", "duration_s": None},
    {"kind_hint": "poll", "mime_type": None, "duration_s": None},
    {"kind_hint": "sticker", "mime_type": "image/webp", "duration_s": None},
]
CHANNELS = [
    {
        "channel_id": 1001, "username": "alpha", "title": "Canal Alpha", "subscribers": 1200,
        "created_at": "2019-03-14T09:30:00+00:00", "description": "Noticias de energía y política.",
        "pinned_message_ids": [1, 17],
        "similar_channels": [
            {"id": 1002, "title": "Beta Noticias", "username": "beta"},
            {"id": 1003, "title": "Gamma Info", "username": "gamma"},
        ],
        "topics": ["energia", "politica", "salud", "futbol"], "weights": [4, 3, 2, 1],
    },
    {
        "channel_id": 1002, "username": "beta", "title": "Beta Noticias", "subscribers": 850,
        "created_at": "2020-11-02T18:00:00+00:00", "description": "Deportes y actualidad.",
        "pinned_message_ids": [5],
        "similar_channels": [
            {"id": 1001, "title": "Canal Alpha", "username": "alpha"},
            {"id": 1004, "title": "Delta Directo", "username": "delta"},
        ],
        "topics": ["futbol", "politica", "energia", "salud"], "weights": [4, 3, 2, 1],
    },
    {
        "channel_id": 1003, "username": "gamma", "title": "Gamma Info", "subscribers": 430,
        "created_at": "2021-06-21T12:00:00+00:00", "description": "Salud pública.",
        "pinned_message_ids": [],
        "similar_channels": [],
        "topics": ["salud", "energia", "futbol", "politica"], "weights": [4, 2, 2, 2],
    },
]
START = int(datetime(2024, 8, 1, tzinfo=timezone.utc).timestamp())
END = int(datetime(2024, 9, 1, tzinfo=timezone.utc).timestamp())


def sentence(rng: random.Random, words: list[str]) -> str:
    text = " ".join(words)
    return text[0].upper() + text[1:] + rng.choice([".", ".", ".", "!", "?"])


def message_text(rng: random.Random, topic: str) -> str:
    if rng.random() < 0.03:
        return ""
    vocab = TOPICS[topic]
    sentences = []
    for _ in range(rng.choice([2, 2, 3])):
        words = [rng.choice(vocab) for _ in range(rng.randint(4, 7))]
        for _ in range(rng.randint(1, 2)):
            words.insert(rng.randrange(len(words) + 1), rng.choice(FILLER))
        if rng.random() < 0.25:
            pos = rng.randrange(len(words) + 1)
            words.insert(pos, rng.choice(SENTIMENT))
            if rng.random() < 0.3:
                words.insert(pos, rng.choice(NEGATORS))
        sentences.append(sentence(rng, words))
    text = " ".join(sentences)
    if rng.random() < 0.3:
        text += " " + rng.choice(DOMAINS) + rng.choice(["noticia", "a/123", "video?id=7", "ultima-hora"])
    if rng.random() < 0.2:
        text += " @" + rng.choice(MENTIONS)
    if rng.random() < 0.4:
        text += " " + rng.choice(EMOJIS)
    return text


def channel_messages(rng: random.Random, ch: dict, n: int) -> list[dict]:
    dates = sorted(rng.randrange(START, END) for _ in range(n))
    out = []
    for i, date in enumerate(dates, 1):
        topic = rng.choices(ch["topics"], weights=ch["weights"])[0]
        forwards = rng.randint(4, 20)
        if rng.random() < 0.03:
            forwards *= rng.randint(6, 10)
        views = rng.randint(300, 3000) if rng.random() > 0.02 else None
        reactions = [
            {"emoji": e, "count": rng.randint(1, 40)}
            for e in rng.sample(["👍", "❤", "🔥", "😡", "😂"], rng.randint(0, 3))
        ]
        media = rng.choice(MEDIA)
        text = message_text(rng, topic)
        if not text and media is None:
            media = MEDIA[3]
        out.append(
            {
                "message_id": i,
                "channel_id": ch["channel_id"],
                "date": datetime.fromtimestamp(date, tz=timezone.utc).isoformat(),
                "text": text,
                "views": views,
                "forwards": forwards,
                "replies_count": rng.randint(0, 12),
                "reactions": reactions,
                "media": media,
                "fwd_from_channel_id": rng.choice([1002, 1003, 2001]) if rng.random() < 0.1 else None,
                "edit_date": None,
            }
        )
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).parents[1] / "src/tgscope/data/sample_archive")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--per-channel", type=int, default=200)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    details = [{k: v for k, v in ch.items() if k not in ("topics", "weights")} for ch in CHANNELS]
    (args.out / "channels.json").write_text(json.dumps(details, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    for ch in CHANNELS:
        with open(args.out / f"messages_{ch['channel_id']}.jsonl", "w", encoding="utf-8") as fh:
            for m in channel_messages(rng, ch, args.per_channel):
                fh.write(json.dumps(m, ensure_ascii=False) + "\n")
    with open(args.out / "channels_sample.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "channel_name", "url", "cluster", "user"])
        for ch in CHANNELS:
            w.writerow(["", ch["title"], f"https://t.me/{ch['username']}", "seed", ch["username"]])


if __name__ == "__main__":
    main()
