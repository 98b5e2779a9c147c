#!/usr/bin/env python3
"""Regenerates features_golden.jsonl from tweets.csv/bars.csv.

Deliberately independent of the C++ implementation: plain-Python prefix
sums, bucket arithmetic and lexicon lookups, so the golden file acts as an
oracle for the feature pipeline. Texts in the fixture avoid casing,
punctuation, boosters and negators, which keeps the compound sentiment
score at its closed form s / sqrt(s^2 + 15).
"""
import csv
import json
import math
import os
from datetime import datetime, timedelta, timezone

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "..", "..", "data")

ROW_TIMES = ["16-18", "18-20", "20-22", "22-24", "0-2", "2-4",
             "4-6", "6-8", "8-10", "10-12", "12-14", "14-16"]
COLUMNS = ["writer_score", "n_comments", "n_likes", "n_retweets", "afinn", "vader",
           "polarity_sum", "tweet_volume", "open", "high", "low", "close",
           "trade_volume", "lag1", "lag2", "lag3"]
ENGAGEMENT_MIN = 40
POLARITY_THRESHOLD = 0.05


def load_lexicon(name, cast):
    out = {}
    with open(os.path.join(DATA, name), encoding="utf-8") as f:
        for line in f:
            word, _, value = line.rstrip("\n").partition("\t")
            if value:
                out[word] = cast(value)
    return out


def load_stopwords():
    words = set()
    with open(os.path.join(DATA, "stopwords_en.txt"), encoding="utf-8") as f:
        for line in f:
            cleaned = "".join(c for c in line.strip().lower() if c.isalnum())
            if cleaned:
                words.add(cleaned)
    return words


def tokens_of(text, stopwords):
    out = []
    for chunk in text.lower().split():
        if chunk.startswith(("http://", "https://", "www.")):
            continue
        if chunk[0] in "@#":
            chunk = chunk[1:]
        cleaned = "".join(c for c in chunk if c.isascii() and c.isalnum())
        if cleaned and cleaned not in stopwords:
            out.append(cleaned)
    return out


def vader_compound(text, lexicon):
    s = 0.0
    for raw in text.split():
        token = raw.strip("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")
        if len(token) <= 2:
            token = raw
        s += lexicon.get(token.lower(), 0.0)
    if s == 0.0:
        return 0.0
    return s / math.sqrt(s * s + 15.0)


def main():
    afinn = load_lexicon("afinn_en.txt", int)
    vader = load_lexicon("vader_lexicon_en.txt", float)
    stopwords = load_stopwords()

    with open(os.path.join(HERE, "tweets.csv"), encoding="utf-8") as f:
        tweets = [row for row in csv.DictReader(f)]
    for t in tweets:
        t["ts"] = datetime.strptime(t["timestamp"], "%Y-%m-%dT%H:%M:%SZ").replace(
            tzinfo=timezone.utc)
        t["te"] = int(t["likes"]) + int(t["comments"]) + int(t["retweets"])
    tweets.sort(key=lambda t: t["ts"])
    tweets = [t for t in tweets if t["te"] >= ENGAGEMENT_MIN]

    # exclusive prefix sums of total engagement per author
    history = {}
    for t in tweets:
        t["writer_score"] = sum(e for ts, e in history.get(t["author_id"], [])
                                if ts < t["ts"])
        history.setdefault(t["author_id"], []).append((t["ts"], t["te"]))

    for t in tweets:
        toks = tokens_of(t["text"], stopwords)
        t["afinn"] = sum(afinn.get(w, 0) for w in toks)
        t["vader"] = vader_compound(t["text"], vader)
        if t["vader"] >= POLARITY_THRESHOLD:
            t["polarity"] = 1
        elif t["vader"] <= -POLARITY_THRESHOLD:
            t["polarity"] = -1
        else:
            t["polarity"] = 0

    with open(os.path.join(HERE, "bars.csv"), encoding="utf-8") as f:
        bars = [row for row in csv.DictReader(f)]
    for b in bars:
        b["day"] = datetime.strptime(b["date"], "%Y-%m-%d").replace(tzinfo=timezone.utc)
    labels = [1 if float(b["close"]) > float(b["open"]) else 0 for b in bars]

    lines = []
    for i in range(3, len(bars)):
        win_start = bars[i - 1]["day"] + timedelta(hours=16)
        win_end = bars[i]["day"] + timedelta(hours=16)
        rows = [[0.0] * 8 for _ in range(12)]
        for t in tweets:
            if not (win_start <= t["ts"] < win_end):
                continue
            r = ((t["ts"].hour - 16) % 24) // 2
            rows[r][0] += t["writer_score"]
            rows[r][1] += int(t["comments"])
            rows[r][2] += int(t["likes"])
            rows[r][3] += int(t["retweets"])
            rows[r][4] += t["afinn"]
            rows[r][5] += t["vader"]
            rows[r][6] += t["polarity"]
            rows[r][7] += 1
        prior = bars[i - 1]
        price_row = [float(prior["open"]), float(prior["high"]), float(prior["low"]),
                     float(prior["close"]), float(prior["volume"]),
                     float(labels[i - 1]), float(labels[i - 2]), float(labels[i - 3])]
        values = [[float(v) for v in rows[r]] + price_row for r in range(12)]
        record = {
            "day": bars[i]["date"],
            "label": labels[i],
            "row_times": ROW_TIMES,
            "column_names": COLUMNS,
            "values": values,
        }
        lines.append(json.dumps(record, separators=(",", ":"), ensure_ascii=False))

    out_path = os.path.join(HERE, "features_golden.jsonl")
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {out_path} ({len(lines)} instances)")


if __name__ == "__main__":
    main()
