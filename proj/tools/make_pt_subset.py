#!/usr/bin/env python3
"""Regenerate data/pt_br_5k.dict from the gruut Portuguese lexicon.

The lexicon ships inside the gruut-lang-pt package (MIT license):
    pip download gruut-lang-pt --no-deps -d /tmp/gruut && tar xzf /tmp/gruut/*.tar.gz -C /tmp/gruut
    python3 tools/make_pt_subset.py /tmp/gruut/gruut_lang_pt-2.0.1/gruut_lang_pt/lexicon.db

Selection: first pronunciation of every word made only of letters with at
least two characters, shuffled with random.Random(seed), first N kept.
"""
import argparse
import random
import sqlite3


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("lexicon_db")
    ap.add_argument("--out", default="data/pt_br_5k.dict")
    ap.add_argument("--size", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    conn = sqlite3.connect(args.lexicon_db)
    rows = conn.execute(
        "SELECT word, phonemes FROM word_phonemes ORDER BY id").fetchall()
    prons = {}
    for word, phonemes in rows:
        if word not in prons:
            prons[word] = phonemes
    words = [w for w in prons if w.isalpha() and len(w) >= 2]
    random.Random(args.seed).shuffle(words)
    words = words[: args.size]

    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(";;; Brazilian Portuguese pronunciation lexicon, %d-entry subset.\n" % len(words))
        f.write(";;; Source: gruut-lang-pt 2.0.1 lexicon.db (https://github.com/rhasspy/gruut), MIT license.\n")
        f.write(";;; Generated by tools/make_pt_subset.py --size %d --seed %d\n" % (args.size, args.seed))
        for w in words:
            f.write("%s %s\n" % (w, " ".join(prons[w].split())))


if __name__ == "__main__":
    main()
