#!/usr/bin/env python3
"""Generates data/sample_corpus.txt: ~1 MB of deterministic prose-like text
with punctuation, capitalization, numerals and hyphenated/slashed tokens, one
document per line."""
import random
import sys

SEED = 20161001
TARGET_BYTES = 1_000_000

FUNCTION = ("the of and to a in is that for it as was with be by on not he "
            "this are or his from at which but have an they you were her she "
            "there been one all we their has would when if so no").split()
DOMAIN = ("x-ray universe kilometers nucleons absorbs emits sqrt anode diodes "
          "km/h charge potential field law matter medium galaxy galactic stars "
          "motion moving energy momentum particle electron photon quantum "
          "mass force velocity spin orbit wave frequency light gravity "
          "don't isn't it's").split()


def pseudo_words(rng, n):
    cons = "bcdfghjklmnprstvwz"
    vows = "aeiou"
    out = set()
    while len(out) < n:
        k = rng.randint(2, 4)
        out.add("".join(rng.choice(cons) + rng.choice(vows) for _ in range(k)))
    return sorted(out)


def main(path):
    rng = random.Random(SEED)
    lexicon = DOMAIN + pseudo_words(rng, 6000)
    weights = [1.0 / (i + 1) ** 1.05 for i in range(len(lexicon))]
    written = 0
    lines = []
    while written < TARGET_BYTES:
        sentences = []
        for _ in range(rng.randint(2, 6)):
            n = rng.randint(5, 18)
            words = []
            for _ in range(n):
                r = rng.random()
                if r < 0.35:
                    words.append(rng.choice(FUNCTION))
                elif r < 0.38:
                    words.append("%d.%d" % (rng.randint(0, 99), rng.randint(0, 9)))
                else:
                    words.append(rng.choices(lexicon, weights)[0])
                if rng.random() < 0.06:
                    words[-1] += ","
            words[0] = words[0].capitalize()
            sentences.append(" ".join(words) + rng.choice(".....?!;"))
        line = " ".join(sentences)
        lines.append(line)
        written += len(line) + 1
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/sample_corpus.txt")
