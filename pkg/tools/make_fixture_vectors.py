#!/usr/bin/env python3
"""Regenerate src/prival/data/mini_vectors.vec (deterministic, seed pinned).

The vocabulary covers the synthetic-corpus templates, the segmentation test
sentences, and enough common English function words for the language
heuristic to pass on fixture policies.
"""

from pathlib import Path

import numpy as np

DIM = 32
SEED = 20240517

FUNCTION_WORDS = """
we you your our the a an to of and or for with when while this that it is are
was be been do does did will would can could may might not never no without
only also on in at by from as if then than so such up out about after before
all any each other same more most than too very s t just how what which who
""".split()

VERBS = """
collect store use share gather process access request obtain record retain
transmit sell disclose collects stores uses shares processes accesses keeps
keep hold holds save saves send sends receive receives track tracks
""".split()

CONTACT_WORDS = """
email address phone number contact contacts book name names username
addresses telephone mail
""".split()

LOCATION_WORDS = """
location gps geo latitude longitude place city country position coordinates
region map
""".split()

DEVICE_WORDS = """
device identifier ip imei advertising id serial hardware model devices
identifiers os browser
""".split()

SERVICE_WORDS = """
service services app application account features experience improve provide
support team product products users user love loves building great company
policy privacy legal information data personal third party parties partners
analytics settings time help content updates news blog office coffee weather
music games sports read visit website page section terms conditions rights
consent permission register download install delete remove change contactable
better deliver personalize protect secure security cookies technology
""".split()

LINKAGE_WORDS = """
include includes including example follows these following items list
""".split()


def vocabulary() -> list[str]:
    seen: dict[str, None] = {}
    for group in (
        FUNCTION_WORDS,
        VERBS,
        CONTACT_WORDS,
        LOCATION_WORDS,
        DEVICE_WORDS,
        SERVICE_WORDS,
        LINKAGE_WORDS,
    ):
        for w in group:
            seen.setdefault(w, None)
    return list(seen)


def main() -> None:
    vocab = vocabulary()
    rng = np.random.default_rng(SEED)
    vectors = rng.normal(0.0, 0.25, size=(len(vocab), DIM))
    out = Path(__file__).resolve().parents[1] / "src" / "prival" / "data" / "mini_vectors.vec"
    with out.open("w", encoding="utf-8") as fh:
        fh.write(f"{len(vocab)} {DIM}\n")
        for word, row in zip(vocab, vectors):
            vals = " ".join(f"{v:.6f}" for v in row)
            fh.write(f"{word} {vals}\n")
    print(f"wrote {len(vocab)} x {DIM} vectors to {out}")


if __name__ == "__main__":
    main()
