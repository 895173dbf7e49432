#!/usr/bin/env python3
"""Regenerates the committed test fixtures under fixtures/ and config/.

Everything is drawn from fixed seeds, so rerunning the script reproduces the
committed files byte for byte.
"""

import json
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
SIZE = 64

CLASS_WORDS = {
    "PER": "singer actor born married interview fans album birthday actress rapper concert wife".split(),
    "LOC": "city river stadium mountain capital tourism museum beach downtown airport island streets".split(),
    "ORG": "company shares ceo market startup corporation headquarters employees brand profits merger stock".split(),
    "NONE": "weather lunch happy today coffee monday sleep tired morning rain dinner weekend".split(),
}
FILLER = "the and of in on with for from this that very just".split()


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_pgm(path, pixels):
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)
    path.write_bytes(b"P5\n%d %d\n255\n" % (data.shape[1], data.shape[0]) + data.tobytes())


def document(rng, cls, length=14):
    vocab = CLASS_WORDS[cls]
    words = list(rng.choice(vocab, size=length - 3)) + list(rng.choice(FILLER, size=3))
    rng.shuffle(words)
    return " ".join(words).capitalize() + ".\n"


# Image classes differ by the orientation of short bright bars: PER small
# squares, LOC horizontal bars, ORG vertical bars, NONE diagonal strokes.
def draw_shape(img, cls, cx, cy):
    if cls == "PER":
        img[cy - 2:cy + 3, cx - 2:cx + 3] = 0.9
    elif cls == "LOC":
        img[cy - 1:cy + 2, cx - 7:cx + 8] = 0.9
    elif cls == "ORG":
        img[cy - 7:cy + 8, cx - 1:cx + 2] = 0.9
    else:
        for d in range(-6, 7):
            img[cy + d - 1:cy + d + 2, cx + d] = 0.9


def pattern_image(rng, cls, count=5):
    img = np.full((SIZE, SIZE), 0.1)
    placed = []
    attempts = 0
    while len(placed) < count and attempts < 500:
        attempts += 1
        cx, cy = rng.integers(12, SIZE - 12, size=2)
        if all(abs(cx - x) > 12 or abs(cy - y) > 12 for x, y in placed):
            placed.append((cx, cy))
            draw_shape(img, cls, cx, cy)
    img += rng.normal(0.0, 0.01, img.shape)
    return np.clip(img, 0.0, 1.0)


def tiny():
    write(FIX / "tiny.conll",
          "# three sentences, ten tokens\n"
          "Obama\tB-person\n"
          "visits\tO\n"
          "Paris\tB-geo-loc\n"
          "\n"
          "Apple\tB-company\n"
          "shares\tO\n"
          "fall\tO\n"
          "!\tO\n"
          "\n"
          "Empire\tB-facility\n"
          "State\tI-facility\n"
          "Building\tI-facility\n"
          "\n")


def mapping():
    table = {
        "person": "PER", "geo-loc": "LOC", "company": "ORG", "facility": "LOC",
        "band": "DROP", "movie": "DROP", "musicartist": "DROP", "other": "DROP",
        "product": "DROP", "sportsteam": "DROP", "tvshow": "DROP",
    }
    write(ROOT / "config" / "ritter_muc3.json", json.dumps(table, indent=2, sort_keys=True) + "\n")


def separable6():
    # One indicator word per label; every sentence uses the same vocabulary.
    sentences = [
        [("alpha", "B-PER"), ("beta", "I-PER"), ("zed", "O")],
        [("zed", "O"), ("gamma", "B-LOC"), ("zed", "O")],
        [("delta", "B-ORG"), ("zed", "O")],
        [("zed", "O"), ("alpha", "B-PER"), ("zed", "O"), ("gamma", "B-LOC")],
        [("delta", "B-ORG"), ("epsilon", "I-ORG"), ("zed", "O")],
        [("gamma", "B-LOC"), ("eta", "I-LOC"), ("zed", "O"), ("alpha", "B-PER")],
    ]
    write(FIX / "separable6.conll", "".join("".join(f"{w}\t{t}\n" for w, t in s) + "\n" for s in sentences))


def lexical_corpus(rng):
    # Entity class is readable from orthography alone: @mentions are PER,
    # #hashtags LOC, ALLCAPS ORG; everything else is lowercase O.
    lines = []
    stems = "bob ana lima rio acme zeta nova kora miro tess".split()
    for _ in range(30):
        tokens = []
        for _ in range(rng.integers(2, 4)):
            tokens.append((str(rng.choice(FILLER + CLASS_WORDS["NONE"])), "O"))
        for cls in rng.permutation(["PER", "LOC", "ORG"])[: rng.integers(1, 3)]:
            stem = str(rng.choice(stems))
            surface = {"PER": "@" + stem, "LOC": "#" + stem, "ORG": stem.upper()}[cls]
            tokens.append((surface, "B-" + cls))
            tokens.append((str(rng.choice(FILLER)), "O"))
        lines.append("".join(f"{w}\t{t}\n" for w, t in tokens) + "\n")
    write(FIX / "lexical.conll", "".join(lines))


def evidence_training(rng):
    text_rows, image_rows = [], []
    for cls in ["PER", "LOC", "ORG", "NONE"]:
        for i in range(6):
            rel = f"docs/{cls.lower()}_{i}.txt"
            write(FIX / "evidence" / rel, document(rng, cls))
            text_rows.append(f"{cls}\t{rel}\n")
        for i in range(8):
            rel = f"images/{cls.lower()}_{i}.pgm"
            write_pgm(FIX / "evidence" / rel, pattern_image(rng, cls))
            image_rows.append(f"{cls}\t{rel}\n")
    write(FIX / "evidence" / "text_train.tsv", "# LABEL<TAB>path\n" + "".join(text_rows))
    write(FIX / "evidence" / "vision_train.tsv", "# LABEL<TAB>path\n" + "".join(image_rows))


def index_and_corpus(rng):
    index = FIX / "index"
    pool = {}
    for cls in ["PER", "LOC", "ORG"]:
        pool[cls] = {"docs": [], "images": []}
        for i in range(4):
            doc = f"docs/{cls.lower()}_{i}.txt"
            img = f"images/{cls.lower()}_{i}.pgm"
            write(index / doc, document(rng, cls))
            write_pgm(index / img, pattern_image(rng, cls))
            pool[cls]["docs"].append(doc)
            pool[cls]["images"].append(img)

    manifest = {
        # Mostly LOC evidence with one PER document mixed in.
        "paris": {"docs": pool["LOC"]["docs"][:3] + pool["PER"]["docs"][:1],
                  "images": pool["LOC"]["images"][:4]},
    }

    # Opaque-id corpus: every token is a fresh id of identical shape, so the
    # lexical features carry no class signal; only retrieved evidence does.
    ids = iter(rng.permutation(np.arange(1000, 10000)))
    fine = {"PER": ["person"], "LOC": ["geo-loc", "facility"], "ORG": ["company"]}
    sentences = []
    for _ in range(40):
        tokens = []
        entities = rng.integers(1, 3)
        classes = rng.choice(["PER", "LOC", "ORG"], size=entities)
        slots = sorted(rng.choice(np.arange(0, 7, 2), size=entities, replace=False))
        length = max(slots) + 2 + int(rng.integers(0, 2))
        for pos in range(length):
            term = f"t{next(ids)}"
            if pos in slots:
                cls = str(classes[slots.index(pos)])
                tag = "B-" + str(rng.choice(fine[cls]))
                offset = int(rng.integers(0, 3))
                manifest[term] = {
                    "docs": [pool[cls]["docs"][(offset + j) % 4] for j in range(3)],
                    "images": [pool[cls]["images"][(offset + j) % 4] for j in range(3)],
                }
            elif rng.random() < 0.1:
                tag = "B-other"  # dropped by the 3-class mapping
            else:
                tag = "O"
            tokens.append((term, tag))
        sentences.append("".join(f"{w}\t{t}\n" for w, t in tokens) + "\n")
    write(FIX / "evidence_corpus.conll", "".join(sentences))
    write(index / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def pipeline_config():
    config = {
        "corpus": "evidence_corpus.conll",
        "tagMapping": "../config/ritter_muc3.json",
        "features": {"lexical": True, "text": True, "vision": True},
        "retrieval": {"index": "index", "kImages": 3, "kDocs": 3},
        "evidence": {"textTrain": "evidence/text_train.tsv", "visionTrain": "evidence/vision_train.tsv"},
        "cv": {"folds": 5},
        "seed": 7,
        "outputDir": "mmner-out",
    }
    write(FIX / "pipeline.json", json.dumps(config, indent=2) + "\n")


def main():
    tiny()
    mapping()
    separable6()
    lexical_corpus(np.random.default_rng(11))
    evidence_training(np.random.default_rng(12))
    index_and_corpus(np.random.default_rng(13))
    pipeline_config()


if __name__ == "__main__":
    main()
