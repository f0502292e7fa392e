#!/usr/bin/env python3
"""Regenerates the test fixtures under tests/fixtures/.

desk/      20 queries x 100 candidates over five synthetic topics, d=50 vectors.
poolbias/  a small constructed collection: every candidate holds each query
           term exactly once, near-synonyms (cosine exactly 0.9) vary per
           document, and one query has an unjudged duplicate of its relevant
           passage ranked above it by the baseline.

Output is deterministic; rerun after editing and commit the files.
"""

import json
import math
import os
import re
from collections import Counter

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))

MODEL = {
    "kernels": [
        {"mu": 1.0, "sigma": 0.001, "weight": 0.6},
        {"mu": 0.9, "sigma": 0.1, "weight": 1.2},
        {"mu": 0.7, "sigma": 0.1, "weight": 0.9},
        {"mu": 0.5, "sigma": 0.1, "weight": 0.4},
        {"mu": 0.3, "sigma": 0.1, "weight": 0.15},
        {"mu": 0.1, "sigma": 0.1, "weight": 0.05},
        {"mu": -0.1, "sigma": 0.1, "weight": -0.02},
        {"mu": -0.3, "sigma": 0.1, "weight": -0.05},
        {"mu": -0.5, "sigma": 0.1, "weight": -0.05},
        {"mu": -0.7, "sigma": 0.1, "weight": -0.02},
        {"mu": -0.9, "sigma": 0.1, "weight": 0.0},
    ],
    "bias": 0.25,
}

STOP = ["what", "is", "the", "of", "a", "in", "how", "to", "and", "for", "does", "are", "with", "on"]

TOPICS = {
    "retrieval": ["bm25", "ranking", "retrieval", "query", "index", "relevance", "document", "search",
                  "passage", "neural", "reranking", "kernel", "embedding", "corpus"],
    "cooking": ["recipe", "bake", "oven", "flour", "sugar", "butter", "dough", "bread",
                "roast", "garlic", "sauce", "simmer", "pasta", "yeast"],
    "astronomy": ["planet", "orbit", "telescope", "galaxy", "nebula", "comet", "star", "jupiter",
                  "saturn", "moon", "eclipse", "supernova", "asteroid", "gravity"],
    "finance": ["stock", "bond", "interest", "inflation", "dividend", "market", "portfolio", "equity",
                "loan", "mortgage", "credit", "bank", "yield", "currency"],
    "medicine": ["vaccine", "fever", "virus", "antibiotic", "symptom", "dose", "infection", "immune",
                 "clinic", "diagnosis", "therapy", "allergy", "insulin", "blood"],
}

FILLER = ["people", "often", "use", "many", "time", "year", "new", "good", "first", "part",
          "work", "day", "example", "common", "important", "different", "number", "system",
          "large", "small", "world", "way", "place", "result", "level"]

# Words present in texts but absent from the embedding table.
OOV = ["zyxt", "qorvane", "blimtastic"]

QUERIES = {
    "retrieval": ["what is bm25", "bm25 ranking formula", "neural reranking kernel", "passage retrieval index"],
    "cooking": ["how to bake bread", "garlic pasta sauce", "yeast dough flour", "roast in the oven"],
    "astronomy": ["jupiter moon orbit", "what is a supernova", "telescope galaxy nebula", "comet asteroid gravity"],
    "finance": ["bond yield inflation", "stock dividend portfolio", "mortgage loan interest", "currency market bank"],
    "medicine": ["vaccine immune virus", "fever symptom infection", "insulin dose blood"],
}
EXTRA_QUERY = "what is it"  # every token is a stopword, hence out of vocabulary


def tokenize(text):
    return [t for t in re.split(r"[^0-9a-z]+", text.lower()) if t]


def unit(v):
    return v / np.linalg.norm(v)


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def write_model(directory):
    with open(os.path.join(directory, "model.json"), "w", encoding="utf-8") as f:
        json.dump(MODEL, f, indent=2)
        f.write("\n")


def bm25_rank(queries, docs, k1=0.9, b=0.4):
    tokenized = {d: tokenize(t) for d, t in docs.items()}
    n = len(docs)
    avgdl = sum(len(t) for t in tokenized.values()) / n
    df = Counter()
    for toks in tokenized.values():
        df.update(set(toks))
    run = {}
    for qid, qtext in queries.items():
        scores = []
        for did, toks in tokenized.items():
            tf = Counter(toks)
            s = 0.0
            for term in tokenize(qtext):
                if tf[term] == 0:
                    continue
                idf = math.log((n - df[term] + 0.5) / (df[term] + 0.5) + 1.0)
                s += idf * tf[term] * (k1 + 1) / (tf[term] + k1 * (1 - b + b * len(toks) / avgdl))
            scores.append((round(s, 4), did))
        scores.sort(key=lambda x: (-x[0], x[1]))
        run[qid] = scores
    return run


def make_desk():
    rng = np.random.default_rng(20240419)
    out = os.path.join(HERE, "desk")
    os.makedirs(out, exist_ok=True)
    dim = 50

    vectors = {}
    for topic, words in TOPICS.items():
        center = unit(rng.normal(size=dim))
        for w in words:
            vectors[w] = center + 0.45 * unit(rng.normal(size=dim))
    for w in FILLER:
        vectors[w] = rng.normal(size=dim)
    # Vocabulary that never occurs in the texts.
    for i in range(40):
        vectors[f"unused{i:02d}"] = rng.normal(size=dim)
    # Raw (unnormalized) components, like a real word-vector dump.
    emb_lines = [f"{len(vectors)} {dim}"]
    for w in sorted(vectors):
        scale = rng.uniform(0.5, 3.0)
        emb_lines.append(w + " " + " ".join(f"{x:.6f}" for x in vectors[w] * scale))
    write_lines(os.path.join(out, "embeddings.txt"), emb_lines)

    topics = list(TOPICS)
    docs = {}
    doc_topic = {}
    for i in range(100):
        topic = topics[i % len(topics)]
        words = TOPICS[topic]
        length = int(rng.integers(20, 55))
        toks = []
        for _ in range(length):
            r = rng.random()
            if r < 0.35:
                toks.append(words[int(rng.integers(len(words)))])
            elif r < 0.45:
                other = TOPICS[topics[int(rng.integers(len(topics)))]]
                toks.append(other[int(rng.integers(len(other)))])
            elif r < 0.75:
                toks.append(STOP[int(rng.integers(len(STOP)))])
            elif r < 0.98:
                toks.append(FILLER[int(rng.integers(len(FILLER)))])
            else:
                toks.append(OOV[int(rng.integers(len(OOV)))])
        text = " ".join(toks)
        text = text[0].upper() + text[1:] + "."
        did = f"D{i + 1:03d}"
        docs[did] = text
        doc_topic[did] = topic

    queries = {}
    query_topic = {}
    n = 1
    for topic, qs in QUERIES.items():
        for q in qs:
            qid = f"Q{n:02d}"
            queries[qid] = q
            query_topic[qid] = topic
            n += 1
    queries[f"Q{n:02d}"] = EXTRA_QUERY
    query_topic[f"Q{n:02d}"] = None
    assert len(queries) == 20

    run = bm25_rank(queries, docs)
    run_lines, qrel_lines = [], []
    for qid in sorted(queries):
        for rank, (score, did) in enumerate(run[qid], start=1):
            run_lines.append(f"{qid} Q0 {did} {rank} {score:.4f} bm25")
        topic = query_topic[qid]
        if topic is None:
            continue  # unjudged query
        qterms = set(tokenize(queries[qid])) - set(STOP)
        overlap = sorted(
            ((sum(1 for t in tokenize(docs[d]) if t in qterms), d) for d in docs if doc_topic[d] == topic),
            key=lambda x: (-x[0], x[1]))
        judged = []
        if qid == "Q07":
            # Judged, but nothing relevant: first-relevant rank is unfound.
            judged = [(overlap[0][1], 0), (overlap[1][1], 0)]
        else:
            judged = [(overlap[0][1], 2), (overlap[2][1], 1), (overlap[-1][1], 0)]
        for did, grade in sorted(judged):
            qrel_lines.append(f"{qid} 0 {did} {grade}")

    write_lines(os.path.join(out, "queries.tsv"), [f"{q}\t{queries[q]}" for q in sorted(queries)])
    write_lines(os.path.join(out, "docs.tsv"), [f"{d}\t{docs[d]}" for d in sorted(docs)])
    write_lines(os.path.join(out, "run.bm25.txt"), run_lines)
    write_lines(os.path.join(out, "qrels.txt"), qrel_lines)
    write_model(out)
    write_lines(os.path.join(out, "titles.tsv"), ["c0\tranking models"])


def make_poolbias():
    out = os.path.join(HERE, "poolbias")
    os.makedirs(out, exist_ok=True)
    base = ["bm25", "kernel", "pooling", "embedding", "passage", "ranking", "query", "judgment"]
    synonyms = ["okapi", "gaussian", "aggregation", "vector", "paragraph", "ordering", "question", "label"]
    filler = ["model", "score", "paper", "result", "table", "figure", "method", "data"]
    dim = len(base) + len(synonyms) + len(filler)
    vectors = {}
    s = math.sqrt(1.0 - 0.81)
    for i, w in enumerate(base):
        v = [0.0] * dim
        v[i] = 1.0
        vectors[w] = v
    for i, w in enumerate(synonyms):
        v = [0.0] * dim
        v[i] = 0.9
        v[len(base) + i] = s
        vectors[w] = v
    for i, w in enumerate(filler):
        v = [0.0] * dim
        v[len(base) + len(synonyms) + i] = 1.0
        vectors[w] = v
    write_lines(os.path.join(out, "embeddings.txt"),
                [w + " " + " ".join(repr(x) for x in vectors[w]) for w in sorted(vectors)])

    syn = dict(zip(base, synonyms))
    queries = {
        "P1": "bm25 kernel",
        "P2": "pooling embedding",
        "P3": "passage ranking",
        "P4": "query judgment",
    }
    docs = {}
    run_lines, qrel_lines = [], []
    rng = np.random.default_rng(7)
    for qid, qtext in queries.items():
        terms = qtext.split()
        cands = []
        for c in range(6):
            toks = list(terms)
            for t in terms:
                toks += [syn[t]] * int((c * 7 + len(t)) % 4)
            toks += [filler[int(rng.integers(len(filler)))] for _ in range(3 + c)]
            order = rng.permutation(len(toks))
            did = f"{qid}D{c + 1}"
            docs[did] = " ".join(toks[j] for j in order)
            cands.append(did)
        if qid == "P3":
            # Unjudged duplicate of the relevant passage, ahead of it in the baseline.
            dup = f"{qid}DUP"
            docs[dup] = docs[f"{qid}D4"]
            cands.insert(2, dup)
        for rank, did in enumerate(cands, start=1):
            run_lines.append(f"{qid} Q0 {did} {rank} {20.0 - rank:.1f} bm25")
        for did in cands:
            if did.endswith("DUP"):
                continue
            grade = 1 if did.endswith("D4") else 0
            qrel_lines.append(f"{qid} 0 {did} {grade}")

    write_lines(os.path.join(out, "queries.tsv"), [f"{q}\t{queries[q]}" for q in sorted(queries)])
    write_lines(os.path.join(out, "docs.tsv"), [f"{d}\t{docs[d]}" for d in sorted(docs)])
    write_lines(os.path.join(out, "run.bm25.txt"), run_lines)
    write_lines(os.path.join(out, "qrels.txt"), qrel_lines)
    write_model(out)


if __name__ == "__main__":
    make_desk()
    make_poolbias()
