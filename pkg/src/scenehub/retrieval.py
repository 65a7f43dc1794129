"""TF-IDF ranking of response documentation against an evolving keyword stream.

The index is built once, in process, and is immutable; ranking is a pure
function so re-ranking on every new keyword is just a recompute over the
cumulative stream. The exact variant is fixed and deliberately simple enough
to verify by hand:

    idf(t)   = ln((1 + N) / (1 + df(t))) + 1
    score(d) = sum_t w_q(t) * tf(t, d) * idf(t)^2 / ||d||

where ``||d||`` is the L2 norm of the document's tf-idf vector (cosine
against the idf-weighted query with the rank-invariant query norm dropped).
No stemming, no stop words.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

DEFAULT_SYNONYM_WEIGHT = 0.5

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str


@dataclass(frozen=True)
class Index:
    doc_count: int
    df: dict[str, int]  # term -> number of docs containing it
    tf: dict[str, dict[str, int]]  # doc_id -> term -> count
    norms: dict[str, float]  # doc_id -> L2 norm of tf-idf vector
    titles: dict[str, str]

    def idf(self, term: str) -> float:
        return math.log((1 + self.doc_count) / (1 + self.df.get(term, 0))) + 1.0


@dataclass(frozen=True)
class RankedDoc:
    doc_id: str
    score: float
    rank: int


def tokenize(text: str) -> list[str]:
    """Lowercase terms split on any non-alphanumeric run; no stemming."""
    return _TOKEN_RE.findall(text.lower())


def index_corpus(docs: list[Document]) -> Index:
    """Build the immutable index; duplicate doc ids are an error."""
    seen: set[str] = set()
    tf: dict[str, dict[str, int]] = {}
    df: Counter[str] = Counter()
    titles: dict[str, str] = {}
    for doc in docs:
        if doc.doc_id in seen:
            raise CorpusError(f"duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        counts = Counter(tokenize(doc.body))
        tf[doc.doc_id] = dict(counts)
        df.update(counts.keys())
        titles[doc.doc_id] = doc.title

    n = len(docs)
    idf = lambda t: math.log((1 + n) / (1 + df[t])) + 1.0  # noqa: E731
    norms = {
        doc_id: math.sqrt(sum((count * idf(t)) ** 2 for t, count in counts.items()))
        for doc_id, counts in tf.items()
    }
    return Index(doc_count=n, df=dict(df), tf=tf, norms=norms, titles=titles)


def load_synonyms(path: str | Path) -> dict[str, list[tuple[str, float]]]:
    """Load ``synonyms.json``: canonical term -> [{"term": ..., "weight": ...}].

    Weight defaults to ``DEFAULT_SYNONYM_WEIGHT``; a term must not map to
    itself with a weight other than 1.
    """
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    synonyms: dict[str, list[tuple[str, float]]] = {}
    for canonical, entries in raw.items():
        expansions = []
        for entry in entries:
            term = entry["term"]
            weight = float(entry.get("weight", DEFAULT_SYNONYM_WEIGHT))
            if not 0.0 < weight <= 1.0:
                raise CorpusError(f"synonym {canonical!r} -> {term!r}: weight {weight} outside (0, 1]")
            if term == canonical and weight != 1.0:
                raise CorpusError(f"synonym {canonical!r} maps to itself with weight {weight}")
            expansions.append((term, weight))
        synonyms[canonical] = expansions
    return synonyms


def expand_query(
    keywords: list[str], synonyms: dict[str, list[tuple[str, float]]] | None = None
) -> dict[str, float]:
    """Weighted term multiset: keywords at 1.0 plus their synonyms; weights add."""
    weights: dict[str, float] = {}
    for kw in keywords:
        weights[kw] = weights.get(kw, 0.0) + 1.0
        for term, w in (synonyms or {}).get(kw, []):
            weights[term] = weights.get(term, 0.0) + w
    return weights


def rank(index: Index, weighted_query: dict[str, float], k: int) -> list[RankedDoc]:
    """Top-k docs by score; ties by doc_id ascending; zero-score docs excluded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores: dict[str, float] = {}
    for term, w_q in weighted_query.items():
        idf = index.idf(term)
        for doc_id, counts in index.tf.items():
            count = counts.get(term)
            if count:
                scores[doc_id] = scores.get(doc_id, 0.0) + w_q * count * idf * idf
    ranked = sorted(
        ((doc_id, s / index.norms[doc_id]) for doc_id, s in scores.items() if s > 0.0),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return [RankedDoc(doc_id, score, i + 1) for i, (doc_id, score) in enumerate(ranked[:k])]


def rerank_on_event(
    index: Index,
    stream: tuple[str, ...],
    new_keywords: list[str],
    synonyms: dict[str, list[tuple[str, float]]] | None = None,
    k: int = 10,
) -> tuple[tuple[str, ...], list[RankedDoc]]:
    """Append keywords to the cumulative stream and recompute the ranking.

    Stateless: the result is identical to one batch :func:`rank` call over
    the whole stream.
    """
    new_stream = stream + tuple(new_keywords)
    return new_stream, rank(index, expand_query(list(new_stream), synonyms), k)


def load_corpus(corpus_dir: str | Path) -> list[Document]:
    """Read a directory of UTF-8 ``.txt`` files; doc_id is the file stem.

    The first non-empty line of each file is its display title.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise CorpusError(f"corpus directory {corpus_dir} does not exist")
    docs = []
    for path in sorted(corpus_dir.glob("*.txt")):
        body = path.read_text(encoding="utf-8")
        if not body.strip():
            raise CorpusError(f"document {path.name} is empty")
        title = next(line.strip() for line in body.splitlines() if line.strip())
        docs.append(Document(doc_id=path.stem, title=title, body=body))
    return docs
