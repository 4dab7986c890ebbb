"""Plain-text corpus to weighted term-document matrix.

Tokens are maximal runs of alphabetic characters after lowercasing, so
numbers and punctuation never enter the vocabulary. Corpus statistics
(tokens, types, hapaxes) are taken on that raw token stream before stopword
removal or stemming. Counts stay sparse; only the final TF-IDF matrix is
dense.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)

_VOWELS = set("aeiou")

#: small built-in default; reproduction runs should supply their own list
DEFAULT_STOPWORDS = frozenset("""
a about above after again all am an and any are as at be because been before
being below between both but by could did do does doing down during each few
for from further had has have having he her here hers him his how i if in
into is it its itself just me more most my no nor not now of off on once only
or other our ours out over own same she should so some such than that the
their theirs them then there these they this those through to too under until
up very was we were what when where which while who whom why will with you
your yours
""".split())


@dataclass
class CorpusStats:
    """Token-level statistics of a corpus, taken before any cleaning."""

    n_documents: int
    n_tokens: int
    n_types: int
    n_hapaxes: int
    type_token_ratio: float
    hapax_share: float
    sparsity_after_weighting: float | None = None
    empty_documents: list[str] = field(default_factory=list)
    skipped_files: list[str] = field(default_factory=list)


@dataclass
class DocumentTermMatrix:
    """Sparse term counts with vocabulary, document ids and corpus stats."""

    vocabulary: list[str]
    doc_ids: list[str]
    counts: sp.csr_matrix            # terms x documents, non-negative ints
    stats: CorpusStats


@dataclass(frozen=True)
class PrepConfig:
    """Preprocessing choices for :func:`build_dtm`."""

    stopwords: frozenset = DEFAULT_STOPWORDS
    lemma_map: dict | None = None
    stem: bool = True


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal alphabetic runs."""
    return _TOKEN_RE.findall(text.lower())


def light_stem(token: str) -> str:
    """Heuristic Porter-style suffix stripper.

    Handles plurals, -ed/-ing, final y, and a handful of common
    derivational endings. Not a dictionary lemmatizer; exact replication of
    externally lemmatized vocabularies is out of scope.
    """
    t = token
    if len(t) <= 3:
        return t
    if t.endswith("sses"):
        t = t[:-2]
    elif t.endswith("ies"):
        t = t[:-3] + "i"
    elif not t.endswith("ss") and t.endswith("s") and any(c in _VOWELS for c in t[:-1]):
        t = t[:-1]
    for suffix in ("ed", "ing"):
        stem = t[: len(t) - len(suffix)]
        if t.endswith(suffix) and len(stem) >= 2 and any(c in _VOWELS for c in stem):
            t = stem
            if t.endswith(("at", "bl", "iz")):
                t += "e"
            elif len(t) >= 2 and t[-1] == t[-2] and t[-1] not in "lsz":
                t = t[:-1]
            break
    if t.endswith("y") and any(c in _VOWELS for c in t[:-1]):
        t = t[:-1] + "i"
    for suffix, replacement in (
        ("ational", "ate"), ("tional", "tion"), ("ization", "ize"),
        ("fulness", "ful"), ("ousness", "ous"), ("iveness", "ive"),
        ("biliti", "ble"), ("iviti", "ive"), ("aliti", "al"),
        ("ation", "ate"), ("ment", ""), ("ness", ""),
    ):
        if t.endswith(suffix) and len(t) - len(suffix) >= 3:
            t = t[: len(t) - len(suffix)] + replacement
            break
    return t


def load_stopwords(path) -> frozenset:
    """One term per line; blank lines ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(w.strip().lower() for w in lines if w.strip())


def load_lemma_map(path) -> dict:
    """TAB-separated `term<TAB>lemma` pairs, one per line."""
    mapping = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"malformed lemma-map line: {line!r}")
        mapping[parts[0].strip().lower()] = parts[1].strip().lower()
    return mapping


def build_dtm(corpus_dir, config: PrepConfig = PrepConfig()) -> DocumentTermMatrix:
    """Read a directory of .txt files into term counts plus corpus stats.

    Document ids are the file names without extension, column order is the
    sorted id order. Unreadable files are skipped with a note in the stats;
    an empty corpus is an error. Stopword removal and the (optional) lemma
    map / stemmer apply after the raw statistics are taken; a user lemma
    wins over the stemmer for terms it covers.
    """
    directory = Path(corpus_dir)
    if not directory.is_dir():
        raise ValueError(f"not a directory: {directory}")
    files = sorted(directory.glob("*.txt"))
    if not files:
        raise ValueError(f"empty corpus: no .txt files in {directory}")

    lemma_map = config.lemma_map or {}
    skipped: list[str] = []
    doc_ids: list[str] = []
    doc_counts: list[dict[str, int]] = []
    type_counts: dict[str, int] = {}
    n_tokens = 0

    for path in files:
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            print(f"warning: skipping {path.name}: {exc}")
            skipped.append(path.name)
            continue
        tokens = tokenize(text)
        n_tokens += len(tokens)
        counts: dict[str, int] = {}
        for tok in tokens:
            type_counts[tok] = type_counts.get(tok, 0) + 1
            if tok in config.stopwords:
                continue
            if tok in lemma_map:
                term = lemma_map[tok]
            elif config.stem:
                term = light_stem(tok)
            else:
                term = tok
            counts[term] = counts.get(term, 0) + 1
        doc_ids.append(path.stem)
        doc_counts.append(counts)

    if not doc_ids:
        raise ValueError(f"empty corpus: no readable documents in {directory}")

    vocabulary = sorted(set().union(*[set(c) for c in doc_counts]))
    index = {term: i for i, term in enumerate(vocabulary)}
    matrix = sp.dok_matrix((len(vocabulary), len(doc_ids)), dtype=np.int64)
    for col, counts in enumerate(doc_counts):
        for term, count in counts.items():
            matrix[index[term], col] = count
    csr = matrix.tocsr()

    n_types = len(type_counts)
    n_hapaxes = sum(1 for c in type_counts.values() if c == 1)
    column_totals = np.asarray(csr.sum(axis=0)).ravel()
    stats = CorpusStats(
        n_documents=len(doc_ids),
        n_tokens=n_tokens,
        n_types=n_types,
        n_hapaxes=n_hapaxes,
        type_token_ratio=n_types / n_tokens if n_tokens else 0.0,
        hapax_share=n_hapaxes / n_types if n_types else 0.0,
        empty_documents=[doc_ids[i] for i in np.flatnonzero(column_totals == 0)],
        skipped_files=skipped,
    )
    return DocumentTermMatrix(vocabulary, doc_ids, csr, stats)


def prune(dtm: DocumentTermMatrix, min_total_frequency: int) -> DocumentTermMatrix:
    """Drop terms whose corpus-wide count is `min_total_frequency` or less."""
    if min_total_frequency < 0:
        raise ValueError("min_total_frequency must be >= 0")
    totals = np.asarray(dtm.counts.sum(axis=1)).ravel()
    keep = np.flatnonzero(totals > min_total_frequency)
    if keep.size == 0:
        raise ValueError(
            f"pruning at threshold {min_total_frequency} empties the vocabulary")
    vocabulary = [dtm.vocabulary[i] for i in keep]
    return DocumentTermMatrix(vocabulary, list(dtm.doc_ids),
                              dtm.counts[keep, :].tocsr(), dtm.stats)


def tfidf(dtm: DocumentTermMatrix) -> np.ndarray:
    """Dense TF-IDF matrix, terms as rows.

    Cell (i, j) is (n_ij / n_.j) * log10(M / m_i) with n_.j the retained
    token total of document j (post-pruning) and m_i the number of
    documents containing term i. Terms present in every document weight 0.
    """
    counts = dtm.counts
    column_totals = np.asarray(counts.sum(axis=0)).ravel().astype(np.float64)
    empty = np.flatnonzero(column_totals == 0)
    if empty.size:
        names = ", ".join(dtm.doc_ids[i] for i in empty)
        raise ValueError(f"document(s) with no retained terms: {names}")
    n_docs = len(dtm.doc_ids)
    doc_freq = np.asarray((counts > 0).sum(axis=1)).ravel().astype(np.float64)
    weights = np.log10(n_docs / doc_freq)
    dense = counts.toarray().astype(np.float64)
    return dense / column_totals[None, :] * weights[:, None]
