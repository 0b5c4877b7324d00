"""Sentence vectors by sum pooling, cosine similarity, and score normalization.

Each answer becomes the componentwise sum of its token vectors; its one
feature is the cosine similarity against the question's reference-answer
vector, min-max normalized into [0, 1].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import IO, Sequence

from .dataset import Dataset
from .embedding import EmbeddingCache, EmbeddingProvider, tokenize
from .errors import AllTokensOOV, EmptyAnswer, EmptyInput, ZeroVector

log = logging.getLogger(__name__)

ZERO_NORM_EPS = 1e-12

FEATURE_DUMP_HEADER = ("question_id", "student_id", "similarity_raw", "similarity_norm", "grade")


@dataclass(frozen=True)
class SentenceVector:
    """Sum-pooled vector for one answer.

    n_tokens is the number of word vectors that contributed to the sum;
    it is None for vectors reconstituted from the cache, which does not
    persist the count.
    """

    values: tuple[float, ...]
    source: str = ""
    n_tokens: int | None = None

    @property
    def dimension(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class FeatureRow:
    """One (similarity, grade) training pair for one student answer.

    flag marks rows whose similarity could not be computed and was set
    to 0: "empty_answer" (no vectors survived), "zero_vector" (a pooled
    vector had effectively zero norm), or "no_reference_vector" (the
    question's desired answer could not be embedded).
    """

    question_id: str
    student_id: str
    similarity_raw: float
    similarity_norm: float
    target_grade: float
    flag: str | None = None


def sowe(vectors: Sequence[Sequence[float]], source: str = "") -> SentenceVector:
    """Componentwise sum of word vectors.

    Raises:
        EmptyAnswer: no vectors to sum (the caller decides row policy).
    """
    if not vectors:
        raise EmptyAnswer("no word vectors to pool")
    dim = len(vectors[0])
    for vec in vectors:
        if len(vec) != dim:
            raise ValueError(f"mixed dimensions {dim} and {len(vec)} in one answer")
    # fsum per component: exactly rounded, so the sum is independent of
    # vector order and of platform
    values = tuple(math.fsum(vec[i] for vec in vectors) for i in range(dim))
    return SentenceVector(values=values, source=source, n_tokens=len(vectors))


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """dot(a, b) / (|a| |b|), clamped to [-1, 1] to absorb rounding.

    Raises:
        ZeroVector: either norm is below 1e-12 (callers map this to
            similarity 0 with a warning).
    """
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    norm_a = math.sqrt(math.fsum(v * v for v in a))
    norm_b = math.sqrt(math.fsum(v * v for v in b))
    if norm_a < ZERO_NORM_EPS or norm_b < ZERO_NORM_EPS:
        raise ZeroVector("cosine similarity undefined for a zero-norm vector")
    dot = math.fsum(x * y for x, y in zip(a, b))
    return max(-1.0, min(1.0, dot / (norm_a * norm_b)))


def min_max_normalize(scores: Sequence[float]) -> list[float]:
    """Map scores to [0, 1] by (s - min) / (max - min).

    A degenerate population (max == min) maps every score to 0.5.

    Raises:
        EmptyInput: scores is empty.
    """
    if not scores:
        raise EmptyInput("cannot normalize an empty score list")
    lo = min(scores)
    hi = max(scores)
    if hi == lo:
        return [0.5] * len(scores)
    return [(s - lo) / (hi - lo) for s in scores]


@dataclass(frozen=True)
class ScoreNormalization:
    """Min-max map fitted on one score population, applied to another.

    Scores outside the fitted range clamp to [0, 1]; a degenerate fitted
    range maps everything to 0.5. Used to normalize test-split scores
    with statistics estimated from the training split only.
    """

    lo: float
    hi: float

    @classmethod
    def from_scores(cls, scores: Sequence[float]) -> "ScoreNormalization":
        if not scores:
            raise EmptyInput("cannot fit normalization on an empty score list")
        return cls(lo=min(scores), hi=max(scores))

    def apply(self, score: float) -> float:
        if self.hi == self.lo:
            return 0.5
        return max(0.0, min(1.0, (score - self.lo) / (self.hi - self.lo)))


def answer_identity(question_id: str, student_id: str) -> str:
    """Stable cache identity for one student answer."""
    return f"answer:{question_id}:{student_id}"


def desired_identity(question_id: str) -> str:
    """Stable cache identity for a question's reference answer."""
    return f"desired:{question_id}"


def _embed_text(
    text: str,
    identity: str,
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None,
) -> SentenceVector | None:
    """Sentence vector for one text, via cache when possible; None if empty/OOV."""
    if cache is not None:
        hit = cache.get(provider.name, identity)
        if hit is not None:
            return SentenceVector(values=hit, source=identity, n_tokens=None)
    tokens = tokenize(text)
    if not tokens:
        return None
    try:
        word_vectors = provider.embed_tokens(tokens)
    except AllTokensOOV:
        return None
    pooled = sowe(word_vectors, source=identity)
    if cache is not None:
        cache.put(provider.name, identity, pooled.values)
    return pooled


def build_features(
    dataset: Dataset,
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None = None,
) -> list[FeatureRow]:
    """One FeatureRow per answer, in dataset order.

    Answers (or reference answers) that cannot be embedded, and pooled
    vectors with effectively zero norm, yield flagged rows with
    similarity_raw = 0. similarity_norm is min-max normalized over the
    full run's raw scores.

    Provider failures (transport errors etc.) propagate.
    """
    desired_vectors: dict[str, SentenceVector | None] = {}
    for question in dataset.questions:
        desired_vectors[question.question_id] = _embed_text(
            question.desired_answer_text, desired_identity(question.question_id), provider, cache
        )
        if desired_vectors[question.question_id] is None:
            log.warning(
                "reference answer for question %s could not be embedded; "
                "its rows are flagged with similarity 0",
                question.question_id,
            )

    raw_scores: list[float] = []
    partial: list[tuple[str, str, float, str | None]] = []
    for answer in dataset.answers:
        identity = answer_identity(answer.question_id, answer.student_id)
        reference = desired_vectors[answer.question_id]
        flag: str | None = None
        similarity = 0.0
        if reference is None:
            flag = "no_reference_vector"
        else:
            pooled = _embed_text(answer.answer_text, identity, provider, cache)
            if pooled is None:
                flag = "empty_answer"
            else:
                try:
                    similarity = cosine_similarity(pooled.values, reference.values)
                except ZeroVector:
                    log.warning("zero-norm sentence vector for %s; similarity set to 0", identity)
                    flag = "zero_vector"
                    similarity = 0.0
        raw_scores.append(similarity)
        partial.append((answer.question_id, answer.student_id, answer.grade_avg, flag))

    normalized = min_max_normalize(raw_scores)
    return [
        FeatureRow(
            question_id=qid,
            student_id=sid,
            similarity_raw=raw,
            similarity_norm=norm,
            target_grade=grade,
            flag=flag,
        )
        for (qid, sid, grade, flag), raw, norm in zip(partial, raw_scores, normalized)
    ]


def write_feature_dump(rows: Sequence[FeatureRow], fh: IO[str]) -> None:
    """Write the audit TSV: question_id, student_id, raw, norm, grade."""
    fh.write("\t".join(FEATURE_DUMP_HEADER) + "\n")
    for row in rows:
        fh.write(
            f"{row.question_id}\t{row.student_id}\t{row.similarity_raw!r}\t"
            f"{row.similarity_norm!r}\t{row.target_grade!r}\n"
        )


def read_feature_dump(fh: IO[str]) -> list[FeatureRow]:
    """Read rows written by write_feature_dump (flags are not persisted)."""
    header = fh.readline().rstrip("\n")
    if tuple(header.split("\t")) != FEATURE_DUMP_HEADER:
        raise ValueError(f"unexpected feature dump header {header!r}")
    rows = []
    for line in fh:
        line = line.rstrip("\n")
        if not line:
            continue
        qid, sid, raw, norm, grade = line.split("\t")
        rows.append(
            FeatureRow(
                question_id=qid,
                student_id=sid,
                similarity_raw=float(raw),
                similarity_norm=float(norm),
                target_grade=float(grade),
            )
        )
    return rows


def renormalize(rows: Sequence[FeatureRow]) -> list[FeatureRow]:
    """Recompute similarity_norm over the given rows' raw scores."""
    if not rows:
        raise EmptyInput("no feature rows")
    norms = min_max_normalize([r.similarity_raw for r in rows])
    return [replace(row, similarity_norm=norm) for row, norm in zip(rows, norms)]
