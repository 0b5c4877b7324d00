"""Parse, validate, and summarize question/answer/grade data.

Canonical ingest format is a UTF-8, LF-terminated TSV with header

    id	question	desired_answer	student_answer	grade_1	grade_2	grade_avg

one student answer per row. The question text and desired answer are
repeated on every row of that question; the first occurrence defines the
question. Grades are on the 0-5 scale unless the caller asks for 0-10
exam grades to be rescaled at ingest.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import BinaryIO

from .errors import (
    DanglingReference,
    EmptyDataset,
    EncodingError,
    MalformedRow,
    OutOfRange,
)

TSV_HEADER = (
    "id",
    "question",
    "desired_answer",
    "student_answer",
    "grade_1",
    "grade_2",
    "grade_avg",
)

GRADE_MIN = 0.0
GRADE_MAX = 5.0

# grade_avg must equal (grade_1 + grade_2) / 2 to this tolerance
AVG_TOLERANCE = 1e-9

HISTOGRAM_BINS = 11
HISTOGRAM_BIN_WIDTH = 0.5


@dataclass(frozen=True)
class Question:
    """One question with its instructor reference answer."""

    question_id: str
    question_text: str
    desired_answer_text: str


@dataclass(frozen=True)
class AnswerRecord:
    """One student answer with its two evaluator grades and their average.

    grade_1/grade_2 may be None for rows that arrive pre-averaged only;
    grade_avg is always present.
    """

    question_id: str
    student_id: str
    answer_text: str
    grade_1: float | None
    grade_2: float | None
    grade_avg: float


@dataclass(frozen=True)
class Dataset:
    """Questions plus answers, in file order. Immutable after parse."""

    questions: tuple[Question, ...]
    answers: tuple[AnswerRecord, ...]

    def question_by_id(self, question_id: str) -> Question:
        try:
            return self._index[question_id]
        except KeyError:
            raise DanglingReference(question_id) from None

    @property
    def _index(self) -> dict[str, Question]:
        idx = getattr(self, "_index_cache", None)
        if idx is None:
            idx = {q.question_id: q for q in self.questions}
            object.__setattr__(self, "_index_cache", idx)
        return idx

    def validate(self) -> None:
        """Check referential integrity: every answer resolves to a question."""
        ids = {q.question_id for q in self.questions}
        for answer in self.answers:
            if answer.question_id not in ids:
                raise DanglingReference(answer.question_id)


@dataclass(frozen=True)
class DatasetStats:
    """Counts, central tendency, and a grade histogram.

    grade_histogram has 11 bins of width 0.5 covering [0, 5.5); the last
    bin holds grades equal to 5. Bin counts sum to n_answers.
    """

    n_questions: int
    n_answers: int
    mean_grade: float
    median_grade: float
    grade_histogram: tuple[int, ...]


def normalize_exam_grade(raw: float) -> float:
    """Rescale a 0-10 exam grade to the 0-5 scale (raw/2 exactly).

    Raises:
        OutOfRange: if raw is outside [0, 10].
    """
    if not 0.0 <= raw <= 10.0:
        raise OutOfRange(f"exam grade {raw!r} outside [0, 10]")
    return raw / 2.0


def average_grade(g1: float, g2: float) -> float:
    """Arithmetic mean of two evaluator grades, both on [0, 5].

    Raises:
        OutOfRange: if either grade is outside [0, 5].
    """
    for g in (g1, g2):
        if not GRADE_MIN <= g <= GRADE_MAX:
            raise OutOfRange(f"grade {g!r} outside [0, 5]")
    return (g1 + g2) / 2.0


def _parse_grade(field: str, line: int, column: str) -> float | None:
    field = field.strip()
    if field == "":
        return None
    try:
        value = float(field)
    except ValueError:
        raise MalformedRow(line, f"unparseable {column} {field!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise MalformedRow(line, f"non-finite {column} {field!r}")
    return value


def parse_dataset(source: bytes | BinaryIO, normalize_exam_grades: bool = False) -> Dataset:
    """Parse the canonical TSV layout into a Dataset.

    Student ids are not carried by the file; they are synthesized as
    "s1", "s2", ... in file order within each question.

    Args:
        source: raw bytes or a binary stream holding the TSV.
        normalize_exam_grades: rescale all grade columns from 0-10 to 0-5
            at ingest (for raw exam exports; cleaned data is ingested as-is).

    Returns:
        A Dataset with row order preserved.

    Raises:
        EncodingError: the bytes are not valid UTF-8.
        MalformedRow: wrong column count, bad header, unparseable or
            out-of-range grade, empty ids, or inconsistent grade_avg.
    """
    data = source if isinstance(source, bytes) else source.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"input is not valid UTF-8: {exc}") from None

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedRow(1, "missing header row")

    header = tuple(lines[0].rstrip("\r").split("\t"))
    if header != TSV_HEADER:
        raise MalformedRow(1, f"bad header {header!r}, expected {TSV_HEADER!r}")

    grade_hi = 10.0 if normalize_exam_grades else GRADE_MAX

    questions: list[Question] = []
    seen: dict[str, Question] = {}
    answers: list[AnswerRecord] = []
    per_question_count: dict[str, int] = {}

    for offset, raw_line in enumerate(lines[1:], start=2):
        fields = raw_line.rstrip("\r").split("\t")
        if len(fields) != len(TSV_HEADER):
            raise MalformedRow(offset, f"expected {len(TSV_HEADER)} columns, got {len(fields)}")
        qid, qtext, desired, answer_text, f1, f2, favg = fields
        if qid == "":
            raise MalformedRow(offset, "empty question id")

        if qid not in seen:
            if desired == "":
                raise MalformedRow(offset, "empty desired answer")
            question = Question(question_id=qid, question_text=qtext, desired_answer_text=desired)
            seen[qid] = question
            questions.append(question)

        g1 = _parse_grade(f1, offset, "grade_1")
        g2 = _parse_grade(f2, offset, "grade_2")
        gavg = _parse_grade(favg, offset, "grade_avg")
        if gavg is None:
            raise MalformedRow(offset, "missing grade_avg")
        for column, value in (("grade_1", g1), ("grade_2", g2), ("grade_avg", gavg)):
            if value is not None and not 0.0 <= value <= grade_hi:
                raise MalformedRow(offset, f"{column} {value!r} outside [0, {grade_hi:g}]")
        if normalize_exam_grades:
            g1 = None if g1 is None else normalize_exam_grade(g1)
            g2 = None if g2 is None else normalize_exam_grade(g2)
            gavg = normalize_exam_grade(gavg)
        if g1 is not None and g2 is not None and abs(gavg - (g1 + g2) / 2.0) > AVG_TOLERANCE:
            raise MalformedRow(offset, f"grade_avg {gavg!r} is not the mean of {g1!r} and {g2!r}")

        ordinal = per_question_count.get(qid, 0) + 1
        per_question_count[qid] = ordinal
        answers.append(
            AnswerRecord(
                question_id=qid,
                student_id=f"s{ordinal}",
                answer_text=answer_text,
                grade_1=g1,
                grade_2=g2,
                grade_avg=gavg,
            )
        )

    dataset = Dataset(questions=tuple(questions), answers=tuple(answers))
    dataset.validate()
    return dataset


def _format_grade(value: float | None) -> str:
    return "" if value is None else repr(value)


def serialize_dataset(dataset: Dataset) -> bytes:
    """Write a Dataset back out in the canonical TSV layout.

    parse_dataset(serialize_dataset(d)) reproduces d's records
    field-for-field (float fields use shortest round-trip formatting).
    """
    out = ["\t".join(TSV_HEADER)]
    for answer in dataset.answers:
        question = dataset.question_by_id(answer.question_id)
        out.append(
            "\t".join(
                (
                    question.question_id,
                    question.question_text,
                    question.desired_answer_text,
                    answer.answer_text,
                    _format_grade(answer.grade_1),
                    _format_grade(answer.grade_2),
                    _format_grade(answer.grade_avg),
                )
            )
        )
    return ("\n".join(out) + "\n").encode("utf-8")


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Mean, median, and histogram of the average grades.

    The median of an even-length list is the mean of the two central
    values.

    Raises:
        EmptyDataset: if the dataset has no answers.
    """
    if not dataset.answers:
        raise EmptyDataset("dataset has no answers")
    grades = [a.grade_avg for a in dataset.answers]
    bins = [0] * HISTOGRAM_BINS
    for g in grades:
        index = min(int(g / HISTOGRAM_BIN_WIDTH), HISTOGRAM_BINS - 1)
        bins[index] += 1
    return DatasetStats(
        n_questions=len(dataset.questions),
        n_answers=len(dataset.answers),
        mean_grade=statistics.fmean(grades),
        median_grade=statistics.median(grades),
        grade_histogram=tuple(bins),
    )
