from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

import pytest

# synthetic stand-in for the real corpus: same question/answer counts,
# mean within 0.005 of 4.17, median exactly 4.50
SYNTHETIC_GRADE_COUNTS = [
    (5.0, 1000),
    (4.5, 500),
    (4.0, 400),
    (3.0, 150),
    (2.5, 1),
    (2.0, 70),
    (1.0, 36),
    (0.0, 116),
]
SYNTHETIC_N_QUESTIONS = 80
SYNTHETIC_N_ANSWERS = 2273


@pytest.fixture(scope="session")
def toy_path() -> Path:
    with resources.as_file(resources.files("gradebench").joinpath("data/toy.tsv")) as p:
        return Path(p)


@pytest.fixture(scope="session")
def synthetic_corpus_path(tmp_path_factory) -> Path:
    """80 questions, 2273 answers with a grade mix that pins the statistics."""
    grades: list[float] = []
    for value, count in SYNTHETIC_GRADE_COUNTS:
        grades.extend([value] * count)
    assert len(grades) == SYNTHETIC_N_ANSWERS

    lines = ["id\tquestion\tdesired_answer\tstudent_answer\tgrade_1\tgrade_2\tgrade_avg"]
    for i, grade in enumerate(grades):
        qid = f"q{(i % SYNTHETIC_N_QUESTIONS) + 1:02d}"
        lines.append(
            f"{qid}\tquestion text {qid}\treference answer {qid}\t"
            f"student answer {i}\t{grade!r}\t{grade!r}\t{grade!r}"
        )
    path = tmp_path_factory.mktemp("synthetic") / "synthetic.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def mohler_path() -> Path | None:
    """Real corpus TSV if present (MOHLER_TSV env or data/mohler.tsv), else None."""
    candidates = []
    env = os.environ.get("MOHLER_TSV")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "mohler.tsv")
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    return None


@pytest.fixture()
def static_vectors_path(tmp_path: Path) -> Path:
    """Tiny 2-D word-vector file covering the toy corpus's frequent words."""
    rows = [
        "a 1.0 0.0",
        "variable 0.5 1.0",
        "stores 0.25 0.75",
        "value 0.0 1.0",
        "in -0.5 1.0",
        "memory 1.0 1.0",
        "it 0.9 0.1",
        "loop 0.2 0.4",
        ". 0.01 0.02",
    ]
    path = tmp_path / "vectors.txt"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path
