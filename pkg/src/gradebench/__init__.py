"""Short-answer grading from one similarity feature, with a benchmark harness.

Pipeline: TSV answers -> tokens -> per-token vectors (pluggable provider)
-> sum-pooled sentence vectors -> cosine similarity against the reference
answer -> min-max normalized feature -> isotonic / linear / ridge
regression -> RMSE and Pearson over seeded repeated random splits.
"""

__version__ = "0.1.0"
