"""Scoring machinery on worked examples: span vs head F1, the five error
categories, and the role co-occurrence statistic."""

import numpy as np

from docarg.data import Prediction
from docarg.metrics import (
    classify_error,
    count_errors,
    head_f1,
    role_cooccurrence,
    span_f1,
)
from docarg.synth import generate_synthetic

golds = [("killer", 3, 4), ("victim", 8, 9), ("place", 12, 15)]
predictions = [
    Prediction("killer", 3, 4, 0.95),   # exact match
    Prediction("victim", 3, 4, 0.60),   # right span, wrong role
    Prediction("weapon", 5, 6, 0.55),   # role never appears
    Prediction("place", 13, 14, 0.70),  # strict sub-span
    Prediction("place", 10, 13, 0.65),  # overlaps
    Prediction("place", 0, 1, 0.40),    # disjoint
]

print("per-prediction categories:")
for p in predictions:
    print(f"  ({p.role!r}, {p.start}, {p.end}) -> {classify_error(p, golds)}")

report = count_errors([predictions], [golds])
print("\naggregated:", report.counts, "total", report.total)

print("\nspan vs head F1 (classification mode):")
print("  span:", tuple(round(x, 3) for x in span_f1([predictions], [golds])))
print("  head:", tuple(round(x, 3) for x in head_f1([predictions], [golds])))

print("\nrole co-occurrence over a 300-event synthetic corpus:")
corpus = generate_synthetic(5, 300)
matrix, roles = role_cooccurrence(corpus)
width = max(len(r) for r in roles)
print(" " * (width + 2) + "  ".join(f"{r:>{width}s}" for r in roles))
for role, row in zip(roles, matrix):
    print(f"{role:>{width}s}  " + "  ".join(f"{x:>{width}.3f}" for x in row))
print("symmetric:", bool(np.allclose(matrix, matrix.T)),
      " zero diagonal:", bool(np.all(np.diag(matrix) == 0)))
