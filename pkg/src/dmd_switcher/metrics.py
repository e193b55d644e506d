from __future__ import annotations

import math
from typing import Iterable, Sequence, Tuple

from .errors import EmptyInputError
from .models import ConfusionCounts


def confusion_from_pairs(pairs: Iterable[Tuple[int, int]]) -> ConfusionCounts:
    """Count (predicted, actual) pairs with class 1 (fall) as the positive class."""
    tp = fp = tn = fn = 0
    for predicted, actual in pairs:
        if predicted == 1 and actual == 1:
            tp += 1
        elif predicted == 1:
            fp += 1
        elif actual == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionCounts:
    return confusion_from_pairs(zip(predictions, labels, strict=True))


def f1_score(counts: ConfusionCounts) -> float:
    denominator = 2 * counts.tp + counts.fp + counts.fn
    if denominator == 0:
        return 0.0
    return 2 * counts.tp / denominator


def accuracy(counts: ConfusionCounts) -> float:
    if counts.total == 0:
        raise EmptyInputError("accuracy is undefined on empty counts")
    return (counts.tp + counts.tn) / counts.total


def deferred_count(n: int, fraction: float) -> int:
    """Number of items deferred at ``fraction``: ceil(fraction * n).

    Rounded to 9 decimals first so 0.7 * 10 defers 7, not 8.
    """
    return min(n, max(0, math.ceil(round(fraction * n, 9))))
