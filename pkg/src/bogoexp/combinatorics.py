"""Integer compositions in a fixed, sorted enumeration order."""

from math import comb


def compositions(total, parts):
    """Tuples of ``parts`` positive integers summing to ``total``,
    in lexicographic order."""
    if parts <= 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def weak_compositions(total, parts):
    """Tuples of ``parts`` non-negative integers summing to ``total``."""
    if parts <= 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in weak_compositions(total - first, parts - 1):
            yield (first,) + rest


def all_compositions(total):
    """Every composition of ``total`` into any number of positive parts."""
    for parts in range(1, total + 1):
        yield from compositions(total, parts)


def count_compositions(total, parts):
    if parts == 0:
        return int(total == 0)
    return comb(total - 1, parts - 1) if total >= parts else 0


def count_weak_compositions(total, parts):
    if parts == 0:
        return int(total == 0)
    return comb(total + parts - 1, parts - 1)
