"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately written the slow, obvious way (pure-Python
loops, full DP tables, pairwise counting) so it shares no code with the
implementations it checks.
"""

from __future__ import annotations

import math

import numpy as np


def kendall_brute(x, y) -> tuple[float, bool]:
    """Tau-b from explicit pair counting over all i<j."""
    x = list(map(float, x))
    y = list(map(float, y))
    n = len(x)
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            a = (x[i] > x[j]) - (x[i] < x[j])
            b = (y[i] > y[j]) - (y[i] < y[j])
            if a == 0 and b == 0:
                continue
            if a == 0:
                ties_x += 1
            elif b == 0:
                ties_y += 1
            elif a == b:
                concordant += 1
            else:
                discordant += 1
    denom = (concordant + discordant + ties_x) * (concordant + discordant + ties_y)
    if denom == 0:
        return 0.0, True
    return (concordant - discordant) / math.sqrt(denom), False


def midranks_brute(x) -> np.ndarray:
    """rank_i = 1 + #{x_j < x_i} + (#{j != i: x_j == x_i}) / 2."""
    x = list(map(float, x))
    n = len(x)
    ranks = np.empty(n, dtype=np.float64)
    for i in range(n):
        below = sum(1 for j in range(n) if x[j] < x[i])
        equal = sum(1 for j in range(n) if j != i and x[j] == x[i])
        ranks[i] = 1.0 + below + equal / 2.0
    return ranks


def spearman_brute(x, y) -> tuple[float, bool]:
    """Pearson correlation of brute-force midranks."""
    rx = midranks_brute(x)
    ry = midranks_brute(y)
    ax = rx - np.mean(rx)
    ay = ry - np.mean(ry)
    denom = math.sqrt(float(np.dot(ax, ax)) * float(np.dot(ay, ay)))
    if denom == 0.0:
        return 0.0, True
    return float(np.dot(ax, ay)) / denom, False


def levenshtein_brute(a, b) -> int:
    """Full DP table, no vectorization."""
    a = list(a)
    b = list(b)
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(table[i - 1][j] + 1,
                              table[i][j - 1] + 1,
                              table[i - 1][j - 1] + cost)
    return table[-1][-1]


def random_shot_ids(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random valid shot layout: non-decreasing from 0 with unit steps."""
    ids = np.zeros(n, dtype=np.int64)
    current = 0
    for i in range(1, n):
        if rng.random() < 0.25:
            current += 1
        ids[i] = current
    return ids


def shot_runs_of(shot_ids) -> list[list[int]]:
    """Contiguous index runs per shot, straight from the definition."""
    runs = []
    current = [0]
    for i in range(1, len(shot_ids)):
        if shot_ids[i] == shot_ids[i - 1]:
            current.append(i)
        else:
            runs.append(current)
            current = [i]
    runs.append(current)
    return runs


def is_bijection(mapping) -> bool:
    return sorted(mapping) == list(range(len(mapping)))


def blocks_internally_ordered(mapping, block_bounds) -> bool:
    """mapping must be a concatenation of the given [start, end) blocks in
    some order, each block's indices appearing contiguously and in order."""
    pos = 0
    mapping = list(mapping)
    seen = set()
    for _ in range(len(block_bounds)):
        start_val = mapping[pos]
        match = None
        for bi, (s, e) in enumerate(block_bounds):
            if s == start_val and bi not in seen:
                match = bi
                break
        if match is None:
            return False
        s, e = block_bounds[match]
        if mapping[pos:pos + (e - s)] != list(range(s, e)):
            return False
        seen.add(match)
        pos += e - s
    return pos == len(mapping)


def shots_contiguous_and_ordered(mapping, shot_ids) -> bool:
    """Every shot's frames appear contiguously and internally ordered."""
    runs = shot_runs_of(shot_ids)
    bounds = [(run[0], run[-1] + 1) for run in runs]
    return blocks_internally_ordered(mapping, bounds)
