"""Rank similarity between AP sequences, and the cosine baseline over RSS vectors.

Sequences are plain tuples/lists of integer AP ids. The scalar functions here
are the reference path; ``sim_against_ranks`` is the vectorised path used when
a scan is compared with every cell of a map at once.
"""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientOverlapError, SequenceDomainError, UndefinedSimilarityError

ApSequence = Sequence[int]
RssVector = Mapping[int, float]

# shifts dBm readings so every component is non-negative
COSINE_SHIFT_DBM = 100.0


def _check_permutations(a: ApSequence, b: ApSequence) -> None:
    if len(a) < 2:
        raise SequenceDomainError(f"need at least 2 ids, got {len(a)}")
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise SequenceDomainError("sequence contains duplicate ids")
    if set(a) != set(b):
        raise SequenceDomainError(f"id sets differ: {sorted(a)} vs {sorted(b)}; align first")


def kendall_tau(a: ApSequence, b: ApSequence) -> float:
    """Kendall rank correlation of two orderings of the same AP ids.

    A pair of ids is concordant when both sequences put them in the same
    relative order. Permutations have no ties, so every pair is either
    concordant or discordant.

    Raises:
        SequenceDomainError: if ``a`` and ``b`` are not permutations of one id set.
    """
    _check_permutations(a, b)
    pos_b = {ap: i for i, ap in enumerate(b)}
    ranks = [pos_b[ap] for ap in a]
    n = len(ranks)
    concordant = 0
    for i in range(n - 1):
        ri = ranks[i]
        for j in range(i + 1, n):
            if ri < ranks[j]:
                concordant += 1
    pairs = n * (n - 1) // 2
    discordant = pairs - concordant
    return (concordant - discordant) / pairs


def sim(a: ApSequence, b: ApSequence) -> float:
    """Kendall tau mapped onto [0, 1]: ``(1 + tau) / 2``."""
    return (1.0 + kendall_tau(a, b)) / 2.0


def align(a: ApSequence, b: ApSequence) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Restrict both sequences to their common ids, keeping relative order."""
    common = set(a) & set(b)
    if len(common) < 2:
        raise InsufficientOverlapError(f"only {len(common)} APs in common")
    return tuple(ap for ap in a if ap in common), tuple(ap for ap in b if ap in common)


def sim_against_ranks(seq: ApSequence, ranks: np.ndarray, column_of: Mapping[int, int]) -> np.ndarray:
    """SIM of ``seq`` against many reference orderings at once.

    ``ranks[m, c]`` is the position of AP column ``c`` within reference ``m``;
    every reference is a full permutation of the columns. ``seq`` is aligned
    against the column ids first (ids unknown to the references are dropped).
    Results are bit-identical to calling :func:`sim` on each aligned pair.
    """
    cols = [column_of[ap] for ap in seq if ap in column_of]
    if len(cols) < 2:
        raise InsufficientOverlapError(f"only {len(cols)} APs in common with the map")
    if len(set(cols)) != len(cols):
        raise SequenceDomainError("sequence contains duplicate ids")
    n = len(cols)
    sub = ranks[:, cols]
    iu, ju = np.triu_indices(n, 1)
    concordant = np.count_nonzero(sub[:, iu] < sub[:, ju], axis=1)
    pairs = n * (n - 1) // 2
    tau = (concordant - (pairs - concordant)) / pairs
    return (1.0 + tau) / 2.0


def cosine_sim(a: RssVector, b: RssVector) -> float:
    """Cosine similarity of two RSS vectors over their common APs.

    Readings are shifted by +100 dBm before the dot product and the result is
    clamped to [0, 1].
    """
    common = sorted(set(a) & set(b))
    if len(common) < 2:
        raise InsufficientOverlapError(f"only {len(common)} APs in common")
    va = [a[ap] + COSINE_SHIFT_DBM for ap in common]
    vb = [b[ap] + COSINE_SHIFT_DBM for ap in common]
    na = math.sqrt(math.fsum(v * v for v in va))
    nb = math.sqrt(math.fsum(v * v for v in vb))
    if na == 0.0 or nb == 0.0:
        raise UndefinedSimilarityError("zero-magnitude RSS vector after shift")
    dot = math.fsum(x * y for x, y in zip(va, vb))
    return min(1.0, max(0.0, dot / (na * nb)))


def cosine_against_matrix(scan: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Cosine of one shifted RSS row against each row of ``refs``.

    Arrays hold raw dBm with NaN marking an unheard AP; only columns present
    in both vectors contribute. Rows with fewer than two common APs or a zero
    norm come back as NaN so the caller can drop them.
    """
    s = scan + COSINE_SHIFT_DBM
    r = refs + COSINE_SHIFT_DBM
    mask = ~np.isnan(r) & ~np.isnan(s)[None, :]
    s_m = np.where(mask, s[None, :], 0.0)
    r_m = np.where(mask, r, 0.0)
    dot = np.sum(s_m * r_m, axis=1)
    norm = np.sqrt(np.sum(s_m * s_m, axis=1)) * np.sqrt(np.sum(r_m * r_m, axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.clip(dot / norm, 0.0, 1.0)
    out[(mask.sum(axis=1) < 2) | (norm == 0.0)] = np.nan
    return out
