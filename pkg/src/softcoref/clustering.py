"""Antecedent vectors and greedy link decoding.

An antecedent vector assigns each mention ``i`` a choice ``a_i`` with
``1 <= a_i <= i``; ``a_i = i`` opens a new entity.  Following links to
their roots partitions the mentions into entities.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import Clustering, clusters_from_entity_ids
from .errors import InputError
from .membership import LinkDistribution

DECODE_TOL = 1e-6


def validate_antecedent_vector(antecedents: Sequence[int]) -> None:
    for i, a in enumerate(antecedents, start=1):
        if not (1 <= int(a) <= i):
            raise InputError(f"antecedent a_{i} = {a} out of range 1..{i}")


def antecedents_to_clusters(antecedents: Sequence[int]) -> Clustering:
    """Partition mentions by following antecedent links to their roots."""
    validate_antecedent_vector(antecedents)
    roots = []
    for i, a in enumerate(antecedents, start=1):
        a = int(a)
        roots.append(i if a == i else roots[a - 1])
    return clusters_from_entity_ids(roots)


def decode_argmax(links: LinkDistribution, *, tol: float = DECODE_TOL) -> tuple[int, ...]:
    """Most probable antecedent of each mention, ties to smallest index.

    The row-stochastic and triangular structure of the input is
    revalidated at ``tol`` before decoding.
    """
    probs = np.asarray(links.probs, dtype=float)
    LinkDistribution(probs, tol=tol)
    antecedents = np.argmax(probs, axis=1) + 1
    return tuple(int(a) for a in antecedents)


def decode_clusters(links: LinkDistribution, *, tol: float = DECODE_TOL) -> Clustering:
    """Argmax-decode and follow links into a hard clustering."""
    return antecedents_to_clusters(decode_argmax(links, tol=tol))
