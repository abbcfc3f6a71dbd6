"""Exact coreference clustering metrics.

All metrics compare two partitions of the same mention set and are
expressed as count quadruples (precision numerator / denominator, recall
numerator / denominator) so that document-level counts can be summed for
micro-averaged corpus scores before any division happens.

Implemented: MUC link-based scoring, B-cubed per-mention overlap, CEAF
under both the mention-overlap and normalized-entity similarities (with
an optimal one-to-one cluster alignment), BLANC as the average of the
coreferent-pair and non-coreferent-pair F scores, and LEA's
link-resolution score weighted by cluster size.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import Clustering
from .errors import InputError


def f_beta(precision: float, recall: float, beta: float = 1.0) -> float:
    """Weighted harmonic mean; beta > 1 favors recall.  0 when P = R = 0."""
    if beta <= 0:
        raise InputError(f"beta must be positive, got {beta}")
    denom = beta * beta * precision + recall
    if denom == 0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denom


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f: float
    beta: float = 1.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.precision, self.recall, self.f)


@dataclass(frozen=True)
class MetricCounts:
    """Numerators and denominators of one metric on one or more documents."""

    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    def __add__(self, other: "MetricCounts") -> "MetricCounts":
        return MetricCounts(
            self.p_num + other.p_num, self.p_den + other.p_den,
            self.r_num + other.r_num, self.r_den + other.r_den,
        )

    def __radd__(self, other):
        return self if other == 0 else NotImplemented

    def prf(self, beta: float = 1.0) -> PRF:
        p = self.p_num / self.p_den if self.p_den > 0 else 0.0
        r = self.r_num / self.r_den if self.r_den > 0 else 0.0
        return PRF(p, r, f_beta(p, r, beta), beta)


def _check_same_mentions(gold: Clustering, response: Clustering) -> None:
    if gold.mention_set != response.mention_set:
        raise InputError(
            f"gold and response cover different mentions "
            f"({gold.num_mentions} vs {response.num_mentions})"
        )


def _overlap_sizes(gold: Clustering, response: Clustering) -> tuple[list[frozenset[int]], list[frozenset[int]], np.ndarray]:
    gs = gold.sorted_clusters()
    ss = response.sorted_clusters()
    x = np.array([[len(g & s) for s in ss] for g in gs], dtype=float)
    return gs, ss, x


# ---------------------------------------------------------------------------
# MUC
# ---------------------------------------------------------------------------

def muc_counts(gold: Clustering, response: Clustering) -> MetricCounts:
    """Link-based counts: a cluster of size k contributes k - 1 links and
    loses one per part it is split into by the other side."""
    _check_same_mentions(gold, response)

    def side(keys: Clustering, partitions: Clustering) -> tuple[float, float]:
        part_of = partitions.entity_ids()
        num = den = 0
        for cluster in keys.clusters:
            parts = {part_of[m] for m in cluster}
            num += len(cluster) - len(parts)
            den += len(cluster) - 1
        return float(num), float(den)

    r_num, r_den = side(gold, response)
    p_num, p_den = side(response, gold)
    return MetricCounts(p_num, p_den, r_num, r_den)


# ---------------------------------------------------------------------------
# B-cubed
# ---------------------------------------------------------------------------

def b_cubed_counts(gold: Clustering, response: Clustering) -> MetricCounts:
    """Per-mention counts: each mention scores the squared overlap of its
    gold and response clusters over the cluster size on each side."""
    _check_same_mentions(gold, response)
    gs, ss, x = _overlap_sizes(gold, response)
    n = gold.num_mentions
    x2 = x * x
    r_num = float(sum(x2[v].sum() / len(gs[v]) for v in range(len(gs))))
    p_num = float(sum(x2[:, u].sum() / len(ss[u]) for u in range(len(ss))))
    return MetricCounts(p_num, float(n), r_num, float(n))


# ---------------------------------------------------------------------------
# CEAF
# ---------------------------------------------------------------------------

def _optimal_alignment_total(similarity: np.ndarray) -> float:
    """Best one-to-one cluster alignment score (rectangular allowed)."""
    if similarity.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(-similarity)
    return float(similarity[rows, cols].sum())


def ceaf_m_counts(gold: Clustering, response: Clustering) -> MetricCounts:
    """Mention-overlap similarity phi(G, S) = |G & S|."""
    _check_same_mentions(gold, response)
    _, _, x = _overlap_sizes(gold, response)
    best = _optimal_alignment_total(x)
    return MetricCounts(best, float(response.num_mentions), best, float(gold.num_mentions))


def ceaf_e_counts(gold: Clustering, response: Clustering) -> MetricCounts:
    """Normalized similarity phi(G, S) = 2|G & S| / (|G| + |S|)."""
    _check_same_mentions(gold, response)
    gs, ss, x = _overlap_sizes(gold, response)
    sizes_g = np.array([len(g) for g in gs], dtype=float)
    sizes_s = np.array([len(s) for s in ss], dtype=float)
    phi = 2.0 * x / (sizes_g[:, None] + sizes_s[None, :])
    best = _optimal_alignment_total(phi)
    return MetricCounts(best, float(len(ss)), best, float(len(gs)))


# ---------------------------------------------------------------------------
# BLANC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlancCounts:
    """Pair-level counts for the coreferent and non-coreferent classes."""

    coref: MetricCounts = MetricCounts()
    non_coref: MetricCounts = MetricCounts()

    def __add__(self, other: "BlancCounts") -> "BlancCounts":
        return BlancCounts(self.coref + other.coref, self.non_coref + other.non_coref)

    def __radd__(self, other):
        return self if other == 0 else NotImplemented

    def prf(self, beta: float = 1.0) -> PRF:
        """Average P, R and F over the pair classes with any links.

        A class empty on both sides is skipped; if both are (a document
        of one mention), gold and response coincide trivially and the
        score is 1.
        """
        parts = []
        for c in (self.coref, self.non_coref):
            if c.p_den + c.r_den > 0:
                parts.append(c.prf(beta))
        if not parts:
            return PRF(1.0, 1.0, 1.0, beta)
        return PRF(
            sum(x.precision for x in parts) / len(parts),
            sum(x.recall for x in parts) / len(parts),
            sum(x.f for x in parts) / len(parts),
            beta,
        )


def _coref_pairs(clustering: Clustering) -> set[tuple[int, int]]:
    pairs = set()
    for cluster in clustering.clusters:
        members = sorted(cluster)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                pairs.add((members[a], members[b]))
    return pairs


def blanc_counts(gold: Clustering, response: Clustering) -> BlancCounts:
    _check_same_mentions(gold, response)
    n = gold.num_mentions
    total = n * (n - 1) // 2
    cg = _coref_pairs(gold)
    cs = _coref_pairs(response)
    both = len(cg & cs)
    neither = total - len(cg | cs)
    return BlancCounts(
        coref=MetricCounts(float(both), float(len(cs)), float(both), float(len(cg))),
        non_coref=MetricCounts(float(neither), float(total - len(cs)),
                               float(neither), float(total - len(cg))),
    )


# ---------------------------------------------------------------------------
# LEA
# ---------------------------------------------------------------------------

def _links(size: int) -> int:
    return size * (size - 1) // 2


def lea_counts(gold: Clustering, response: Clustering, *,
               singleton_self_links: bool = False) -> MetricCounts:
    """Size-weighted link resolution counts.

    Each cluster contributes its size to the denominator and (size *
    resolved-link fraction) to the numerator.  With
    ``singleton_self_links`` a singleton owns one self-link, resolved
    exactly when the mention is also a singleton on the other side;
    otherwise singletons resolve nothing.
    """
    _check_same_mentions(gold, response)

    def side(keys: Clustering, others: Clustering) -> tuple[float, float]:
        other_of = others.entity_ids()
        other_sizes = {min(c): len(c) for c in others.clusters}
        num = Fraction(0)
        den = 0
        for cluster in keys.clusters:
            size = len(cluster)
            den += size
            if size == 1:
                if singleton_self_links:
                    (m,) = cluster
                    if other_sizes[other_of[m]] == 1:
                        num += size
                continue
            members = sorted(cluster)
            resolved = sum(
                1
                for a in range(size)
                for b in range(a + 1, size)
                if other_of[members[a]] == other_of[members[b]]
            )
            num += Fraction(size * resolved, _links(size))
        return float(num), float(den)

    r_num, r_den = side(gold, response)
    p_num, p_den = side(response, gold)
    return MetricCounts(p_num, p_den, r_num, r_den)


# ---------------------------------------------------------------------------
# PRF wrappers and the CoNLL summary score
# ---------------------------------------------------------------------------

def muc(gold: Clustering, response: Clustering, beta: float = 1.0) -> PRF:
    return muc_counts(gold, response).prf(beta)


def b_cubed(gold: Clustering, response: Clustering, beta: float = 1.0) -> PRF:
    return b_cubed_counts(gold, response).prf(beta)


def ceaf_m(gold: Clustering, response: Clustering, beta: float = 1.0) -> PRF:
    return ceaf_m_counts(gold, response).prf(beta)


def ceaf_e(gold: Clustering, response: Clustering, beta: float = 1.0) -> PRF:
    return ceaf_e_counts(gold, response).prf(beta)


def blanc(gold: Clustering, response: Clustering, beta: float = 1.0) -> PRF:
    return blanc_counts(gold, response).prf(beta)


def lea(gold: Clustering, response: Clustering, beta: float = 1.0, *,
        singleton_self_links: bool = False) -> PRF:
    return lea_counts(gold, response, singleton_self_links=singleton_self_links).prf(beta)


def conll_average(muc_f: float, b_cubed_f: float, ceaf_e_f: float) -> float:
    """The customary summary score: mean of the MUC, B-cubed and entity
    CEAF F1 values."""
    return (muc_f + b_cubed_f + ceaf_e_f) / 3.0
