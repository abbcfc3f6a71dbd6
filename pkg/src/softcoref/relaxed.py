"""Differentiable relaxations of B-cubed and LEA over soft clusters.

A soft cluster S_u collects the membership probabilities q[i][u] of all
mentions for anchor u.  Cardinalities and link counts become sums of
probabilities and probability products:

    |S_u|_d    = sum_i q[i][u]
    link_d(S_u) = sum_{j<i} q[i][u] * q[j][u]

Soft intersections with a gold cluster restrict the sums to the gold
members.  Plugging these into the B-cubed and LEA precision/recall
formulas gives smooth surrogates whose F_beta can be maximized directly;
any ratio whose denominator falls below ``GUARD_EPS`` contributes 0, and
the same convention fixes its (sub)gradient to 0.

The ``*_soft_grad`` functions return closed-form gradients with respect
to every membership entry; they are the top of the analytic backward
chain through the temperature softmax, the membership recursion, and the
scoring network.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection

import numpy as np

from .corpus import Clustering
from .errors import ConfigError, InputError
from .membership import MembershipMatrix, temper_array
from .metrics import f_beta

GUARD_EPS = 1e-12


@dataclass(frozen=True)
class RelaxedScore:
    """A relaxed F score with its soft precision/recall components."""

    value: float
    precision: float
    recall: float
    beta: float
    temperature: float


def soft_size(memberships: MembershipMatrix, u: int) -> float:
    """Expected cardinality of soft cluster S_u (1-based anchor)."""
    if not (1 <= u <= memberships.n):
        raise InputError(f"entity anchor {u} out of range 1..{memberships.n}")
    return float(memberships.probs[:, u - 1].sum())


def soft_link(memberships: MembershipMatrix, u: int,
              restrict: Collection[int] | None = None) -> float:
    """Expected number of mention pairs inside soft cluster S_u.

    With ``restrict``, only pairs with both mentions in the given
    1-based set count (used for intersections with a gold cluster).
    """
    n = memberships.n
    if not (1 <= u <= n):
        raise InputError(f"entity anchor {u} out of range 1..{n}")
    col = memberships.probs[:, u - 1]
    if restrict is not None:
        members = sorted(set(int(m) for m in restrict))
        if members and not (1 <= members[0] and members[-1] <= n):
            raise InputError(f"restrict set out of range 1..{n}")
        col = col[[m - 1 for m in members]]
    total = col.sum()
    return float(0.5 * (total * total - (col * col).sum()))


def gold_index_arrays(gold: Clustering, n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based cluster index per mention and cluster sizes, in
    ``sorted_clusters`` order."""
    if gold.num_mentions != n:
        raise InputError(
            f"gold clustering covers {gold.num_mentions} mentions, membership has {n}"
        )
    gold_of = np.zeros(n, dtype=np.int64)
    clusters = gold.sorted_clusters()
    for v, cluster in enumerate(clusters):
        for m in cluster:
            gold_of[m - 1] = v
    sizes = np.array([len(c) for c in clusters], dtype=float)
    return gold_of, sizes


def _soft_intersections(q: np.ndarray, gold_of: np.ndarray, num_clusters: int) -> np.ndarray:
    """x[v, u] = sum of q[i, u] over mentions i in gold cluster v."""
    x = np.zeros((num_clusters, q.shape[1]))
    np.add.at(x, gold_of, q)
    return x


def _guarded_inverse(values: np.ndarray) -> np.ndarray:
    keep = values > GUARD_EPS
    return np.where(keep, 1.0 / np.where(keep, values, 1.0), 0.0)


def _f_partials(p: float, r: float, beta: float) -> tuple[float, float, float]:
    """(F, dF/dP, dF/dR) with the 0-at-degenerate convention."""
    b2 = beta * beta
    denom = b2 * p + r
    if denom <= 0:
        return 0.0, 0.0, 0.0
    f = (1 + b2) * p * r / denom
    dfdp = (1 + b2) * r * r / (denom * denom)
    dfdr = (1 + b2) * b2 * p * p / (denom * denom)
    return f, dfdp, dfdr


# ---------------------------------------------------------------------------
# Relaxed B-cubed
# ---------------------------------------------------------------------------

def _b3_forward(q: np.ndarray, gold_of: np.ndarray, sizes: np.ndarray):
    n = q.shape[0]
    x = _soft_intersections(q, gold_of, len(sizes))
    z = q.sum(axis=0)
    s2 = (x * x).sum(axis=0)
    recall = float((x * x / sizes[:, None]).sum()) / n
    inv_z = _guarded_inverse(z)
    num_p = float((s2 * inv_z).sum())
    den_p = float(z.sum())
    precision = num_p / den_p if den_p > GUARD_EPS else 0.0
    return x, z, s2, inv_z, num_p, den_p, precision, recall


def b3_soft(q: np.ndarray, gold_of: np.ndarray, sizes: np.ndarray,
            beta: float = 1.0) -> tuple[float, float, float]:
    """(precision, recall, F_beta) of relaxed B-cubed on raw memberships."""
    *_, precision, recall = _b3_forward(q, gold_of, sizes)
    return precision, recall, f_beta(precision, recall, beta)


def b3_soft_grad(q: np.ndarray, gold_of: np.ndarray, sizes: np.ndarray,
                 beta: float = 1.0) -> tuple[float, float, float, np.ndarray]:
    """Relaxed B-cubed value plus its gradient wrt every q[i, u]."""
    n = q.shape[0]
    x, z, s2, inv_z, num_p, den_p, precision, recall = _b3_forward(q, gold_of, sizes)
    f, dfdp, dfdr = _f_partials(precision, recall, beta)

    a = x[gold_of]                       # a[i, u] = x[gold_of(i), u]
    d_recall = 2.0 * a / sizes[gold_of][:, None] / n
    # num_p = sum_u s2_u / z_u: the quotient rule per column; guarded
    # columns have inv_z = 0 so both terms vanish there.
    d_num_p = 2.0 * a * inv_z[None, :] - s2[None, :] * inv_z[None, :] ** 2
    if den_p > GUARD_EPS:
        d_precision = d_num_p / den_p - num_p / (den_p * den_p)
    else:
        d_precision = np.zeros_like(q)
    dq = dfdp * d_precision + dfdr * d_recall
    return precision, recall, f, np.tril(dq)


# ---------------------------------------------------------------------------
# Relaxed LEA
# ---------------------------------------------------------------------------

def _lea_forward(q: np.ndarray, gold_of: np.ndarray, sizes: np.ndarray):
    n = q.shape[0]
    num_clusters = len(sizes)
    x = _soft_intersections(q, gold_of, num_clusters)
    sq = q * q
    xsq = _soft_intersections(sq, gold_of, num_clusters)
    ell = 0.5 * (x * x - xsq)            # soft links inside gold cluster v, column u
    z = q.sum(axis=0)
    links = 0.5 * (z * z - sq.sum(axis=0))
    gold_links = sizes * (sizes - 1.0) / 2.0
    inv_gold_links = _guarded_inverse(gold_links)
    recall = float((sizes * ell.sum(axis=1) * inv_gold_links).sum()) / n
    ell_col = ell.sum(axis=0)
    inv_links = _guarded_inverse(links)
    resolved = ell_col * inv_links       # per-column resolved-link fraction
    num_p = float((z * resolved).sum())
    den_p = float(z.sum())
    precision = num_p / den_p if den_p > GUARD_EPS else 0.0
    return x, z, ell_col, links, inv_links, resolved, inv_gold_links, num_p, den_p, precision, recall


def lea_soft(q: np.ndarray, gold_of: np.ndarray, sizes: np.ndarray,
             beta: float = 1.0) -> tuple[float, float, float]:
    """(precision, recall, F_beta) of relaxed LEA on raw memberships."""
    *_, precision, recall = _lea_forward(q, gold_of, sizes)
    return precision, recall, f_beta(precision, recall, beta)


def lea_soft_grad(q: np.ndarray, gold_of: np.ndarray, sizes: np.ndarray,
                  beta: float = 1.0) -> tuple[float, float, float, np.ndarray]:
    """Relaxed LEA value plus its gradient wrt every q[i, u]."""
    n = q.shape[0]
    (x, z, ell_col, links, inv_links, resolved, inv_gold_links,
     num_p, den_p, precision, recall) = _lea_forward(q, gold_of, sizes)
    f, dfdp, dfdr = _f_partials(precision, recall, beta)

    a = x[gold_of]
    d_ell = a - q                        # d ell[gold_of(i), u] / d q[i, u]
    d_links = z[None, :] - q             # d links_u / d q[i, u]
    d_recall = (sizes[gold_of] * inv_gold_links[gold_of])[:, None] * d_ell / n
    d_resolved = d_ell * inv_links[None, :] - ell_col[None, :] * inv_links[None, :] ** 2 * d_links
    d_num_p = resolved[None, :] + z[None, :] * d_resolved
    if den_p > GUARD_EPS:
        d_precision = d_num_p / den_p - num_p / (den_p * den_p)
    else:
        d_precision = np.zeros_like(q)
    dq = dfdp * d_precision + dfdr * d_recall
    return precision, recall, f, np.tril(dq)


# ---------------------------------------------------------------------------
# Public wrappers over MembershipMatrix
# ---------------------------------------------------------------------------

_SOFT_METRICS = {"b3": b3_soft, "lea": lea_soft}


def _tempered_probs(memberships: MembershipMatrix, temperature: float) -> np.ndarray:
    if temperature == 1.0:
        return memberships.probs
    return temper_array(memberships.probs, temperature)


def _relaxed(kind: str, memberships: MembershipMatrix, gold: Clustering,
             beta: float, temperature: float) -> RelaxedScore:
    if beta <= 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    q = _tempered_probs(memberships, temperature)
    gold_of, sizes = gold_index_arrays(gold, memberships.n)
    precision, recall, f = _SOFT_METRICS[kind](q, gold_of, sizes, beta)
    return RelaxedScore(f, precision, recall, beta, temperature)


def relaxed_b3(memberships: MembershipMatrix, gold: Clustering,
               beta: float = 1.0, temperature: float = 1.0) -> RelaxedScore:
    """Relaxed B-cubed F of soft clusters against a gold clustering."""
    return _relaxed("b3", memberships, gold, beta, temperature)


def relaxed_lea(memberships: MembershipMatrix, gold: Clustering,
                beta: float = 1.0, temperature: float = 1.0) -> RelaxedScore:
    """Relaxed LEA F of soft clusters against a gold clustering."""
    return _relaxed("lea", memberships, gold, beta, temperature)


def relaxed_loss(memberships: MembershipMatrix, gold: Clustering,
                 metric: str = "b3", beta: float = 1.0, temperature: float = 1.0,
                 lam: float = 0.0, params_l1: float = 0.0) -> float:
    """Training objective -F_beta_relaxed + lam * |params|_1."""
    if metric not in _SOFT_METRICS:
        raise ConfigError(f"unknown relaxed metric {metric!r} (expected b3 or lea)")
    if lam < 0:
        raise ConfigError(f"l1 weight must be nonnegative, got {lam}")
    score = _relaxed(metric, memberships, gold, beta, temperature)
    return -score.value + lam * params_l1
