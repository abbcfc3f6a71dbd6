"""Antecedent link distributions and mention-to-entity membership.

A link distribution assigns each mention ``i`` a probability over
antecedent choices ``j <= i`` (``j = i`` means "starts a new entity").
The membership matrix gives, for every mention ``i`` and candidate
entity anchor ``u <= i``, the probability that ``i`` belongs to the
entity opened by mention ``u``.  It obeys the recursion

    q[i][i] = p[i][i]
    q[i][u] = sum_{j=u..i-1} p[i][j] * q[j][u]      for u < i

so each row is again a distribution, and anchors can only lose mass as
the document proceeds (``q[i][u] <= q[u][u]`` for ``i > u``).

All public containers use 1-based mention indices; the underlying numpy
arrays are 0-based and lower-triangular, with structural zeros above the
diagonal.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError

ROW_SUM_TOL = 1e-9


def _check_lower_triangular_rows(array: np.ndarray, name: str, tol: float) -> None:
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise InputError(f"{name} must be a square matrix")
    if array.shape[0] == 0:
        raise InputError(f"{name} must cover at least one mention")
    if not np.all(np.isfinite(array)):
        raise InputError(f"{name} has non-finite entries")
    if np.any(array < -tol):
        raise InputError(f"{name} has negative entries")
    upper = array[np.triu_indices(array.shape[0], k=1)]
    if upper.size and np.max(np.abs(upper)) > tol:
        raise InputError(f"{name} has mass above the diagonal")
    sums = array.sum(axis=1)
    worst = np.max(np.abs(sums - 1.0))
    if worst > tol:
        row = int(np.argmax(np.abs(sums - 1.0)))
        raise InputError(f"{name} row {row + 1} sums to {sums[row]:.12f}, not 1")


class LinkDistribution:
    """Row-stochastic lower-triangular antecedent probabilities.

    ``probs[i - 1, j - 1]`` is p(a_i = j) for ``j <= i``, 1-based.
    """

    __slots__ = ("probs",)

    def __init__(self, probs: np.ndarray, *, tol: float = ROW_SUM_TOL):
        probs = np.asarray(probs, dtype=float)
        _check_lower_triangular_rows(probs, "link distribution", tol)
        self.probs = probs

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def prob(self, i: int, j: int) -> float:
        """p(a_i = j), 1-based; zero for j > i."""
        if not (1 <= j <= self.n and 1 <= i <= self.n):
            raise InputError(f"mention index out of range: ({i}, {j})")
        return float(self.probs[i - 1, j - 1])

    def __repr__(self) -> str:
        return f"LinkDistribution(n={self.n})"


class MembershipMatrix:
    """Mention-to-entity membership probabilities q[i][u], 1-based."""

    __slots__ = ("probs",)

    def __init__(self, probs: np.ndarray, *, tol: float = ROW_SUM_TOL):
        probs = np.asarray(probs, dtype=float)
        _check_lower_triangular_rows(probs, "membership matrix", tol)
        self.probs = probs

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def prob(self, i: int, u: int) -> float:
        """q[i][u] = p(m_i in S_u), 1-based; zero for u > i."""
        if not (1 <= u <= self.n and 1 <= i <= self.n):
            raise InputError(f"mention index out of range: ({i}, {u})")
        return float(self.probs[i - 1, u - 1])

    def argmax_entities(self) -> np.ndarray:
        """Most probable anchor per mention (1-based, ties to smallest)."""
        return np.argmax(self.probs, axis=1) + 1

    def __repr__(self) -> str:
        return f"MembershipMatrix(n={self.n})"


def membership_array(p: np.ndarray) -> np.ndarray:
    """Forward membership recursion on a raw lower-triangular array."""
    n = p.shape[0]
    q = np.zeros_like(p)
    for i in range(n):
        q[i, i] = p[i, i]
        if i > 0:
            # q[i, u] = sum_{j=u}^{i-1} p[i, j] q[j, u]; each column u of
            # q[:i] already zeroes out j < u, so a plain matvec works.
            q[i, :i] = p[i, :i] @ q[:i, :i]
    return q


def membership_backward(p: np.ndarray, q: np.ndarray, dq: np.ndarray) -> np.ndarray:
    """Gradient of a scalar wrt p given its gradient wrt q = membership(p).

    Reverse sweep of the recursion: row i of q depends on row i of p and
    on rows j < i of q, so accumulated row gradients flow downward.
    """
    n = p.shape[0]
    gbar = np.tril(dq).astype(float, copy=True)
    dp = np.zeros_like(p)
    for i in range(n - 1, -1, -1):
        dp[i, i] += gbar[i, i]
        if i > 0:
            dp[i, :i] += q[:i, :] @ gbar[i, :]
            gbar[:i, :] += np.outer(p[i, :i], gbar[i, :])
    return dp


def membership(links: LinkDistribution) -> MembershipMatrix:
    """Entity membership probabilities implied by a link distribution."""
    _check_lower_triangular_rows(links.probs, "link distribution", ROW_SUM_TOL)
    return MembershipMatrix(membership_array(links.probs))


def brute_force_membership(links: LinkDistribution) -> MembershipMatrix:
    """Membership by explicit enumeration of all antecedent vectors.

    Exponential in n; intended as an oracle for small documents.
    """
    n = links.n
    if n > 8:
        raise InputError("brute-force membership is limited to n <= 8")
    _check_lower_triangular_rows(links.probs, "link distribution", ROW_SUM_TOL)
    p = links.probs
    q = np.zeros((n, n))
    choices = [range(i + 1) for i in range(n)]  # 0-based antecedent j <= i

    def walk(i: int, prob: float, vector: list[int]):
        if i == n:
            # Follow antecedent links to each mention's entity anchor.
            for m in range(n):
                u = m
                while vector[u] != u:
                    u = vector[u]
                q[m, u] += prob
            return
        for j in choices[i]:
            walk(i + 1, prob * p[i, j], vector + [j])

    walk(0, 1.0, [])
    return MembershipMatrix(q)


def temper_array(q: np.ndarray, temperature: float) -> np.ndarray:
    """Temperature-sharpened membership rows, in log space.

    Row i is softmax(log q[i, u] / T) over u <= i; structural zeros and
    exact zero entries keep zero mass at every temperature.
    """
    if temperature <= 0:
        raise InputError(f"temperature must be positive, got {temperature}")
    n = q.shape[0]
    out = np.zeros_like(q)
    for i in range(n):
        row = q[i, : i + 1]
        mask = row > 0.0
        if not np.any(mask):
            raise InputError(f"membership row {i + 1} has no positive mass")
        logs = np.log(row[mask]) / temperature
        logs -= logs.max()
        w = np.exp(logs)
        vals = np.zeros(i + 1)
        vals[mask] = w / w.sum()
        out[i, : i + 1] = vals
    return out


def temper_backward(q: np.ndarray, qt: np.ndarray, temperature: float,
                    dqt: np.ndarray) -> np.ndarray:
    """Gradient wrt q of a scalar given its gradient wrt temper_array(q).

    Uses the softmax Jacobian in log space: for row probabilities s over
    the positive support, ds/dlogq = (s * (ds - s . ds)) and
    dlogq/dq = 1/q, giving dq = (1/T) * (s/q) * (ds - sum(s * ds)).
    """
    n = q.shape[0]
    dq = np.zeros_like(q)
    for i in range(n):
        row_q = q[i, : i + 1]
        row_s = qt[i, : i + 1]
        row_ds = dqt[i, : i + 1]
        rowdot = float(row_s @ row_ds)
        ratio = np.where(row_q > 0.0, row_s / np.where(row_q > 0.0, row_q, 1.0), 0.0)
        dq[i, : i + 1] = ratio * (row_ds - rowdot) / temperature
    return dq


def tempered_membership(memberships: MembershipMatrix, temperature: float) -> MembershipMatrix:
    """Sharpen (T < 1) or flatten (T > 1) membership rows; T = 1 is identity."""
    return MembershipMatrix(temper_array(memberships.probs, temperature))
