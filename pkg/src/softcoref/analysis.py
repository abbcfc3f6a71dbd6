"""Error breakdowns and consolidated metric reports.

The per-mention error taxonomy distinguishes, against gold:

  * FA (false anaphor): a discourse-new mention linked to an antecedent;
  * FN (false new): an anaphoric mention predicted discourse-new;
  * WL (wrong link): an anaphoric mention linked outside its entity.

Counts are kept per mention type so systematic weaknesses (for example
on pronouns) are visible.  Corpus-level metric reports micro-aggregate:
count numerators and denominators are summed over documents before any
ratio is formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .clustering import antecedents_to_clusters, validate_antecedent_vector
from .corpus import MENTION_TYPES, Clustering, Document
from .errors import InputError
from .metrics import (PRF, BlancCounts, MetricCounts, b_cubed_counts,
                      blanc_counts, ceaf_e_counts, ceaf_m_counts,
                      conll_average, lea_counts, muc_counts)
from .model import ModelParams, predict_antecedents

ERROR_KINDS = ("fa", "fn", "wl", "correct")


def _zero_counts() -> dict[str, int]:
    return {t: 0 for t in MENTION_TYPES}


@dataclass(frozen=True)
class ErrorBreakdown:
    """FA / FN / WL / correct counts per mention type."""

    fa: Mapping[str, int] = field(default_factory=_zero_counts)
    fn: Mapping[str, int] = field(default_factory=_zero_counts)
    wl: Mapping[str, int] = field(default_factory=_zero_counts)
    correct: Mapping[str, int] = field(default_factory=_zero_counts)

    def total(self, kind: str) -> int:
        if kind not in ERROR_KINDS:
            raise InputError(f"unknown error kind {kind!r}")
        return sum(getattr(self, kind).values())

    @property
    def num_mentions(self) -> int:
        return sum(self.total(kind) for kind in ERROR_KINDS)

    def __add__(self, other: "ErrorBreakdown") -> "ErrorBreakdown":
        merged = {}
        for kind in ERROR_KINDS:
            mine, theirs = getattr(self, kind), getattr(other, kind)
            merged[kind] = {t: mine[t] + theirs[t] for t in MENTION_TYPES}
        return ErrorBreakdown(**merged)

    def __radd__(self, other):
        return self if other == 0 else NotImplemented


def error_breakdown(doc: Document, predicted: Sequence[int]) -> ErrorBreakdown:
    """Classify each mention's predicted antecedent against gold."""
    if len(predicted) != doc.n:
        raise InputError(
            f"document {doc.id}: prediction has length {len(predicted)}, expected {doc.n}"
        )
    validate_antecedent_vector(predicted)
    counts = {kind: _zero_counts() for kind in ERROR_KINDS}
    for i in range(1, doc.n + 1):
        mention = doc.mentions[i - 1]
        a = int(predicted[i - 1])
        anaphoric = doc.is_anaphoric(i)
        if not anaphoric and a != i:
            kind = "fa"
        elif anaphoric and a == i:
            kind = "fn"
        elif anaphoric and a not in doc.correct_antecedents(i):
            kind = "wl"
        else:
            kind = "correct"
        counts[kind][mention.mention_type] += 1
    return ErrorBreakdown(**counts)


# ---------------------------------------------------------------------------
# Metric reports
# ---------------------------------------------------------------------------

METRIC_NAMES = ("muc", "b_cubed", "ceaf_m", "ceaf_e", "blanc", "lea")

_COUNT_FNS = {
    "muc": muc_counts,
    "b_cubed": b_cubed_counts,
    "ceaf_m": ceaf_m_counts,
    "ceaf_e": ceaf_e_counts,
    "blanc": blanc_counts,
    "lea": lea_counts,
}


@dataclass(frozen=True)
class MetricReport:
    muc: PRF
    b_cubed: PRF
    ceaf_m: PRF
    ceaf_e: PRF
    blanc: PRF
    lea: PRF
    conll: float

    def rows(self) -> list[tuple[str, PRF]]:
        return [(name, getattr(self, name)) for name in METRIC_NAMES]


def corpus_report(pairs: Sequence[tuple[Clustering, Clustering]],
                  beta: float = 1.0) -> MetricReport:
    """Micro-aggregated metrics over (gold, response) document pairs."""
    if not pairs:
        raise InputError("no documents to score")
    sums: dict[str, MetricCounts | BlancCounts] = {}
    for name, fn in _COUNT_FNS.items():
        sums[name] = sum(fn(gold, response) for gold, response in pairs)
    prfs = {name: counts.prf(beta) for name, counts in sums.items()}
    return MetricReport(
        conll=conll_average(prfs["muc"].f, prfs["b_cubed"].f, prfs["ceaf_e"].f),
        **prfs,
    )


def metric_report(gold: Clustering, response: Clustering, beta: float = 1.0) -> MetricReport:
    """All six metrics plus the CoNLL average for one document."""
    return corpus_report([(gold, response)], beta)


def evaluate_corpus(docs: Sequence[Document], params: ModelParams,
                    beta: float = 1.0) -> MetricReport:
    """Decode every document with the model and score against gold."""
    pairs = [
        (doc.gold_clusters, antecedents_to_clusters(predict_antecedents(doc, params)))
        for doc in docs
    ]
    return corpus_report(pairs, beta)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_DISPLAY = {
    "muc": "MUC", "b_cubed": "B3", "ceaf_m": "CEAF_m",
    "ceaf_e": "CEAF_e", "blanc": "BLANC", "lea": "LEA",
}


def format_report(report: MetricReport) -> str:
    lines = [f"{'metric':<8} {'P':>8} {'R':>8} {'F':>8}"]
    for name, prf in report.rows():
        lines.append(
            f"{_DISPLAY[name]:<8} {prf.precision:>8.4f} {prf.recall:>8.4f} {prf.f:>8.4f}"
        )
    lines.append(f"{'CoNLL':<8} {'':>8} {'':>8} {report.conll:>8.4f}")
    return "\n".join(lines)


def report_csv(report: MetricReport) -> str:
    lines = ["metric,precision,recall,f"]
    for name, prf in report.rows():
        lines.append(f"{name},{prf.precision:.6f},{prf.recall:.6f},{prf.f:.6f}")
    lines.append(f"conll,,,{report.conll:.6f}")
    return "\n".join(lines) + "\n"


def format_breakdown(breakdown: ErrorBreakdown) -> str:
    header = f"{'type':<12} {'FA':>6} {'FN':>6} {'WL':>6} {'correct':>8}"
    lines = [header]
    for t in MENTION_TYPES:
        lines.append(
            f"{t:<12} {breakdown.fa[t]:>6} {breakdown.fn[t]:>6} "
            f"{breakdown.wl[t]:>6} {breakdown.correct[t]:>8}"
        )
    lines.append(
        f"{'all':<12} {breakdown.total('fa'):>6} {breakdown.total('fn'):>6} "
        f"{breakdown.total('wl'):>6} {breakdown.total('correct'):>8}"
    )
    return "\n".join(lines)
