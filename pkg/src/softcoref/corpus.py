"""Documents, synthetic corpora, and corpus / key-file input-output.

A corpus file holds one JSON record per line (one document per record)::

    {"id": "doc-0000", "d_a": 12, "d_p": 14,
     "mentions": [{"index": 1, "type": "proper", "gold_entity": 1,
                   "features_a": [...]}, ...],
     "pairs": [{"j": 1, "i": 2, "features": [...]}, ...]}

``gold_entity`` is the index of the first mention of the entity the
mention belongs to (equal to the mention's own index when the mention
opens a new entity; the string ``"new"`` is accepted as a synonym on
load).  ``pairs`` must contain every ordered pair ``j < i``.

Key files use a minimal CoNLL skeleton: ``#begin document (<id>)`` /
``#end document`` blocks whose last whitespace-separated column carries
coreference brackets ``(e``, ``e)``, ``(e)``, possibly ``|``-separated.
All other columns are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, FormatError, InputError

MENTION_TYPES = ("proper", "nominal", "pronominal")
MAX_MENTIONS = 64

# Sampling priors for mention types: entity-opening mentions tend to be
# proper/nominal, anaphoric ones pronominal.
_TYPE_PRIOR_FIRST = (0.6, 0.3, 0.1)
_TYPE_PRIOR_LATER = (0.15, 0.35, 0.5)
# Mention-distance buckets for pair features: 1, 2-3, 4-7, 8+.
_DISTANCE_EDGES = (1, 3, 7)


class Clustering:
    """A partition of the 1-based mention indices 1..n into entities.

    Clusters are nonempty, pairwise disjoint and together cover 1..n.
    The empty clustering (no mentions at all) is allowed.
    """

    __slots__ = ("clusters",)

    def __init__(self, clusters: Iterable[Iterable[int]] = ()):
        sets = []
        for cluster in clusters:
            fs = frozenset(int(m) for m in cluster)
            if not fs:
                raise InputError("clusters must be nonempty")
            sets.append(fs)
        self.clusters: frozenset[frozenset[int]] = frozenset(sets)
        total = sum(len(c) for c in self.clusters)
        union = frozenset().union(*self.clusters) if self.clusters else frozenset()
        if len(union) != total:
            raise InputError("clusters must be disjoint")
        if union and union != frozenset(range(1, max(union) + 1)):
            raise InputError("clusters must cover the contiguous index range 1..n")

    @property
    def num_mentions(self) -> int:
        return sum(len(c) for c in self.clusters)

    @property
    def mention_set(self) -> frozenset[int]:
        if not self.clusters:
            return frozenset()
        return frozenset().union(*self.clusters)

    def sorted_clusters(self) -> list[frozenset[int]]:
        """Clusters in deterministic order (by their first mention)."""
        return sorted(self.clusters, key=min)

    def entity_ids(self) -> dict[int, int]:
        """Map mention index -> index of the first mention of its entity."""
        ids = {}
        for cluster in self.clusters:
            first = min(cluster)
            for m in cluster:
                ids[m] = first
        return ids

    def __eq__(self, other) -> bool:
        return isinstance(other, Clustering) and self.clusters == other.clusters

    def __hash__(self) -> int:
        return hash(self.clusters)

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.sorted_clusters())

    def __repr__(self) -> str:
        inner = ", ".join("{" + ", ".join(map(str, sorted(c))) + "}" for c in self.sorted_clusters())
        return f"Clustering({{{inner}}})"


def clusters_from_entity_ids(entity_ids: Sequence[int]) -> Clustering:
    """Build a Clustering from per-mention first-mention entity ids."""
    groups: dict[int, list[int]] = {}
    for i, e in enumerate(entity_ids, start=1):
        groups.setdefault(int(e), []).append(i)
    return Clustering(groups.values())


@dataclass(frozen=True, eq=False)
class Mention:
    index: int
    mention_type: str
    gold_entity: int
    features_a: np.ndarray

    def __post_init__(self):
        if self.mention_type not in MENTION_TYPES:
            raise InputError(f"unknown mention type {self.mention_type!r}")

    @property
    def starts_new_entity(self) -> bool:
        return self.gold_entity == self.index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Mention)
            and self.index == other.index
            and self.mention_type == other.mention_type
            and self.gold_entity == other.gold_entity
            and np.array_equal(self.features_a, other.features_a)
        )


@dataclass(eq=False)
class Document:
    """An ordered mention list with per-mention and per-pair features.

    Immutable after construction; the cached feature matrices make it
    safe and cheap to share across repeated loss evaluations.
    """

    id: str
    mentions: tuple[Mention, ...]
    pair_features: dict[tuple[int, int], np.ndarray]
    gold_clusters: Clustering

    @classmethod
    def from_mentions(cls, doc_id: str, mentions: Sequence[Mention],
                      pair_features: dict[tuple[int, int], np.ndarray]) -> "Document":
        """Build a document, deriving gold clusters from mention labels."""
        gold = clusters_from_entity_ids([m.gold_entity for m in mentions])
        return cls(doc_id, tuple(mentions), dict(pair_features), gold)

    @property
    def n(self) -> int:
        return len(self.mentions)

    @property
    def d_a(self) -> int:
        return len(self.mentions[0].features_a) if self.mentions else 0

    @property
    def d_p(self) -> int:
        if not self.pair_features:
            return 0
        return len(next(iter(self.pair_features.values())))

    def validate(self) -> None:
        n = self.n
        if n == 0:
            raise InputError(f"document {self.id}: no mentions")
        if [m.index for m in self.mentions] != list(range(1, n + 1)):
            raise InputError(f"document {self.id}: mention indices not contiguous 1..n")
        d_a = self.d_a
        if d_a < 1:
            raise InputError(f"document {self.id}: empty mention features")
        for m in self.mentions:
            if len(m.features_a) != d_a:
                raise InputError(f"document {self.id}: inconsistent d_a at mention {m.index}")
        expected = {(j, i) for i in range(2, n + 1) for j in range(1, i)}
        if set(self.pair_features) != expected:
            missing = expected - set(self.pair_features)
            extra = set(self.pair_features) - expected
            detail = f"missing {sorted(missing)[:3]}" if missing else f"unexpected {sorted(extra)[:3]}"
            raise InputError(f"document {self.id}: pair features not defined for exactly all j < i ({detail})")
        if n > 1:
            d_p = self.d_p
            if d_p < 1:
                raise InputError(f"document {self.id}: empty pair features")
            for key, feats in self.pair_features.items():
                if len(feats) != d_p:
                    raise InputError(f"document {self.id}: inconsistent d_p at pair {key}")
        if self.gold_clusters.num_mentions != n:
            raise InputError(f"document {self.id}: gold clusters do not cover 1..n")
        firsts = self.gold_clusters.entity_ids()
        for m in self.mentions:
            if m.gold_entity != firsts[m.index]:
                raise InputError(
                    f"document {self.id}: mention {m.index} gold_entity {m.gold_entity} "
                    f"inconsistent with gold clusters (expected {firsts[m.index]})"
                )

    @cached_property
    def gold_entity_array(self) -> np.ndarray:
        """e(m_i) for every mention, 1-based."""
        return np.array([m.gold_entity for m in self.mentions], dtype=np.int64)

    def is_anaphoric(self, i: int) -> bool:
        """Whether mention i (1-based) has a true earlier antecedent."""
        return self.mentions[i - 1].gold_entity < i

    def correct_antecedents(self, i: int) -> frozenset[int]:
        """The candidate set C(m_i): earlier mentions of the same entity,
        or {i} itself when the mention opens its entity."""
        return self.candidate_sets[i - 1]

    @cached_property
    def candidate_sets(self) -> tuple[frozenset[int], ...]:
        ids = self.gold_entity_array
        sets = []
        for i in range(1, self.n + 1):
            earlier = [j for j in range(1, i) if ids[j - 1] == ids[i - 1]]
            sets.append(frozenset(earlier) if earlier else frozenset({i}))
        return tuple(sets)

    @cached_property
    def mention_feature_matrix(self) -> np.ndarray:
        return np.stack([np.asarray(m.features_a, dtype=float) for m in self.mentions])

    @cached_property
    def tril_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based (i, j) index arrays for all pairs j < i, row-major."""
        return np.tril_indices(self.n, k=-1)

    @cached_property
    def pair_feature_matrix(self) -> np.ndarray:
        """Pair features stacked in ``tril_pairs`` order, shape (n_pairs, d_p)."""
        rows_i, cols_j = self.tril_pairs
        if len(rows_i) == 0:
            return np.zeros((0, max(self.d_p, 1)))
        return np.stack([
            np.asarray(self.pair_features[(int(j) + 1, int(i) + 1)], dtype=float)
            for i, j in zip(rows_i, cols_j)
        ])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Document):
            return False
        if self.id != other.id or self.mentions != other.mentions:
            return False
        if set(self.pair_features) != set(other.pair_features):
            return False
        for key, feats in self.pair_features.items():
            if not np.array_equal(feats, other.pair_features[key]):
                return False
        return self.gold_clusters == other.gold_clusters


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticConfig:
    num_docs: int
    mentions_per_doc: tuple[int, int] = (4, 12)
    entities_per_doc: tuple[int, int] = (2, 4)
    d_a: int = 12
    d_p: int = 14
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.mentions_per_doc
        elo, ehi = self.entities_per_doc
        if self.num_docs < 0:
            raise ConfigError("num_docs must be nonnegative")
        if not (1 <= lo <= hi):
            raise ConfigError(f"empty mentions_per_doc range {self.mentions_per_doc}")
        if hi > MAX_MENTIONS:
            raise ConfigError(f"mentions_per_doc upper bound exceeds {MAX_MENTIONS}")
        if not (1 <= elo <= ehi):
            raise ConfigError(f"empty entities_per_doc range {self.entities_per_doc}")
        if self.d_a < 1 or self.d_p < 1:
            raise ConfigError("feature dimensions must be at least 1")
        if self.noise < 0:
            raise ConfigError("noise level must be nonnegative")


def _fit_length(vec: np.ndarray, d: int) -> np.ndarray:
    if len(vec) >= d:
        return vec[:d]
    return np.concatenate([vec, np.zeros(d - len(vec))])


def _one_hot(k: int, size: int) -> np.ndarray:
    v = np.zeros(size)
    v[k] = 1.0
    return v


def _distance_bucket(d: int) -> int:
    for b, edge in enumerate(_DISTANCE_EDGES):
        if d <= edge:
            return b
    return len(_DISTANCE_EDGES)


def generate_synthetic(config: SyntheticConfig) -> list[Document]:
    """Generate a deterministic corpus of feature-annotated documents.

    Each document draws latent entities with Gaussian prototype vectors.
    Mention features are ``[prototype slice | type one-hot | 1/i, i/n]``
    truncated/padded to ``d_a``; pair features are ``[prototype cosine
    similarity | distance-bucket one-hot | type-pair one-hot]`` fit to
    ``d_p``.  Gaussian noise of scale ``config.noise`` is added to every
    coordinate.
    """
    rng = np.random.default_rng(config.seed)
    proto_dim = max(1, config.d_a - 5)
    lo, hi = config.mentions_per_doc
    elo, ehi = config.entities_per_doc
    docs = []
    for d in range(config.num_docs):
        n = int(rng.integers(lo, hi + 1))
        k = min(int(rng.integers(elo, ehi + 1)), n)
        protos = rng.normal(size=(k, proto_dim))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        rng.shuffle(labels)

        first_of_label: dict[int, int] = {}
        mentions = []
        type_ids = []
        for i in range(1, n + 1):
            lab = int(labels[i - 1])
            opens = lab not in first_of_label
            first_of_label.setdefault(lab, i)
            prior = _TYPE_PRIOR_FIRST if opens else _TYPE_PRIOR_LATER
            t = int(rng.choice(len(MENTION_TYPES), p=prior))
            type_ids.append(t)
            canonical = np.concatenate([
                protos[lab],
                _one_hot(t, 3),
                np.array([1.0 / i, i / n]),
            ])
            feats = _fit_length(canonical, config.d_a) + rng.normal(0.0, config.noise, config.d_a)
            mentions.append(Mention(i, MENTION_TYPES[t], first_of_label[lab], feats))

        # cosine similarity: exactly 1 for same-entity pairs, so the
        # linking signal is separable before noise is added
        norms = np.linalg.norm(protos, axis=1)
        pair_features = {}
        for i in range(2, n + 1):
            for j in range(1, i):
                li, lj = int(labels[i - 1]), int(labels[j - 1])
                sim = float(protos[li] @ protos[lj]) / float(norms[li] * norms[lj])
                canonical = np.concatenate([
                    np.array([sim]),
                    _one_hot(_distance_bucket(i - j), len(_DISTANCE_EDGES) + 1),
                    _one_hot(type_ids[j - 1] * 3 + type_ids[i - 1], 9),
                ])
                pair_features[(j, i)] = (
                    _fit_length(canonical, config.d_p)
                    + rng.normal(0.0, config.noise, config.d_p)
                )

        docs.append(Document.from_mentions(f"doc-{d:04d}", mentions, pair_features))
    return docs


# ---------------------------------------------------------------------------
# Corpus file I/O
# ---------------------------------------------------------------------------

def _doc_record(doc: Document) -> dict:
    return {
        "id": doc.id,
        "d_a": doc.d_a,
        "d_p": doc.d_p,
        "mentions": [
            {
                "index": m.index,
                "type": m.mention_type,
                "gold_entity": m.gold_entity,
                "features_a": np.asarray(m.features_a, dtype=float).tolist(),
            }
            for m in doc.mentions
        ],
        "pairs": [
            {"j": j, "i": i, "features": np.asarray(f, dtype=float).tolist()}
            for (j, i), f in sorted(doc.pair_features.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ],
    }


def save_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(_doc_record(doc)))
            fh.write("\n")


def _doc_from_record(record: dict, path, lineno: int) -> Document:
    try:
        mentions = []
        for m in record["mentions"]:
            gold = m["gold_entity"]
            if gold == "new":
                gold = m["index"]
            mentions.append(Mention(
                int(m["index"]), str(m["type"]), int(gold),
                np.asarray(m["features_a"], dtype=float),
            ))
        pair_features = {
            (int(p["j"]), int(p["i"])): np.asarray(p["features"], dtype=float)
            for p in record["pairs"]
        }
        doc = Document.from_mentions(str(record["id"]), mentions, pair_features)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad document record: {exc}", path=path, line=lineno) from exc
    except InputError as exc:
        raise FormatError(str(exc), path=path, line=lineno) from exc
    try:
        doc.validate()
    except InputError as exc:
        raise FormatError(str(exc), path=path, line=lineno) from exc
    if doc.d_a != record.get("d_a") or (doc.n > 1 and doc.d_p != record.get("d_p")):
        raise FormatError(
            f"declared dimensions ({record.get('d_a')}, {record.get('d_p')}) do not match features",
            path=path, line=lineno,
        )
    return doc


def load_corpus(path) -> list[Document]:
    docs = []
    dims = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", path=path, line=lineno) from exc
            doc = _doc_from_record(record, path, lineno)
            doc_dims = (doc.d_a, doc.d_p if doc.n > 1 else None)
            if dims is None:
                dims = doc_dims
            elif doc_dims[0] != dims[0] or (doc_dims[1] is not None and dims[1] is not None
                                            and doc_dims[1] != dims[1]):
                raise FormatError(
                    f"dimension mismatch across documents: {doc_dims} vs {dims}",
                    path=path, line=lineno,
                )
            docs.append(doc)
    return docs


# ---------------------------------------------------------------------------
# Minimal CoNLL key / response files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConllDocument:
    doc_id: str
    spans: tuple[tuple[int, int], ...]  # token (start, end) per mention, in mention order
    clustering: Clustering


def _parse_bracket_field(field: str):
    """Yield ("open"|"close"|"both", entity_id) for each bracket in a field."""
    if field in ("-", "_", ""):
        return
    for part in field.split("|"):
        if not part:
            continue
        opens = part.startswith("(")
        closes = part.endswith(")")
        body = part[1 if opens else 0: -1 if closes else len(part)]
        if not body.isdigit() or not (opens or closes):
            raise ValueError(f"unrecognized coreference tag {part!r}")
        kind = "both" if (opens and closes) else ("open" if opens else "close")
        yield kind, int(body)


def parse_conll_documents(path) -> list[ConllDocument]:
    """Parse a minimal CoNLL skeleton file into per-document mentions.

    Mentions are numbered in order of their opening bracket; nested and
    crossing spans are resolved by matching brackets per entity id.
    """
    docs: list[ConllDocument] = []
    doc_id = None
    token_no = 0
    open_stacks: dict[int, list[tuple[int, int]]] = {}
    found: list[tuple[int, int, int, int]] = []  # (open_order, entity, start, end)
    open_order = 0

    def finish(lineno):
        nonlocal doc_id, token_no, open_stacks, found, open_order
        if any(stack for stack in open_stacks.values()):
            entity = next(e for e, s in open_stacks.items() if s)
            raise FormatError(
                f"unbalanced brackets in document {doc_id!r}: entity {entity} left open",
                path=path, line=lineno,
            )
        found.sort()
        spans = tuple((start, end) for _, _, start, end in found)
        if len(set(spans)) != len(spans):
            raise FormatError(f"duplicate mention span in document {doc_id!r}", path=path, line=lineno)
        by_entity: dict[int, list[int]] = {}
        for number, (_, entity, _, _) in enumerate(found, start=1):
            by_entity.setdefault(entity, []).append(number)
        docs.append(ConllDocument(doc_id, spans, Clustering(by_entity.values())))
        doc_id = None
        token_no = 0
        open_stacks = {}
        found = []
        open_order = 0

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#begin document"):
                rest = line[len("#begin document"):].strip()
                if rest.startswith("("):
                    close = rest.find(")")
                    doc_id = rest[1:close] if close != -1 else rest[1:]
                else:
                    doc_id = rest
                continue
            if line.startswith("#end document"):
                if doc_id is None:
                    raise FormatError("#end document without #begin", path=path, line=lineno)
                finish(lineno)
                continue
            if doc_id is None or not line.strip():
                continue
            token_no += 1
            field = line.split()[-1]
            try:
                brackets = list(_parse_bracket_field(field))
            except ValueError as exc:
                raise FormatError(f"document {doc_id!r}: {exc}", path=path, line=lineno) from exc
            for kind, entity in brackets:
                if kind in ("open", "both"):
                    open_stacks.setdefault(entity, []).append((open_order, token_no))
                    open_order += 1
                if kind in ("close", "both"):
                    stack = open_stacks.get(entity)
                    if not stack:
                        raise FormatError(
                            f"unbalanced brackets in document {doc_id!r}: "
                            f"closing entity {entity} that is not open",
                            path=path, line=lineno,
                        )
                    order, start = stack.pop()
                    found.append((order, entity, start, token_no))
    if doc_id is not None:
        raise FormatError(f"document {doc_id!r} not terminated by #end document", path=path)
    return docs


def parse_conll_key(path) -> list[tuple[str, Clustering]]:
    """Parse a key file, returning one (doc id, Clustering) per document."""
    return [(d.doc_id, d.clustering) for d in parse_conll_documents(path)]


def write_conll_responses(items: Iterable[tuple[str, Clustering]], path) -> None:
    """Write clusterings as one-token-per-mention CoNLL response blocks."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, clustering in items:
            fh.write(f"#begin document ({doc_id}); part 000\n")
            entity_of = {}
            for cid, cluster in enumerate(clustering.sorted_clusters()):
                for m in cluster:
                    entity_of[m] = cid
            for i in range(1, clustering.num_mentions + 1):
                fh.write(f"w{i}\t({entity_of[i]})\n")
            fh.write("#end document\n")


def write_conll_response(doc_id: str, clustering: Clustering, path) -> None:
    write_conll_responses([(doc_id, clustering)], path)
