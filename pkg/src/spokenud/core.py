"""Data model for spoken-language UD sentences and the structural validators.

Node identifiers are either plain integers or dotted pairs (``6.1``); dotted
nodes stand for multiword expressions whose component rows stay in the
sentence unannotated. The root of a tree is a distinguished sentinel value,
never a node id, so renumbering can never collide with it.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class SpokenUdError(Exception):
    """Base class for all toolkit errors."""


class CycleFound(SpokenUdError):
    def __init__(self, members: Iterable["NodeId"]):
        self.members = tuple(members)
        ids = ", ".join(str(m) for m in self.members)
        super().__init__(f"head links form a cycle: {ids}")


# The 17 universal POS tags.
UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

# UD v2 universal relations; reparandum is the canonical label for speech
# repairs ("rep" is accepted on input and normalized).
UD_RELATIONS = frozenset({
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp",
    "clf", "compound", "conj", "cop", "csubj", "dep", "det", "discourse",
    "dislocated", "expl", "fixed", "flat", "goeswith", "iobj", "list",
    "mark", "nmod", "nsubj", "nummod", "obj", "obl", "orphan", "parataxis",
    "punct", "reparandum", "root", "vocative", "xcomp",
})

DEPREL_ALIASES = {"rep": "reparandum"}

# Relations excluded from content-labeled scoring (CoNLL 2018 convention).
FUNCTIONAL_RELATIONS = frozenset({
    "aux", "cop", "case", "det", "clf", "mark", "cc", "punct",
})

LANG_TAGS = ("eng", "spa", "mixed", "unknown")

SPOKEN_LABELS = ("reparandum", "dep", "discourse", "filler", "none")


def canonical_deprel(label: str) -> str:
    """Normalize input aliases (``rep`` -> ``reparandum``)."""
    return DEPREL_ALIASES.get(label, label)


def base_deprel(label: str) -> str:
    """Strip a language-specific subtype: ``aux:pass`` -> ``aux``."""
    return label.split(":", 1)[0]


def is_content_relation(deprel: str) -> bool:
    """True unless the relation (ignoring subtypes) is functional."""
    if not deprel:
        raise ValueError("empty dependency relation")
    return base_deprel(deprel) not in FUNCTIONAL_RELATIONS


@functools.total_ordering
@dataclass(frozen=True)
class NodeId:
    """Token identifier: a positive integer, optionally with a dotted minor.

    Ordering is lexicographic with an absent minor sorting first, so
    6 < 6.1 < 7.
    """

    major: int
    minor: int | None = None

    def __post_init__(self):
        if self.major < 1:
            raise ValueError(f"node major must be >= 1, got {self.major}")
        if self.minor is not None and self.minor < 1:
            raise ValueError(f"dotted minor must be >= 1, got {self.minor}")

    @property
    def is_dotted(self) -> bool:
        return self.minor is not None

    def _key(self) -> tuple[int, int]:
        return (self.major, -1 if self.minor is None else self.minor)

    def __lt__(self, other: "NodeId") -> bool:
        if not isinstance(other, NodeId):
            return NotImplemented
        return self._key() < other._key()

    def __str__(self) -> str:
        if self.minor is None:
            return str(self.major)
        return f"{self.major}.{self.minor}"

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        text = text.strip()
        if "." in text:
            major, _, minor = text.partition(".")
            return cls(int(major), int(minor))
        return cls(int(text))


class RootSentinel:
    """Distinguished head value marking the tree root; serialized as "0"."""

    _instance: "RootSentinel | None" = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ROOT"


ROOT = RootSentinel()


class Category(enum.Enum):
    """The ten benchmark categories, in report row order."""

    SIMPLE_REPETITION = "simple-repetition"
    COMPLEX_REPETITION = "complex-repetition"
    CONTRACTION_EN = "contraction-en"
    CONTRACTION_ES = "contraction-es"
    SIMPLE_ELLIPSIS = "simple-ellipsis"
    COMPLEX_ELLIPSIS = "complex-ellipsis"
    SIMPLE_DISCOURSE = "simple-discourse"
    COMPLEX_DISCOURSE = "complex-discourse"
    HIGHLY_COMPLEX = "highly-complex"
    NONE = "none"

    @classmethod
    def from_label(cls, label: str) -> "Category":
        for member in cls:
            if member.value == label:
                return member
        raise UnknownCategory(label)

    @property
    def display_label(self) -> str:
        return _CATEGORY_DISPLAY[self]


_CATEGORY_DISPLAY = {
    Category.SIMPLE_REPETITION: "Repetition",
    Category.COMPLEX_REPETITION: "Repetition+",
    Category.CONTRACTION_EN: "Contr. (EN)",
    Category.CONTRACTION_ES: "Contr. (ES)",
    Category.SIMPLE_ELLIPSIS: "Ellipsis",
    Category.COMPLEX_ELLIPSIS: "Ellipsis+",
    Category.SIMPLE_DISCOURSE: "Discourse",
    Category.COMPLEX_DISCOURSE: "Discourse+",
    Category.HIGHLY_COMPLEX: "Complex",
    Category.NONE: "None",
}


class UnknownCategory(SpokenUdError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown category label: {label!r}")


@dataclass(frozen=True)
class Token:
    """One annotated node of a spoken-UD sentence."""

    id: NodeId
    form: str
    orig_token_index: int | None = None
    lemma: str | None = None
    upos: str | None = None
    head: NodeId | RootSentinel | None = None
    deprel: str | None = None
    lang_tag: str = "unknown"
    spoken_label: str | None = None
    spoken_anchor: NodeId | None = None
    confidences: Mapping[str, float] = field(default_factory=dict)
    penalty: float = 0.0
    notes: str = ""

    def __post_init__(self):
        if isinstance(self.head, NodeId) and self.head == self.id:
            raise ValueError(f"token {self.id} cannot be its own head")
        if self.lang_tag not in LANG_TAGS:
            raise ValueError(f"unknown language tag: {self.lang_tag!r}")
        if self.spoken_label is not None and self.spoken_label not in SPOKEN_LABELS:
            raise ValueError(f"unknown spoken label: {self.spoken_label!r}")
        if not 0.0 <= self.penalty <= 1.0:
            raise ValueError(f"penalty must be in [0,1], got {self.penalty}")
        for stage, value in self.confidences.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"confidence {stage}={value} outside [0,1]")


@dataclass(frozen=True)
class Sentence:
    """An ordered sequence of tokens plus sentence-level metadata."""

    sentence_id: str
    tokens: tuple[Token, ...]
    category: Category | None = None
    metadata: Mapping[str, object] = field(default_factory=dict)

    def token_index(self) -> dict[NodeId, Token]:
        return {t.id: t for t in self.tokens}


def mwe_component_ids(sentence: Sentence) -> set[NodeId]:
    """Integer node ids covered by a dotted MWE node's span.

    The span of a dotted node starts at its own major and covers as many
    integer rows as the node's form has underscore-separated components.
    """
    covered: set[NodeId] = set()
    present = {t.id for t in sentence.tokens}
    for token in sentence.tokens:
        if not token.id.is_dotted:
            continue
        width = token.form.count("_") + 1
        for major in range(token.id.major, token.id.major + width):
            candidate = NodeId(major)
            if candidate in present:
                covered.add(candidate)
    return covered


def annotatable_tokens(sentence: Sentence) -> list[Token]:
    """Tokens that carry annotations: everything except MWE component rows."""
    components = mwe_component_ids(sentence)
    return [t for t in sentence.tokens if t.id not in components]


class IssueCode(enum.Enum):
    NO_ROOT = "NoRoot"
    MULTIPLE_ROOTS = "MultipleRoots"
    CYCLE = "Cycle"
    DANGLING_HEAD = "DanglingHead"
    DANGLING_ANCHOR = "DanglingAnchor"
    ID_ORDER = "IdOrder"
    MWE_COMPONENT_ANNOTATED = "MweComponentAnnotated"


@dataclass(frozen=True)
class ValidationIssue:
    code: IssueCode
    node_ids: tuple[NodeId, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple[ValidationIssue, ...]

    @classmethod
    def from_issues(cls, issues: Iterable[ValidationIssue]) -> "ValidationReport":
        issues = tuple(issues)
        return cls(ok=not issues, issues=issues)


def validate_tree(sentence: Sentence) -> ValidationReport:
    """Check structural well-formedness; reports problems, never raises.

    Detects missing/multiple roots, dangling head references, missing heads
    on annotatable rows, head-link cycles, out-of-order node ids, dangling
    spoken anchors, and annotations on MWE component rows.
    """
    issues: list[ValidationIssue] = []
    tokens = sentence.tokens
    present = {t.id for t in tokens}
    components = mwe_component_ids(sentence)

    for prev, cur in zip(tokens, tokens[1:]):
        if not prev.id < cur.id:
            issues.append(ValidationIssue(
                IssueCode.ID_ORDER, (prev.id, cur.id),
                f"node id {cur.id} does not increase after {prev.id}"))

    roots = [t for t in tokens if isinstance(t.head, RootSentinel)]
    if not roots:
        issues.append(ValidationIssue(IssueCode.NO_ROOT, (), "no root node"))
    elif len(roots) > 1:
        issues.append(ValidationIssue(
            IssueCode.MULTIPLE_ROOTS, tuple(t.id for t in roots),
            f"{len(roots)} root nodes"))

    for token in tokens:
        if isinstance(token.head, NodeId) and token.head not in present:
            issues.append(ValidationIssue(
                IssueCode.DANGLING_HEAD, (token.id,),
                f"head {token.head} of {token.id} does not exist"))
        elif token.head is None and token.id not in components:
            issues.append(ValidationIssue(
                IssueCode.DANGLING_HEAD, (token.id,),
                f"annotatable node {token.id} has no head"))
        if token.spoken_anchor is not None and token.spoken_anchor not in present:
            issues.append(ValidationIssue(
                IssueCode.DANGLING_ANCHOR, (token.id,),
                f"spoken anchor {token.spoken_anchor} of {token.id} does not exist"))

    for cycle in _head_cycles(tokens, present):
        issues.append(ValidationIssue(
            IssueCode.CYCLE, tuple(cycle),
            "head links form a cycle: " + ", ".join(str(n) for n in cycle)))

    for token in tokens:
        if token.id in components and (
                token.upos is not None or token.head is not None
                or token.deprel is not None):
            issues.append(ValidationIssue(
                IssueCode.MWE_COMPONENT_ANNOTATED, (token.id,),
                f"MWE component row {token.id} carries annotations"))

    return ValidationReport.from_issues(issues)


def _head_cycles(tokens: Iterable[Token],
                 present: set[NodeId]) -> list[list[NodeId]]:
    """All disjoint cycles in the head link graph, sorted by smallest member."""
    head_of = {t.id: t.head for t in tokens
               if isinstance(t.head, NodeId) and t.head in present}
    color: dict[NodeId, int] = {}  # 1 = on current path, 2 = done
    cycles: list[list[NodeId]] = []
    for start in head_of:
        if color.get(start):
            continue
        path: list[NodeId] = []
        node: NodeId | None = start
        while node is not None and node in head_of and not color.get(node):
            color[node] = 1
            path.append(node)
            node = head_of[node]
        if node is not None and color.get(node) == 1:
            cycles.append(sorted(path[path.index(node):]))
        for visited in path:
            color[visited] = 2
    cycles.sort(key=lambda c: (len(c), c[0]._key()))
    return cycles


def topological_order(sentence: Sentence) -> list[NodeId]:
    """Head-before-dependent ordering of all node ids.

    Raises CycleFound carrying the smallest cycle when the head links are
    cyclic. Requires that no head reference dangles.
    """
    present = {t.id for t in sentence.tokens}
    cycles = _head_cycles(sentence.tokens, present)
    if cycles:
        raise CycleFound(cycles[0])
    children: dict[NodeId, list[NodeId]] = {t.id: [] for t in sentence.tokens}
    order: list[NodeId] = []
    queue: list[NodeId] = []
    for token in sentence.tokens:
        if isinstance(token.head, NodeId):
            children[token.head].append(token.id)
        else:
            queue.append(token.id)
    while queue:
        node = queue.pop(0)
        order.append(node)
        queue.extend(children[node])
    return order
