"""Attachment-based metrics (LAS, UAS, CLAS, UPOS accuracy) over an alignment.

Scoring is gold-anchored: every gold annotatable token enters the
denominators, unaligned gold tokens score zero, and tokens the system
invented never inflate a denominator (they are reported as system_extra).
Category aggregation micro-averages by summing counts before dividing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .core import (
    Category,
    NodeId,
    ROOT,
    RootSentinel,
    Sentence,
    SpokenUdError,
    annotatable_tokens,
    is_content_relation,
)
from .reporting import Table

STANDARD_TABLE_COLUMNS = ("Category", "LAS", "UAS", "CLAS", "U-LAS")


class AlignmentMismatch(SpokenUdError):
    pass


@dataclass(frozen=True)
class AttachmentCounts:
    gold_total: int = 0
    aligned: int = 0
    head_correct: int = 0
    labeled_correct: int = 0
    content_gold: int = 0
    content_labeled_correct: int = 0
    upos_correct: int = 0
    system_extra: int = 0

    def __add__(self, other: "AttachmentCounts") -> "AttachmentCounts":
        return AttachmentCounts(*(a + b for a, b in
                                  zip(self._astuple(), other._astuple())))

    def _astuple(self) -> tuple[int, ...]:
        return (self.gold_total, self.aligned, self.head_correct,
                self.labeled_correct, self.content_gold,
                self.content_labeled_correct, self.upos_correct,
                self.system_extra)


@dataclass(frozen=True)
class StandardScores:
    las: float
    uas: float
    clas: float
    upos_acc: float
    counts: AttachmentCounts
    undefined: tuple[str, ...] = ()  # ratios whose denominator was zero

    @classmethod
    def from_counts(cls, counts: AttachmentCounts) -> "StandardScores":
        undefined = []

        def ratio(name: str, numerator: int, denominator: int) -> float:
            if denominator == 0:
                undefined.append(name)
                return 0.0
            return numerator / denominator

        las = ratio("las", counts.labeled_correct, counts.gold_total)
        uas = ratio("uas", counts.head_correct, counts.gold_total)
        clas = ratio("clas", counts.content_labeled_correct, counts.content_gold)
        upos_acc = ratio("upos_acc", counts.upos_correct, counts.gold_total)
        return cls(las=las, uas=uas, clas=clas, upos_acc=upos_acc,
                   counts=counts, undefined=tuple(undefined))


def attachment_scores(gold: Sentence, system: Sentence, alignment) -> StandardScores:
    """Score a system parse against gold over an existing token alignment.

    A gold token is UAS-correct iff it is one-one aligned and the aligned
    token's head maps one-one onto the gold head (root matches root);
    LAS additionally requires an exact DEPREL string match.
    """
    gold_ids = {t.id for t in gold.tokens}
    system_ids = {t.id for t in system.tokens}
    for link in alignment.links:
        if not set(link.gold_ids) <= gold_ids or not set(link.system_ids) <= system_ids:
            raise AlignmentMismatch(
                f"alignment references unknown node ids: {link}")

    gold_to_system: dict[NodeId, NodeId] = {}
    system_to_gold: dict[NodeId, NodeId] = {}
    for link in alignment.links:
        if link.kind == "one_one":
            gold_to_system[link.gold_ids[0]] = link.system_ids[0]
            system_to_gold[link.system_ids[0]] = link.gold_ids[0]

    system_by_id = system.token_index()
    counts = AttachmentCounts()
    for token in annotatable_tokens(gold):
        content = bool(token.deprel) and is_content_relation(token.deprel)
        aligned = token.id in gold_to_system
        head_ok = label_ok = upos_ok = False
        if aligned:
            partner = system_by_id[gold_to_system[token.id]]
            upos_ok = partner.upos == token.upos
            resolved = _resolve_head(partner.head, system_to_gold)
            if isinstance(token.head, RootSentinel):
                head_ok = resolved is ROOT
            elif isinstance(token.head, NodeId):
                head_ok = resolved == token.head
            label_ok = head_ok and partner.deprel == token.deprel
        counts += AttachmentCounts(
            gold_total=1,
            aligned=int(aligned),
            head_correct=int(head_ok),
            labeled_correct=int(label_ok),
            content_gold=int(content),
            content_labeled_correct=int(content and label_ok),
            upos_correct=int(upos_ok),
        )
    extra = sum(1 for t in annotatable_tokens(system) if t.id not in system_to_gold)
    counts += AttachmentCounts(system_extra=extra)
    return StandardScores.from_counts(counts)


def _resolve_head(head, system_to_gold):
    if isinstance(head, RootSentinel):
        return ROOT
    if isinstance(head, NodeId):
        return system_to_gold.get(head)
    return None


@dataclass(frozen=True)
class SentenceResult:
    sentence_id: str
    category: Category | None
    scores: StandardScores


@dataclass(frozen=True)
class CategoryTable:
    """Per-category micro-averaged scores plus an Overall row."""

    per_category: tuple[tuple[Category, int, StandardScores | None], ...]
    overall: StandardScores
    total_sentences: int

    def to_table(self) -> Table:
        rows = []
        for category, n, scores in self.per_category:
            rows.append((category.display_label,) + _score_cells(scores))
        rows.append(("Overall",) + _score_cells(self.overall))
        return Table(STANDARD_TABLE_COLUMNS, tuple(rows))

    def to_markdown(self) -> str:
        return self.to_table().to_markdown()

    def to_csv(self) -> str:
        return self.to_table().to_csv()


def _score_cells(scores: StandardScores | None) -> tuple[str, ...]:
    if scores is None:
        return ("-", "-", "-", "-")
    return (f"{scores.las:.2f}", f"{scores.uas:.2f}",
            f"{scores.clas:.2f}", f"{scores.upos_acc:.2f}")


def aggregate_by_category(results: Iterable[SentenceResult]) -> CategoryTable:
    """Micro-average per category; rows follow the fixed category order and
    end with None then Overall."""
    results = list(results)
    seen: set[str] = set()
    for result in results:
        if result.sentence_id in seen:
            raise SpokenUdError(f"duplicate sentence id: {result.sentence_id}")
        seen.add(result.sentence_id)

    sums: dict[Category, AttachmentCounts] = {}
    counts: dict[Category, int] = {}
    total = AttachmentCounts()
    for result in results:
        total += result.scores.counts
        if result.category is None:
            continue
        sums[result.category] = sums.get(result.category, AttachmentCounts()) \
            + result.scores.counts
        counts[result.category] = counts.get(result.category, 0) + 1

    per_category = []
    for category in Category:
        if category in sums:
            per_category.append((category, counts[category],
                                 StandardScores.from_counts(sums[category])))
        else:
            per_category.append((category, 0, None))
    return CategoryTable(tuple(per_category),
                         overall=StandardScores.from_counts(total),
                         total_sentences=len(results))
