"""Severity-aware composite evaluation of dependency parses.

The scorer aligns gold and system tokens under splits, merges and dotted MWE
nodes, computes five component scores (tokenization split agreement, id
positions, UPOS, heads, relations) on a 1..100 scale with graded tolerances,
detects catastrophic and minor issues into a bounded penalty P, and
aggregates: final = round(sum(w_i * s_i) * (1 - P)), rounding half-up.

Arithmetic that feeds the final rounding is done exactly over the decimal
values the configuration states (0.95 means 0.95, not its float neighbour),
so borderline cases like round(2.5) behave as documented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    Category,
    NodeId,
    ROOT,
    RootSentinel,
    Sentence,
    SpokenUdError,
    annotatable_tokens,
    base_deprel,
    mwe_component_ids,
    validate_tree,
    IssueCode,
)
from .reporting import Table

LINK_KINDS = ("one_one", "gold_split", "system_split", "mwe",
              "unaligned_gold", "unaligned_system")

FLEX_TABLE_COLUMNS = ("Category", "ID", "UPOS", "HEAD", "DEPREL", "Final")
FLEX_TABLE_COLUMNS_EXTENDED = ("Category", "Split", "ID", "UPOS", "HEAD",
                               "DEPREL", "Final")

# Longest token run one token on the other side may align against.
MAX_RUN = 4


class WeightSumInvalid(SpokenUdError):
    pass


def _exact(value: float | int | str) -> Fraction:
    """The decimal value a float's shortest repr denotes, as a fraction."""
    return Fraction(Decimal(str(value)))


def half_up(value: Fraction) -> int:
    """Round to the nearest integer, halves away from zero (non-negative)."""
    return int(value + Fraction(1, 2))


# --- alignment ---------------------------------------------------------------

@dataclass(frozen=True)
class AlignmentLink:
    gold_ids: tuple[NodeId, ...]
    system_ids: tuple[NodeId, ...]
    kind: str

    def __post_init__(self):
        if self.kind not in LINK_KINDS:
            raise ValueError(f"unknown link kind {self.kind!r}")


@dataclass(frozen=True)
class Alignment:
    links: tuple[AlignmentLink, ...]

    def one_one(self) -> dict[NodeId, NodeId]:
        return {l.gold_ids[0]: l.system_ids[0]
                for l in self.links if l.kind == "one_one"}


# Full-form rewrites applied before the generic n't rule; values are the
# concatenation the split parts normalize to.
DEFAULT_CONTRACTIONS = {
    "won't": "willnot",
    "can't": "cannot",
    "del": "deel",
    "al": "ael",
}


@dataclass(frozen=True)
class ToleranceConfig:
    """Graded tolerances: tag pairs and relation classes with partial credit."""

    upos_pairs: frozenset[frozenset] = frozenset({
        frozenset({"VERB", "AUX"}),
        frozenset({"DET", "PRON"}),
        frozenset({"PROPN", "NOUN"}),
    })
    deprel_classes: tuple[frozenset, ...] = (
        frozenset({"obj", "obl", "iobj"}),
        frozenset({"advmod", "discourse"}),
        frozenset({"ccomp", "xcomp"}),
    )
    upos_credit: float = 0.8
    deprel_credit: float = 0.8
    contraction_table: dict = field(default_factory=lambda: dict(DEFAULT_CONTRACTIONS))

    def upos_pair_credit(self, a: str | None, b: str | None) -> Fraction | None:
        if a is None or b is None:
            return None
        if frozenset({a, b}) in self.upos_pairs:
            return _exact(self.upos_credit)
        return None

    def deprel_class_credit(self, a: str | None, b: str | None) -> Fraction | None:
        if a is None or b is None:
            return None
        a, b = base_deprel(a), base_deprel(b)
        for cls in self.deprel_classes:
            if a in cls and b in cls:
                return _exact(self.deprel_credit)
        return None


DEFAULT_TOLERANCE = ToleranceConfig()


def normalize_form(form: str, contractions: dict | None = None) -> str:
    """Lowercase, expand standard contractions, drop apostrophes/underscores."""
    table = DEFAULT_CONTRACTIONS if contractions is None else contractions
    s = form.lower().replace("_", "")
    if s in table:
        s = table[s]
    elif s.endswith("n't"):
        s = s[:-3] + "not"
    return s.replace("'", "").replace("’", "")


def align_tokens(gold: Sentence, system: Sentence,
                 tolerance: ToleranceConfig = DEFAULT_TOLERANCE) -> Alignment:
    """Align gold and system tokens minimizing edit cost over normalized forms.

    One token may align against a contiguous run on the other side only when
    the concatenated normalized forms match exactly; ties prefer earlier and
    shorter matches. Dotted MWE nodes pair with the partner's dotted node
    when the spans correspond, otherwise the whole gold MWE block links to
    the covering system span as a single ``mwe`` link (and symmetrically).
    """
    table = tolerance.contraction_table
    gold_ints = [t for t in gold.tokens if not t.id.is_dotted]
    system_ints = [t for t in system.tokens if not t.id.is_dotted]
    g_norm = [normalize_form(t.form, table) for t in gold_ints]
    s_norm = [normalize_form(t.form, table) for t in system_ints]

    steps = _align_integer_runs(g_norm, s_norm)

    links: list[AlignmentLink] = []
    gi = si = 0
    for action, g_run, s_run in steps:
        g_ids = tuple(t.id for t in gold_ints[gi:gi + g_run])
        s_ids = tuple(t.id for t in system_ints[si:si + s_run])
        if action == "match":
            links.append(AlignmentLink(g_ids, s_ids, "one_one"))
        elif action == "gold_split":
            links.append(AlignmentLink(g_ids, s_ids, "gold_split"))
        elif action == "system_split":
            links.append(AlignmentLink(g_ids, s_ids, "system_split"))
        elif action == "skip_gold":
            links.append(AlignmentLink(g_ids, (), "unaligned_gold"))
        else:
            links.append(AlignmentLink((), s_ids, "unaligned_system"))
        gi += g_run
        si += s_run

    links = _attach_dotted_nodes(gold, system, links)
    return Alignment(tuple(_ordered(links, gold, system)))


def _align_integer_runs(g_norm: list[str], s_norm: list[str]):
    """Suffix-cost DP over the two normalized form sequences.

    Returns the chosen steps as (action, gold_run, system_run) triples.
    Transition preference at equal cost: exact match, then the shorter of
    split/merge runs, then skipping gold, then skipping system.
    """
    m, n = len(g_norm), len(s_norm)
    INF = 10 ** 9
    cost = [[INF] * (n + 1) for _ in range(m + 1)]
    choice: list[list[tuple[str, int, int] | None]] = \
        [[None] * (n + 1) for _ in range(m + 1)]
    cost[m][n] = 0
    for i in range(m, -1, -1):
        for j in range(n, -1, -1):
            if i == m and j == n:
                continue
            options: list[tuple[int, int, str, int, int]] = []
            if i < m and j < n and g_norm[i] == s_norm[j]:
                options.append((cost[i + 1][j + 1], 0, "match", 1, 1))
            rank = 1
            for k in range(2, MAX_RUN + 1):
                if j + k <= n and g_norm[i:i + 1] != [""] and all(s_norm[j:j + k]):
                    if i < m and g_norm[i] == "".join(s_norm[j:j + k]):
                        options.append((cost[i + 1][j + k] + 1, rank,
                                        "system_split", 1, k))
                rank += 1
                if i + k <= m and s_norm[j:j + 1] != [""] and all(g_norm[i:i + k]):
                    if j < n and "".join(g_norm[i:i + k]) == s_norm[j]:
                        options.append((cost[i + k][j + 1] + 1, rank,
                                        "gold_split", k, 1))
                rank += 1
            if i < m:
                options.append((cost[i + 1][j] + 1, 98, "skip_gold", 1, 0))
            if j < n:
                options.append((cost[i][j + 1] + 1, 99, "skip_system", 0, 1))
            best = min(options, key=lambda o: (o[0], o[1]))
            cost[i][j] = best[0]
            choice[i][j] = best[2:]
    steps = []
    i = j = 0
    while (i, j) != (m, n):
        action, g_run, s_run = choice[i][j]
        steps.append((action, g_run, s_run))
        i += g_run
        j += s_run
    return steps


def _span_ids(token, sentence: Sentence) -> list[NodeId]:
    """Integer component ids a dotted node covers in its own sentence."""
    width = token.form.count("_") + 1
    present = {t.id for t in sentence.tokens}
    return [NodeId(m) for m in range(token.id.major, token.id.major + width)
            if NodeId(m) in present]


def _attach_dotted_nodes(gold: Sentence, system: Sentence,
                         links: list[AlignmentLink]) -> list[AlignmentLink]:
    one_one = {l.gold_ids[0]: l.system_ids[0]
               for l in links if l.kind == "one_one"}
    gold_dotted = [t for t in gold.tokens if t.id.is_dotted]
    system_dotted = [t for t in system.tokens if t.id.is_dotted]
    claimed_system_dotted: set[NodeId] = set()

    for token in gold_dotted:
        # Only one-one aligned span components can be folded into an mwe
        # link; components captured by split/merge links stay where they are.
        aligned = [c for c in _span_ids(token, gold) if c in one_one]
        partners = [one_one[c] for c in aligned]
        matched = None
        for candidate in system_dotted:
            if candidate.id in claimed_system_dotted:
                continue
            if set(_span_ids(candidate, system)) == set(partners) and partners:
                matched = candidate
                break
        if matched is not None:
            claimed_system_dotted.add(matched.id)
            links.append(AlignmentLink((token.id,), (matched.id,), "one_one"))
        elif partners:
            # System covers the span without a dotted node: fold the gold
            # MWE block and the covering span into one link.
            merged_gold = sorted(aligned + [token.id], key=lambda x: x._key())
            links = [l for l in links
                     if not (l.kind == "one_one" and l.gold_ids[0] in aligned)]
            links.append(AlignmentLink(tuple(merged_gold), tuple(partners), "mwe"))
        else:
            links.append(AlignmentLink((token.id,), (), "unaligned_gold"))

    back = {l.system_ids[0]: l.gold_ids[0]
            for l in links if l.kind == "one_one" and not l.system_ids[0].is_dotted}
    for token in system_dotted:
        if token.id in claimed_system_dotted:
            continue
        aligned = [c for c in _span_ids(token, system) if c in back]
        partners = [back[c] for c in aligned]
        if partners:
            merged_system = sorted(aligned + [token.id], key=lambda x: x._key())
            links = [l for l in links
                     if not (l.kind == "one_one" and l.system_ids
                             and l.system_ids[0] in aligned)]
            links.append(AlignmentLink(tuple(sorted(partners, key=lambda x: x._key())),
                                       tuple(merged_system), "mwe"))
        else:
            links.append(AlignmentLink((), (token.id,), "unaligned_system"))
    return links


def _ordered(links: list[AlignmentLink], gold: Sentence,
             system: Sentence) -> list[AlignmentLink]:
    gold_pos = {t.id: i for i, t in enumerate(gold.tokens)}
    system_pos = {t.id: i for i, t in enumerate(system.tokens)}

    def key(link: AlignmentLink):
        if link.gold_ids:
            return (0, min(gold_pos[g] for g in link.gold_ids), 0)
        return (1, 0, min(system_pos[s] for s in link.system_ids))

    return sorted(links, key=key)


# --- component scores ---------------------------------------------------------

@dataclass(frozen=True)
class ComponentScores:
    s_split: int
    s_id: int
    s_upos: int
    s_head: int
    s_deprel: int

    def __post_init__(self):
        for name, value in self.asdict().items():
            if not 1 <= value <= 100:
                raise ValueError(f"{name}={value} outside [1,100]")

    def asdict(self) -> dict[str, int]:
        return {"split": self.s_split, "id": self.s_id, "upos": self.s_upos,
                "head": self.s_head, "deprel": self.s_deprel}

    def astuple(self) -> tuple[int, ...]:
        return (self.s_split, self.s_id, self.s_upos, self.s_head, self.s_deprel)


@dataclass(frozen=True)
class Weights:
    w_split: float = 0.15
    w_id: float = 0.15
    w_upos: float = 0.20
    w_head: float = 0.25
    w_deprel: float = 0.25

    def __post_init__(self):
        values = self.astuple()
        if any(w < 0 for w in values):
            raise WeightSumInvalid(f"negative weight in {values}")
        if abs(sum(values) - 1.0) > 1e-9:
            raise WeightSumInvalid(f"weights sum to {sum(values)}, expected 1")

    def astuple(self) -> tuple[float, ...]:
        return (self.w_split, self.w_id, self.w_upos, self.w_head, self.w_deprel)


DEFAULT_WEIGHTS = Weights()


def _clamp_score(value: int) -> int:
    return max(1, min(100, value))


def _percentage(numerator: Fraction, denominator: int) -> int:
    if denominator == 0:
        return 1
    return _clamp_score(half_up(Fraction(100) * numerator / denominator))


def component_scores(gold: Sentence, system: Sentence, alignment: Alignment,
                     tolerance: ToleranceConfig = DEFAULT_TOLERANCE) -> ComponentScores:
    """Five scorers in [1,100]; graded credit only through the tolerance
    configuration, structural correctness judged over one-one aligned tokens."""
    one_one = alignment.one_one()
    n_gold, n_system = len(gold.tokens), len(system.tokens)

    s_split = _clamp_score(half_up(
        Fraction(100 * 2 * len(one_one), n_gold + n_system)))

    gold_rank = {t.id: i for i, t in enumerate(gold.tokens)}
    system_rank = {t.id: i for i, t in enumerate(system.tokens)}
    position_matches = sum(1 for g, s in one_one.items()
                           if gold_rank[g] == system_rank[s])
    s_id = _percentage(Fraction(position_matches), n_gold)

    system_by_id = system.token_index()
    gold_by_id = gold.token_index()
    annotatable = annotatable_tokens(gold)

    upos_credit = Fraction(0)
    head_credit = Fraction(0)
    deprel_credit = Fraction(0)
    system_to_gold = {s: g for g, s in one_one.items()}
    for token in annotatable:
        partner_id = one_one.get(token.id)
        if partner_id is None:
            continue
        partner = system_by_id[partner_id]

        if partner.upos == token.upos:
            upos_credit += 1
        else:
            pair = tolerance.upos_pair_credit(token.upos, partner.upos)
            if pair is not None:
                upos_credit += pair

        resolved = _resolve_to_gold(partner.head, system_to_gold)
        target = token.head
        if isinstance(target, RootSentinel):
            if resolved is ROOT:
                head_credit += 1
        elif isinstance(target, NodeId):
            if resolved == target:
                head_credit += 1
            else:
                grand = gold_by_id.get(target)
                if grand is not None and _head_matches(resolved, grand.head):
                    head_credit += Fraction(1, 2)

        if partner.deprel == token.deprel:
            deprel_credit += 1
        else:
            cls = tolerance.deprel_class_credit(token.deprel, partner.deprel)
            if cls is not None:
                deprel_credit += cls

    denominator = len(annotatable)
    return ComponentScores(
        s_split=s_split,
        s_id=s_id,
        s_upos=_percentage(upos_credit, denominator),
        s_head=_percentage(head_credit, denominator),
        s_deprel=_percentage(deprel_credit, denominator),
    )


def _resolve_to_gold(head, system_to_gold):
    if isinstance(head, RootSentinel):
        return ROOT
    if isinstance(head, NodeId):
        return system_to_gold.get(head)
    return None


def _head_matches(resolved, gold_head) -> bool:
    if isinstance(gold_head, RootSentinel):
        return resolved is ROOT
    if isinstance(gold_head, NodeId):
        return resolved == gold_head
    return False


# --- severity ------------------------------------------------------------------

CATASTROPHIC_CLASSES = ("MissingDottedMwe", "ReparandumMisattached",
                        "InvalidHeadPersisting", "MultipleRootsOrCycle")
MINOR_CLASSES = ("TolerantUposSubstitution", "NearMissDeprel", "MinorMismatch")


@dataclass(frozen=True)
class PenaltySchedule:
    """Per-issue penalty contributions; catastrophic ones sit in [0.25, 0.6],
    minor ones in [0.01, 0.05], and P is clipped at p_max."""

    missing_dotted_mwe: float = 0.30
    reparandum_misattached: float = 0.25
    invalid_head_persisting: float = 0.40
    multiple_roots_or_cycle: float = 0.50
    tolerant_upos_substitution: float = 0.01
    near_miss_deprel: float = 0.01
    minor_mismatch: float = 0.02
    p_max: float = 0.95

    def __post_init__(self):
        for value in (self.missing_dotted_mwe, self.reparandum_misattached,
                      self.invalid_head_persisting, self.multiple_roots_or_cycle):
            if not 0.25 <= value <= 0.6:
                raise ValueError(f"catastrophic contribution {value} outside [0.25, 0.6]")
        for value in (self.tolerant_upos_substitution, self.near_miss_deprel,
                      self.minor_mismatch):
            if not 0.01 <= value <= 0.05:
                raise ValueError(f"minor contribution {value} outside [0.01, 0.05]")

    def contribution(self, issue_class: str) -> float:
        return {
            "MissingDottedMwe": self.missing_dotted_mwe,
            "ReparandumMisattached": self.reparandum_misattached,
            "InvalidHeadPersisting": self.invalid_head_persisting,
            "MultipleRootsOrCycle": self.multiple_roots_or_cycle,
            "TolerantUposSubstitution": self.tolerant_upos_substitution,
            "NearMissDeprel": self.near_miss_deprel,
            "MinorMismatch": self.minor_mismatch,
        }[issue_class]


DEFAULT_SCHEDULE = PenaltySchedule()


@dataclass(frozen=True)
class SeverityIssue:
    issue_class: str
    severity: str  # catastrophic | minor
    contribution: float
    node_ids: tuple[NodeId, ...]
    note: str


@dataclass(frozen=True)
class SeverityReport:
    issues: tuple[SeverityIssue, ...]
    P: float


def detect_severity(gold: Sentence, system: Sentence, alignment: Alignment,
                    schedule: PenaltySchedule = DEFAULT_SCHEDULE,
                    tolerance: ToleranceConfig = DEFAULT_TOLERANCE) -> SeverityReport:
    """Flag catastrophic and minor issues; P = min(p_max, sum(contributions))."""
    issues: list[SeverityIssue] = []

    def add(issue_class: str, node_ids: Sequence[NodeId], note: str):
        severity = "catastrophic" if issue_class in CATASTROPHIC_CLASSES else "minor"
        issues.append(SeverityIssue(issue_class, severity,
                                    schedule.contribution(issue_class),
                                    tuple(node_ids), note))

    for link in alignment.links:
        if link.kind == "mwe" and any(g.is_dotted for g in link.gold_ids):
            dotted = [g for g in link.gold_ids if g.is_dotted]
            add("MissingDottedMwe", dotted,
                "gold requires a dotted MWE node the system does not produce")

    one_one = alignment.one_one()
    system_to_gold = {s: g for g, s in one_one.items()}
    system_by_id = system.token_index()
    system_ids = {t.id for t in system.tokens}

    for token in system.tokens:
        if isinstance(token.head, NodeId) and token.head not in system_ids:
            add("InvalidHeadPersisting", (token.id,),
                f"system head {token.head} of {token.id} does not exist")

    report = validate_tree(system)
    root_problem = [i for i in report.issues
                    if i.code in (IssueCode.MULTIPLE_ROOTS, IssueCode.NO_ROOT)]
    if root_problem:
        add("MultipleRootsOrCycle",
            tuple(n for issue in root_problem for n in issue.node_ids),
            "system parse does not have exactly one root")
    for issue in report.issues:
        if issue.code == IssueCode.CYCLE:
            add("MultipleRootsOrCycle", issue.node_ids, issue.message)

    descendants = _gold_subtrees(gold)
    gold_by_id = gold.token_index()
    for token in annotatable_tokens(gold):
        is_reparandum = (token.spoken_label == "reparandum"
                         or (token.deprel and base_deprel(token.deprel) == "reparandum"))
        if not is_reparandum or not isinstance(token.head, NodeId):
            continue
        partner_id = one_one.get(token.id)
        if partner_id is None:
            continue
        resolved = _resolve_to_gold(system_by_id[partner_id].head, system_to_gold)
        if resolved is None:
            continue
        subtree = descendants.get(token.head, {token.head})
        if resolved is ROOT or resolved not in subtree:
            add("ReparandumMisattached", (token.id,),
                f"reparandum {token.id} attached outside the subtree of {token.head}")

    for token in annotatable_tokens(gold):
        partner_id = one_one.get(token.id)
        if partner_id is None:
            continue
        partner = system_by_id[partner_id]
        if token.upos is not None and partner.upos != token.upos:
            if tolerance.upos_pair_credit(token.upos, partner.upos) is not None:
                add("TolerantUposSubstitution", (token.id,),
                    f"{token.upos} vs {partner.upos}")
            else:
                add("MinorMismatch", (token.id,),
                    f"UPOS {token.upos} vs {partner.upos}")
        if token.deprel is not None and partner.deprel != token.deprel:
            if tolerance.deprel_class_credit(token.deprel, partner.deprel) is not None:
                add("NearMissDeprel", (token.id,),
                    f"{token.deprel} vs {partner.deprel}")
            else:
                add("MinorMismatch", (token.id,),
                    f"DEPREL {token.deprel} vs {partner.deprel}")

    total = sum((_exact(i.contribution) for i in issues), start=Fraction(0))
    P = min(_exact(schedule.p_max), total)
    return SeverityReport(tuple(issues), float(P))


def _gold_subtrees(gold: Sentence) -> dict[NodeId, set[NodeId]]:
    children: dict[NodeId, list[NodeId]] = {t.id: [] for t in gold.tokens}
    for token in gold.tokens:
        if isinstance(token.head, NodeId) and token.head in children:
            children[token.head].append(token.id)
    subtree: dict[NodeId, set[NodeId]] = {}

    def collect(node: NodeId, seen: frozenset) -> set[NodeId]:
        if node in subtree:
            return subtree[node]
        result = {node}
        for child in children.get(node, ()):
            if child not in seen:
                result |= collect(child, seen | {node})
        subtree[node] = result
        return result

    for token in gold.tokens:
        collect(token.id, frozenset())
    return subtree


# --- aggregation -----------------------------------------------------------------

@dataclass(frozen=True)
class FlexScore:
    components: ComponentScores
    weights: Weights
    raw: float
    severity: SeverityReport
    final: int
    diagnostics: tuple[str, ...]


def flexud_final(components: ComponentScores, weights: Weights,
                 severity: SeverityReport) -> FlexScore:
    """Aggregate component scores under the severity penalty.

    raw = sum(w_i * s_i); final = round(raw * (1 - P)) with half-up rounding
    computed exactly over the decimal values the inputs denote.
    """
    w = [_exact(value) for value in weights.astuple()]
    s = components.astuple()
    raw_exact = sum((wi * si for wi, si in zip(w, s)), start=Fraction(0))
    p_exact = _exact(severity.P)
    final = half_up(raw_exact * (1 - p_exact))
    diagnostics = [f"{i.issue_class}({i.severity} {i.contribution:g}): {i.note}"
                   for i in severity.issues]
    for name, value in components.asdict().items():
        if value < 50:
            diagnostics.append(f"component {name} below 50: {value}")
    return FlexScore(components=components, weights=weights,
                     raw=float(raw_exact), severity=severity,
                     final=final, diagnostics=tuple(diagnostics))


def evaluate_sentence(gold: Sentence, system: Sentence,
                      weights: Weights = DEFAULT_WEIGHTS,
                      tolerance: ToleranceConfig = DEFAULT_TOLERANCE,
                      schedule: PenaltySchedule = DEFAULT_SCHEDULE) -> FlexScore:
    """Align, score components, detect severity, aggregate: one call."""
    alignment = align_tokens(gold, system, tolerance)
    components = component_scores(gold, system, alignment, tolerance)
    severity = detect_severity(gold, system, alignment, schedule, tolerance)
    return flexud_final(components, weights, severity)


# --- report -------------------------------------------------------------------

@dataclass(frozen=True)
class FlexResult:
    sentence_id: str
    category: Category | None
    score: FlexScore


@dataclass(frozen=True)
class FlexTable:
    per_category: tuple[tuple[Category, int, tuple[float, ...] | None], ...]
    overall: tuple[float, ...]
    extended: bool

    def to_table(self) -> Table:
        columns = FLEX_TABLE_COLUMNS_EXTENDED if self.extended else FLEX_TABLE_COLUMNS
        rows = []
        for category, n, values in self.per_category:
            rows.append((category.display_label,) + self._cells(values))
        rows.append(("Overall",) + self._cells(self.overall))
        return Table(columns, tuple(rows))

    def _cells(self, values: tuple[float, ...] | None) -> tuple[str, ...]:
        width = 6 if self.extended else 5
        if values is None:
            return ("-",) * width
        return tuple(f"{v:.1f}" for v in values)

    def to_markdown(self) -> str:
        return self.to_table().to_markdown()

    def to_csv(self) -> str:
        return self.to_table().to_csv()


def flexud_report(results: Iterable[FlexResult], extended: bool = False) -> FlexTable:
    """Per-category averages of the component scores and Final.

    The default view matches the published layout (ID, UPOS, HEAD, DEPREL,
    Final); the extended view prepends the Split component.
    """
    results = list(results)
    seen: set[str] = set()
    for result in results:
        if result.sentence_id in seen:
            raise SpokenUdError(f"duplicate sentence id: {result.sentence_id}")
        seen.add(result.sentence_id)

    def vector(score: FlexScore) -> tuple[float, ...]:
        c = score.components
        base = (c.s_id, c.s_upos, c.s_head, c.s_deprel, score.final)
        if extended:
            return (c.s_split,) + base
        return base

    def mean(scores: list[FlexScore]) -> tuple[float, ...]:
        vectors = [vector(s) for s in scores]
        return tuple(sum(col) / len(col) for col in zip(*vectors))

    by_category: dict[Category, list[FlexScore]] = {}
    for result in results:
        if result.category is not None:
            by_category.setdefault(result.category, []).append(result.score)

    per_category = []
    for category in Category:
        scores = by_category.get(category)
        per_category.append((category, len(scores) if scores else 0,
                             mean(scores) if scores else None))
    overall = mean([r.score for r in results]) if results else \
        (0.0,) * (6 if extended else 5)
    return FlexTable(tuple(per_category), overall, extended)
