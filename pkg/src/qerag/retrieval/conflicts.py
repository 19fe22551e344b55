"""Rule-ordered resolution of contradictory facts in retrieved context.

Chunks state structured facts inline as ``FACT: <entity>.<attribute> = <value>``
(value is a single token or a double-quoted string). Two retrieved items that
state different values for the same ``entity.attribute`` key conflict. Each
conflict is run through :data:`STRATEGIES` in order; the first rule that can
discriminate picks the winner, and losers are dropped from the context. When
none of rules 1-14 applies the conflict is escalated and every candidate is
kept, flagged.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..corpus import SourceKind
from ..graph import EdgeType, KnowledgeGraph
from .types import ConflictRecord, ContextItem, EscalationRecord, OriginKind

FACT_RE = re.compile(
    r"FACT:\s*(?P<entity>[\w\-]+)\.(?P<attr>[\w\-]+)\s*=\s*(?:\"(?P<quoted>[^\"]*)\"|(?P<bare>[^\s;\"]+))"
)
VERSION_RE = re.compile(r"\bv(\d+(?:\.\d+)*)\b", re.IGNORECASE)
EXPERT_MARKER = "EXPERT-VALIDATED"
_RANGE_RE = re.compile(
    r"^\s*(-?\d+(?:\.\d+)?)\s*(?:(?:-|\.\.|to)\s*(-?\d+(?:\.\d+)?))?\s*$", re.IGNORECASE
)

KIND_PRIORITY = {
    SourceKind.ConfigGuide: 0,
    SourceKind.SapDoc: 1,
    SourceKind.BusinessProcessMap: 2,
    SourceKind.LegacyTest: 3,
}


@dataclass(frozen=True)
class Fact:
    entity: str
    attr: str
    value: str

    @property
    def key(self) -> str:
        return f"{self.entity}.{self.attr}"


def extract_facts(text: str) -> list[Fact]:
    facts = []
    for m in FACT_RE.finditer(text):
        value = m.group("quoted") if m.group("quoted") is not None else m.group("bare")
        facts.append(Fact(m.group("entity"), m.group("attr"), value.strip()))
    return facts


def normalize_value(value: str) -> str:
    return " ".join(value.lower().split())


@dataclass(frozen=True)
class ConflictParams:
    credibility_band: float = 0.1
    authoritative_sources: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Candidate:
    item: ContextItem
    value: str

    @property
    def cid(self) -> str:
        return self.item.chunk_id


@dataclass
class ResolutionContext:
    params: ConflictParams = field(default_factory=ConflictParams)
    graph: KnowledgeGraph | None = None


Outcome = tuple[str, str] | None
Rule = Callable[[Sequence[Candidate], ResolutionContext], Outcome]


def _best(cands: Iterable[Candidate]) -> Candidate:
    return min(cands, key=lambda c: (-c.item.provenance.credibility, -c.item.score, c.cid))


def _unique_extreme(cands: Sequence[Candidate], key, highest: bool = True) -> Candidate | None:
    values = [key(c) for c in cands]
    target = max(values) if highest else min(values)
    hits = [c for c, v in zip(cands, values) if v == target]
    return hits[0] if len(hits) == 1 else None


def _exact_duplicate(cands, ctx) -> Outcome:
    if len({normalize_value(c.value) for c in cands}) == 1:
        return _best(cands).cid, "values identical after normalisation; duplicates dropped"
    return None


def _supersedes(cands, ctx) -> Outcome:
    g = ctx.graph
    if g is None:
        return None
    owners = {c.cid: g.nodes_for_chunk(c.cid) for c in cands}

    def beats(a: Candidate, b: Candidate) -> bool:
        return any(
            g.weight(x, y, EdgeType.Supersedes) is not None for x in owners[a.cid] for y in owners[b.cid]
        )

    winners = [a for a in cands if all(beats(a, b) for b in cands if b is not a)]
    if len(winners) == 1 and not any(beats(b, winners[0]) for b in cands if b is not winners[0]):
        return winners[0].cid, "source node supersedes every competing source"
    return None


def _credibility(cands, ctx) -> Outcome:
    ranked = sorted(cands, key=lambda c: -c.item.provenance.credibility)
    top, second = ranked[0].item.provenance.credibility, ranked[1].item.provenance.credibility
    if top - second > ctx.params.credibility_band + 1e-12:
        return ranked[0].cid, f"credibility {top:.2f} exceeds runner-up {second:.2f} by more than the band"
    return None


def _within_band(cands, ctx) -> list[Candidate]:
    top = max(c.item.provenance.credibility for c in cands)
    return [c for c in cands if top - c.item.provenance.credibility <= ctx.params.credibility_band + 1e-12]


def _temporal(cands, ctx) -> Outcome:
    pool = _within_band(cands, ctx)
    newest = _unique_extreme(pool, lambda c: c.item.provenance.timestamp)
    if newest is not None:
        return newest.cid, "most recent source within the credibility band"
    return None


def _kind_priority(cands, ctx) -> Outcome:
    if not any(c.item.kind is SourceKind.ConfigGuide for c in cands):
        return None
    best = _unique_extreme(cands, lambda c: KIND_PRIORITY.get(c.item.kind, len(KIND_PRIORITY)), highest=False)
    if best is not None:
        return best.cid, f"configuration key: {best.item.kind.value} outranks other source kinds"
    return None


def _specificity(cands, ctx) -> Outcome:
    norm = {c.cid: normalize_value(c.value) for c in cands}
    for c in cands:
        if all(o is c or (norm[o.cid] != norm[c.cid] and norm[o.cid] in norm[c.cid]) for o in cands):
            return c.cid, "value strictly extends every competing value"
    return None


def _proximity(cands, ctx) -> Outcome:
    def hops(c: Candidate) -> int:
        o = c.item.origin
        return o.hops if o.kind is OriginKind.GraphExpansion else 0

    best = _unique_extreme(cands, hops, highest=False)
    if best is not None:
        return best.cid, "closest to the query seeds in the graph"
    return None


def _majority(cands, ctx) -> Outcome:
    groups: dict[str, set[str]] = {}
    for c in cands:
        groups.setdefault(normalize_value(c.value), set()).add(c.item.provenance.source or c.cid)
    counts = sorted(((len(s), v) for v, s in groups.items()), reverse=True)
    if len(counts) > 1 and counts[0][0] > counts[1][0]:
        value = counts[0][1]
        winner = _best(c for c in cands if normalize_value(c.value) == value)
        return winner.cid, f"value asserted by {counts[0][0]} independent sources"
    return None


def parse_range(value: str) -> tuple[float, float] | None:
    m = _RANGE_RE.match(value)
    if not m:
        return None
    lo = float(m.group(1))
    hi = float(m.group(2)) if m.group(2) is not None else lo
    return (min(lo, hi), max(lo, hi))


def _numeric_range(cands, ctx) -> Outcome:
    ranges = [parse_range(c.value) for c in cands]
    if any(r is None for r in ranges):
        return None
    lo = max(r[0] for r in ranges)
    hi = min(r[1] for r in ranges)
    if lo > hi:
        return None
    inside = [c for c, r in zip(cands, ranges) if r == (lo, hi)]
    if len(inside) == 1:
        return inside[0].cid, f"range [{lo:g}, {hi:g}] is the intersection of all stated ranges"
    return None


def _version(item: ContextItem) -> tuple[int, ...] | None:
    tags = VERSION_RE.findall(f"{item.title} {item.text}")
    if not tags:
        return None
    return max(tuple(int(p) for p in t.split(".")) for t in tags)


def _version_tag(cands, ctx) -> Outcome:
    versions = [_version(c.item) for c in cands]
    if any(v is None for v in versions):
        return None
    by_cid = dict(zip((c.cid for c in cands), versions))
    best = _unique_extreme(cands, lambda c: by_cid[c.cid])
    if best is not None:
        return best.cid, "highest document version tag"
    return None


def _authoritative(cands, ctx) -> Outcome:
    allowed = [c for c in cands if c.item.provenance.source in ctx.params.authoritative_sources]
    if len(allowed) == 1:
        return allowed[0].cid, f"source {allowed[0].item.provenance.source!r} is on the authoritative list"
    return None


def _fewer_redactions(cands, ctx) -> Outcome:
    best = _unique_extreme(cands, lambda c: c.item.redaction_count, highest=False)
    if best is not None:
        return best.cid, "fewest redacted spans"
    return None


def _expert(cands, ctx) -> Outcome:
    flagged = [c for c in cands if EXPERT_MARKER.lower() in c.item.text.lower()]
    if len(flagged) == 1:
        return flagged[0].cid, "only candidate validated by a domain expert"
    return None


def _split_set(value: str) -> frozenset[str]:
    return frozenset(p for p in (normalize_value(x) for x in re.split(r"[|,]", value)) if p)


def _complementary(cands, ctx) -> Outcome:
    sets = {c.cid: _split_set(c.value) for c in cands}
    for c in cands:
        if all(o is c or (sets[o.cid] < sets[c.cid]) for o in cands):
            return c.cid, "competing values are subsets of this value; merged"
    return None


def _escalate(cands, ctx) -> Outcome:
    return None


STRATEGIES: tuple[tuple[str, Rule], ...] = (
    ("exact_duplicate", _exact_duplicate),
    ("supersedes_edge", _supersedes),
    ("source_credibility", _credibility),
    ("temporal_recency", _temporal),
    ("kind_priority", _kind_priority),
    ("specificity", _specificity),
    ("graph_proximity", _proximity),
    ("source_majority", _majority),
    ("numeric_range_intersection", _numeric_range),
    ("version_tag", _version_tag),
    ("authoritative_source", _authoritative),
    ("fewer_redactions", _fewer_redactions),
    ("expert_validated", _expert),
    ("complementary_merge", _complementary),
    ("escalation", _escalate),
)


def find_conflicts(items: Sequence[ContextItem]) -> dict[str, list[Candidate]]:
    """Group fact assertions by key; keep only keys with differing raw values."""
    groups: dict[str, dict[str, Candidate]] = {}
    for item in items:
        for fact in extract_facts(item.text):
            slot = groups.setdefault(fact.key, {})
            # first assertion per chunk wins if a chunk repeats a key
            slot.setdefault(item.chunk_id, Candidate(item, fact.value))
    out = {}
    for key in sorted(groups):
        cands = sorted(groups[key].values(), key=lambda c: c.cid)
        if len(cands) >= 2 and len({c.value for c in cands}) >= 2:
            out[key] = cands
    return out


def resolve_conflicts(
    items: Sequence[ContextItem],
    graph: KnowledgeGraph | None = None,
    params: ConflictParams | None = None,
) -> tuple[list[ContextItem], list[ConflictRecord], list[EscalationRecord]]:
    ctx = ResolutionContext(params or ConflictParams(), graph)
    removed: set[str] = set()
    escalated: set[str] = set()
    records: list[ConflictRecord] = []
    escalations: list[EscalationRecord] = []

    for key, all_cands in find_conflicts(items).items():
        cands = [c for c in all_cands if c.cid not in removed]
        if len(cands) < 2 or len({c.value for c in cands}) < 2:
            continue
        cids = tuple(c.cid for c in cands)
        for index, (name, rule) in enumerate(STRATEGIES, start=1):
            outcome = rule(cands, ctx)
            if outcome is None:
                continue
            winner, why = outcome
            records.append(ConflictRecord(key, cids, winner, index, name, why))
            removed.update(c for c in cids if c != winner)
            break
        else:
            escalations.append(
                EscalationRecord(key, cids, "no resolution strategy could discriminate; needs review")
            )
            escalated.update(cids)

    kept = [
        (i.flagged() if i.chunk_id in escalated else i) for i in items if i.chunk_id not in removed
    ]
    return kept, records, escalations
