"""CREATE lineage graph and suspect expansion around malicious contracts."""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .data import EOA, SC, normalize_address
from .errors import MultipleCreators


@dataclass
class CreateGraph:
    children: dict = field(default_factory=dict)
    parent: dict = field(default_factory=dict)

    @property
    def nodes(self) -> set:
        return set(self.children) | set(self.parent)

    def add_edge(self, creator: str, created: str):
        known = self.parent.get(created)
        if known is not None:
            raise MultipleCreators(f"{created} created by both {known} and {creator}")
        self.parent[created] = creator
        self.children.setdefault(creator, []).append(created)
        self.children.setdefault(created, [])

    def edges(self) -> list:
        return [(c, d) for c in sorted(self.children) for d in self.children[c]]

    def descendants(self, node: str) -> set:
        out, stack = set(), list(self.children.get(node, ()))
        while stack:
            n = stack.pop()
            if n not in out:
                out.add(n)
                stack.extend(self.children.get(n, ()))
        return out


@dataclass
class SuspectExpansion:
    seed: frozenset
    expanded: frozenset
    excluded: frozenset
    per_seed_component: dict
    eoa_creators: frozenset = frozenset()


def build_create_graph(store) -> CreateGraph:
    """One edge per CREATE internal record, in ingest order."""
    graph = CreateGraph()
    for tx in store.internal:
        if tx.opcode == "CREATE":
            graph.add_edge(tx.sender, tx.receiver)
    return graph


def _component(graph: CreateGraph, start: str, excluded: frozenset, kinds: Mapping, eoas: set) -> set:
    # undirected BFS through non-excluded contracts; EOAs are recorded, never entered
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        nbrs = list(graph.children.get(node, ()))
        p = graph.parent.get(node)
        if p is not None:
            nbrs.append(p)
        for n in nbrs:
            if n in seen or n in excluded:
                continue
            if kinds.get(n, SC) == EOA:
                eoas.add(n)
                continue
            seen.add(n)
            queue.append(n)
    return seen


def expand_suspects(
    graph: CreateGraph, seed: Iterable[str], excluded: Iterable[str] = (), kinds: Optional[Mapping] = None
) -> SuspectExpansion:
    """Grow the malicious seed to whole CREATE components.

    The closure follows creator and created links in both directions, so an
    SC parent pulls in its other children too. Excluded addresses (known
    organisations) are barriers: never added, never crossed. ``kinds`` maps
    address to "EOA"/"SC"; unknown addresses count as contracts.
    """
    kinds = kinds or {}
    excluded = frozenset(excluded)
    seed = frozenset(seed)
    if not seed:
        raise ValueError("seed set is empty")
    eoas: set = set()
    per_seed = {}
    expanded: set = set()
    for s in sorted(seed):
        if s in excluded or kinds.get(s, SC) == EOA:
            per_seed[s] = frozenset()
            continue
        if s in expanded:
            per_seed[s] = next(c for c in per_seed.values() if s in c)
            continue
        comp = frozenset(_component(graph, s, excluded, kinds, eoas))
        per_seed[s] = comp
        expanded |= comp
    return SuspectExpansion(seed, frozenset(expanded), excluded, per_seed, frozenset(eoas))


@dataclass
class ComponentRow:
    seed: str
    creator_kind: str
    descendants: int
    component_size: int
    children: int


def component_stats(graph: CreateGraph, expansion: SuspectExpansion, kinds: Optional[Mapping] = None):
    """Per-seed lineage rows plus aggregate counts.

    Aggregates: seeds, seedsWithEoaCreator, seedsWithScCreator,
    seedsCreatingChildren, childrenCreated (distinct direct children of
    seeds), uniqueScParents.
    """
    kinds = kinds or {}
    rows = []
    children_all, sc_parents = set(), set()
    eoa_created = sc_created = creating = 0
    for s in sorted(expansion.seed):
        parent = graph.parent.get(s)
        if parent is None:
            creator_kind = "Unknown"
        else:
            creator_kind = kinds.get(parent, SC)
        if creator_kind == EOA:
            eoa_created += 1
        elif creator_kind == SC:
            sc_created += 1
            sc_parents.add(parent)
        kids = graph.children.get(s, [])
        if kids:
            creating += 1
            children_all.update(kids)
        rows.append(
            ComponentRow(s, creator_kind, len(graph.descendants(s)), len(expansion.per_seed_component[s]), len(kids))
        )
    aggregate = {
        "seeds": len(expansion.seed),
        "seedsWithEoaCreator": eoa_created,
        "seedsWithScCreator": sc_created,
        "seedsCreatingChildren": creating,
        "childrenCreated": len(children_all),
        "uniqueScParents": len(sc_parents),
        "expanded": len(expansion.expanded),
    }
    return rows, aggregate


def read_address_file(path) -> set:
    """One address per line; blank lines and '#' comments ignored."""
    out = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.add(normalize_address(line))
    return out


def write_component_report(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "creatorKind", "descendants", "componentSize"])
        for r in rows:
            w.writerow([r.seed, r.creator_kind, r.descendants, r.component_size])


def write_edge_list(graph: CreateGraph, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["creator", "created"])
        w.writerows(graph.edges())
