"""In-memory knowledge graph: loading, adjacency indexes, and subgraph extraction.

Triples are stored once in their forward orientation; inverse traversal is
exposed through a ``direction`` flag on the triples returned by :func:`one_hop`,
so an answer entity can sit on either side of an edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import GraphError, GraphFormatError, UnknownEntityError

FORWARD = "forward"
INVERSE = "inverse"


@dataclass(frozen=True)
class Entity:
    id: str
    label: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("entity id must be nonempty")


@dataclass(frozen=True)
class Relation:
    name: str
    hierarchy: Optional[tuple[str, str, str]] = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("relation name must be nonempty")
        if self.hierarchy is not None and ".".join(self.hierarchy) != self.name:
            raise ValueError("hierarchy parts must join to the relation name")


@dataclass(frozen=True, order=True)
class Triple:
    head: str
    relation: str
    tail: str
    direction: str = FORWARD

    def key(self) -> tuple[str, str, str]:
        """Identity of the stored fact, ignoring traversal direction."""
        return (self.head, self.relation, self.tail)

    def as_direction(self, direction: str) -> "Triple":
        return Triple(self.head, self.relation, self.tail, direction)

    def other_end(self, entity_id: str) -> str:
        """The end of the edge opposite ``entity_id``."""
        if entity_id == self.head:
            return self.tail
        if entity_id == self.tail:
            return self.head
        raise ValueError(f"{entity_id} is not an endpoint of {self.key()}")


def parse_relation_hierarchy(name: str) -> Optional[tuple[str, str, str]]:
    """Split a Freebase-style relation into (domain, source_type, target_type).

    Returns None for relations that are not exactly three nonempty
    dot-separated parts (e.g. Wikidata-style flat relation names).
    """
    parts = name.split(".")
    if len(parts) != 3 or not all(parts):
        return None
    return (parts[0], parts[1], parts[2])


class KnowledgeGraph:
    """Immutable-after-load triple store with out/in adjacency indexes."""

    def __init__(self):
        self.entities: dict[str, Entity] = {}
        self.relations: dict[str, Relation] = {}
        self.triples: list[Triple] = []
        self.out_index: dict[str, list[Triple]] = {}
        self.in_index: dict[str, list[Triple]] = {}
        self._triple_keys: set[tuple[str, str, str]] = set()
        self._label_index: dict[str, str] = {}  # casefolded label -> entity id

    # -- construction -----------------------------------------------------

    def _ensure_entity(self, entity_id: str, label: str | None = None) -> Entity:
        ent = self.entities.get(entity_id)
        if ent is None:
            ent = Entity(entity_id, label or entity_id)
            self.entities[entity_id] = ent
            self._label_index.setdefault(ent.label.casefold(), entity_id)
        return ent

    def _ensure_relation(self, name: str) -> Relation:
        rel = self.relations.get(name)
        if rel is None:
            rel = Relation(name, parse_relation_hierarchy(name))
            self.relations[name] = rel
        return rel

    def add_triple(self, head: str, relation: str, tail: str) -> bool:
        """Add a forward triple; returns False on duplicate."""
        key = (head, relation, tail)
        if key in self._triple_keys:
            return False
        self._ensure_entity(head)
        self._ensure_entity(tail)
        self._ensure_relation(relation)
        triple = Triple(head, relation, tail)
        self._triple_keys.add(key)
        self.triples.append(triple)
        self.out_index.setdefault(head, []).append(triple)
        self.in_index.setdefault(tail, []).append(triple)
        return True

    def set_label(self, entity_id: str, label: str) -> None:
        if entity_id not in self.entities:
            raise UnknownEntityError(f"unknown entity id: {entity_id}")
        old = self.entities[entity_id]
        self._label_index.pop(old.label.casefold(), None)
        ent = Entity(entity_id, label)
        self.entities[entity_id] = ent
        self._label_index.setdefault(label.casefold(), entity_id)

    def freeze(self) -> None:
        """Sort indexes so every traversal is deterministic."""
        self.triples.sort()
        for idx in self.out_index.values():
            idx.sort(key=lambda t: (t.relation, t.tail))
        for idx in self.in_index.values():
            idx.sort(key=lambda t: (t.relation, t.head))

    # -- queries ----------------------------------------------------------

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self.entities

    def label_of(self, entity_id: str) -> str:
        entity = self.entities.get(entity_id)
        return entity.label if entity is not None else entity_id

    def resolve_label(self, label: str) -> Optional[str]:
        """Entity id for a label: exact match first, then case-insensitive."""
        for ent in self.entities.values():
            if ent.label == label:
                return ent.id
        return self._label_index.get(label.casefold())

    def one_hop(self, entity_id: str, include_inverse: bool = True) -> list[Triple]:
        """All edges touching ``entity_id``, forward first, deterministic order."""
        if entity_id not in self.entities:
            raise UnknownEntityError(f"unknown entity id: {entity_id}")
        result = list(self.out_index.get(entity_id, ()))
        if include_inverse:
            result.extend(t.as_direction(INVERSE) for t in self.in_index.get(entity_id, ()))
        return result

    def subgraph_for_key_entity(self, key: str, radius: int) -> "KnowledgeGraph":
        """Induced subgraph of all triples within ``radius`` undirected hops."""
        if key not in self.entities:
            raise UnknownEntityError(f"unknown entity id: {key}")
        if radius < 1:
            raise ValueError("radius must be >= 1")
        sub = KnowledgeGraph()
        sub._ensure_entity(key, self.entities[key].label)
        seen = {key}
        frontier = deque([(key, 0)])
        while frontier:
            node, depth = frontier.popleft()
            if depth >= radius:
                continue
            for triple in self.one_hop(node, include_inverse=True):
                other = triple.other_end(node)
                if sub.add_triple(triple.head, triple.relation, triple.tail):
                    sub.entities[triple.head] = self.entities[triple.head]
                    sub.entities[triple.tail] = self.entities[triple.tail]
                if other not in seen:
                    seen.add(other)
                    frontier.append((other, depth + 1))
        sub.freeze()
        return sub

    def stats(self) -> dict[str, int]:
        return {
            "entities": len(self.entities),
            "relations": len(self.relations),
            "triples": len(self.triples),
        }


def load_graph(path, label_path=None) -> KnowledgeGraph:
    """Load a tab-separated (head, relation, tail) file into a graph.

    Duplicate triples are dropped. An empty file yields an empty graph.
    An optional label TSV (id, label) overrides the default label == id.
    """
    graph = KnowledgeGraph()
    duplicates = 0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise GraphError(f"cannot read graph file {path}: {exc}")
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3 or not all(f.strip() for f in fields):
                raise GraphFormatError(
                    f"{path}: line {line_no}: expected 3 tab-separated fields, "
                    f"got {len(fields)}",
                    line_no=line_no,
                )
            head, relation, tail = (f.strip() for f in fields)
            if not graph.add_triple(head, relation, tail):
                duplicates += 1
    if label_path is not None:
        with open(label_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise GraphFormatError(
                        f"{label_path}: line {line_no}: expected 2 fields",
                        line_no=line_no,
                    )
                if graph.has_entity(fields[0]):
                    graph.set_label(fields[0], fields[1])
    graph.freeze()
    graph.duplicate_count = duplicates
    return graph


def save_graph(graph: KnowledgeGraph, path) -> None:
    """Write the triple set back out as sorted TSV (load/save round-trips)."""
    with open(path, "w", encoding="utf-8") as fh:
        for triple in sorted(graph.triples):
            fh.write(f"{triple.head}\t{triple.relation}\t{triple.tail}\n")
