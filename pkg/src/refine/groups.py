"""Persistent group memory learned from completed feedback sessions.

Items confirmed relevant together end up in one group; a later session
whose relevant items touch several groups merges them all. The partition
is a union-find forest (path compression, union by size), persisted as
JSON lines so it survives server restarts.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import FormatError, ValidationError


@dataclass(frozen=True)
class FeedbackEvent:
    """One feedback submission: what was shown, what the user marked relevant."""

    session_id: str
    query_id: str | None
    iteration: int
    shown: tuple[str, ...]
    relevant: tuple[str, ...]
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        shown = set(self.shown)
        stray = [i for i in self.relevant if i not in shown]
        if stray:
            raise ValidationError(f"relevant ids not part of shown batch: {stray}")

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "query_id": self.query_id,
            "iteration": self.iteration,
            "shown": list(self.shown),
            "relevant": list(self.relevant),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeedbackEvent":
        return cls(
            session_id=str(obj["session_id"]),
            query_id=obj.get("query_id"),
            iteration=int(obj["iteration"]),
            shown=tuple(obj["shown"]),
            relevant=tuple(obj["relevant"]),
            timestamp=float(obj.get("timestamp", 0.0)),
        )


def append_events(path: str | Path, events: Iterable[FeedbackEvent]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event.to_dict()) + "\n")


def load_events(path: str | Path) -> list[FeedbackEvent]:
    events: list[FeedbackEvent] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(FeedbackEvent.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise FormatError(f"{path}: line {lineno}: bad event record") from exc
    return events


class GroupStore:
    """Union-find partition of item ids into learned groups."""

    def __init__(self):
        self._parent: dict[str, str] = {}
        self._size: dict[str, int] = {}
        self.generation: int = 0

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._parent

    def __len__(self) -> int:
        """Number of grouped item ids."""
        return len(self._parent)

    @property
    def group_count(self) -> int:
        return len(self._size)

    def find(self, item_id: str) -> str:
        """Root of the group containing ``item_id``."""
        root = item_id
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[item_id] != root:  # path compression
            self._parent[item_id], item_id = root, self._parent[item_id]
        return root

    def _add(self, item_id: str) -> None:
        if item_id not in self._parent:
            self._parent[item_id] = item_id
            self._size[item_id] = 1

    def _union(self, a: str, b: str) -> str:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        # union by size; equal sizes keep the lexicographically smaller root
        if (self._size[ra], rb) < (self._size[rb], ra):
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size.pop(rb)
        return ra

    def members(self, root: str) -> list[str]:
        root = self.find(root)
        return sorted(i for i in self._parent if self.find(i) == root)

    def roots(self) -> list[str]:
        return sorted(self._size)

    def group_sizes(self) -> dict[str, int]:
        return dict(self._size)

    def size_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for size in self._size.values():
            hist[size] = hist.get(size, 0) + 1
        return dict(sorted(hist.items()))

    def copy(self) -> "GroupStore":
        clone = GroupStore()
        clone._parent = dict(self._parent)
        clone._size = dict(self._size)
        clone.generation = self.generation
        return clone

    def save(self, path: str | Path) -> None:
        """One header line, then one ``{"id", "root"}`` line per member."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"format": "groups1", "generation": self.generation}) + "\n")
            for item_id in sorted(self._parent):
                fh.write(json.dumps({"id": item_id, "root": self.find(item_id)}) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GroupStore":
        store = cls()
        with open(path, "r", encoding="utf-8") as fh:
            header_line = fh.readline()
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line 1: bad header") from exc
            if header.get("format") != "groups1":
                raise FormatError(f"{path}: line 1: expected groups1 header")
            store.generation = int(header.get("generation", 0))
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    item_id, root = str(obj["id"]), str(obj["root"])
                except (json.JSONDecodeError, KeyError) as exc:
                    raise FormatError(f"{path}: line {lineno}: bad member record") from exc
                store._parent[item_id] = root
        for item_id, root in store._parent.items():
            if root not in store._parent:
                raise FormatError(f"{path}: root {root!r} of {item_id!r} is not a member")
            store._size[root] = store._size.get(root, 0) + 1
        for root in store._size:
            if store._parent[root] != root:
                raise FormatError(f"{path}: root {root!r} is not its own parent")
        return store


def match_groups(store: GroupStore, relevant_ids: Iterable[str]) -> set[str]:
    """Roots of every group containing at least one of ``relevant_ids``."""
    return {store.find(i) for i in relevant_ids if i in store}


def group_fill(
    store: GroupStore,
    roots: Iterable[str],
    needed: int,
    exclude: Iterable[str] = (),
    rng_seed: int = 0,
) -> list[str]:
    """Up to ``needed`` member ids sampled from the matched groups.

    Sampling is without replacement and deterministic per seed; when the
    matched groups hold fewer eligible members than ``needed``, all of them
    come back and the caller tops the batch up by re-weighted retrieval.
    """
    if needed <= 0:
        return []
    excluded = set(exclude)
    candidates = sorted(
        {member for root in roots for member in store.members(root)} - excluded
    )
    if len(candidates) <= needed:
        return candidates
    return random.Random(rng_seed).sample(candidates, needed)


def record_session(
    store: GroupStore,
    final_relevant: Iterable[str],
    matched_roots: Iterable[str] = (),
) -> GroupStore:
    """Fold one completed session's relevant set into the store.

    No matched groups: the relevant ids become a new group. One match: they
    join it. Several: all matched groups merge, then the ids join the
    merged group. An empty relevant set is a no-op.
    """
    relevant = sorted(set(final_relevant))
    if not relevant:
        return store
    roots = sorted({store.find(r) for r in matched_roots})
    for item_id in relevant:
        store._add(item_id)
    anchor = relevant[0]
    for item_id in relevant[1:]:
        store._union(anchor, item_id)
    for root in roots:
        store._union(anchor, root)
    store.generation += 1
    return store
