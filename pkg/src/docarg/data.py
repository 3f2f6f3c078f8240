"""Event instances, predictions, and JSONL dataset IO.

One dataset record describes a single event inside a document: documents
with several events appear as several records. The JSONL schema is::

    {"doc_id": ..., "words": [...], "event_type": ...,
     "trigger": [start, end], "roles": [...],
     "args": [{"role": ..., "start": ..., "end": ...}]}

Word indices are 0-based and inclusive on both ends.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .exceptions import DataError


@dataclass(frozen=True)
class EventInstance:
    """One document paired with one event of interest."""

    doc_id: str
    words: tuple[str, ...]
    event_type: str
    trigger: tuple[int, int]
    roles: tuple[str, ...]
    gold_args: tuple[tuple[str, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "trigger", tuple(self.trigger))
        object.__setattr__(self, "roles", tuple(self.roles))
        object.__setattr__(
            self, "gold_args", tuple(tuple(a) for a in self.gold_args)
        )

    @property
    def n_words(self) -> int:
        return len(self.words)

    def validate(self) -> "EventInstance":
        """Check the structural invariants; raise :class:`DataError` on violation."""
        n = len(self.words)
        if n == 0:
            raise DataError(f"{self.doc_id}: empty document")
        ts, te = self.trigger
        if not (0 <= ts <= te < n):
            raise DataError(f"{self.doc_id}: trigger span ({ts}, {te}) outside document of {n} words")
        role_set = set(self.roles)
        for role, s, e in self.gold_args:
            if not (0 <= s <= e < n):
                raise DataError(f"{self.doc_id}: argument span ({s}, {e}) outside document of {n} words")
            if role not in role_set:
                raise DataError(f"{self.doc_id}: argument role {role!r} not in role inventory {sorted(role_set)}")
        return self

    def gold_by_role(self) -> dict[str, list[tuple[int, int]]]:
        """Gold spans grouped by role name, in record order."""
        out: dict[str, list[tuple[int, int]]] = {}
        for role, s, e in self.gold_args:
            out.setdefault(role, []).append((s, e))
        return out

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "words": list(self.words),
            "event_type": self.event_type,
            "trigger": list(self.trigger),
            "roles": list(self.roles),
            "args": [{"role": r, "start": s, "end": e} for r, s, e in self.gold_args],
        }

    @classmethod
    def from_record(cls, record: dict) -> "EventInstance":
        try:
            inst = cls(
                doc_id=str(record["doc_id"]),
                words=tuple(record["words"]),
                event_type=str(record["event_type"]),
                trigger=(int(record["trigger"][0]), int(record["trigger"][1])),
                roles=tuple(record["roles"]),
                gold_args=tuple(
                    (str(a["role"]), int(a["start"]), int(a["end"]))
                    for a in record.get("args", [])
                ),
            )
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise DataError(f"bad record: {exc}") from exc
        return inst.validate()


@dataclass(frozen=True)
class Prediction:
    """A predicted (role, span) pair with its model score."""

    role: str
    start: int
    end: int
    score: float

    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass
class EventPredictions:
    """All predictions emitted for a single event instance."""

    doc_id: str
    event_type: str
    trigger: tuple[int, int]
    predictions: list[Prediction] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "event_type": self.event_type,
            "trigger": list(self.trigger),
            "predictions": [
                {"role": p.role, "start": p.start, "end": p.end, "score": p.score}
                for p in self.predictions
            ],
        }

    @classmethod
    def from_record(cls, record: dict) -> "EventPredictions":
        return cls(
            doc_id=str(record["doc_id"]),
            event_type=str(record["event_type"]),
            trigger=(int(record["trigger"][0]), int(record["trigger"][1])),
            predictions=[
                Prediction(str(p["role"]), int(p["start"]), int(p["end"]), float(p["score"]))
                for p in record.get("predictions", [])
            ],
        )


def load_dataset(path) -> list[EventInstance]:
    """Read a JSONL dataset. Malformed lines raise :class:`DataError` naming the line."""
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            try:
                instances.append(EventInstance.from_record(record))
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return instances


def save_dataset(instances: Iterable[EventInstance], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_record()) + "\n")


def save_predictions(events: Iterable[EventPredictions], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(ev.to_record()) + "\n")


def load_predictions(path) -> list[EventPredictions]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(EventPredictions.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
    return out


@dataclass(frozen=True)
class RoleLabelSet:
    """Global role-type labels, sorted by name, with a shared "none" id last."""

    roles: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        object.__setattr__(self, "_ids", {r: i for i, r in enumerate(self.roles)})

    @classmethod
    def from_instances(cls, instances: Iterable[EventInstance]) -> "RoleLabelSet":
        names: set[str] = set()
        for inst in instances:
            names.update(inst.roles)
        return cls(roles=tuple(sorted(names)))

    @property
    def none_id(self) -> int:
        return len(self.roles)

    @property
    def n_labels(self) -> int:
        return len(self.roles) + 1

    def label_id(self, role: str) -> int:
        try:
            return self._ids[role]
        except KeyError:
            raise DataError(f"unknown role type {role!r}") from None


def role_inventories(instances: Sequence[EventInstance]) -> dict[str, tuple[str, ...]]:
    """Map event type -> role inventory, verifying consistency across instances."""
    inv: dict[str, tuple[str, ...]] = {}
    for inst in instances:
        seen = inv.get(inst.event_type)
        if seen is None:
            inv[inst.event_type] = inst.roles
        elif seen != inst.roles:
            raise DataError(
                f"event type {inst.event_type!r} has conflicting role inventories: "
                f"{seen} vs {inst.roles}"
            )
    return inv
