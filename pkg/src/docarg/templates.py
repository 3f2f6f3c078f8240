"""Prompt templates with role slots, plus the per-event-type registry.

A template is a plain sentence whose slots are written ``<role>`` (ASCII) or
``⟨role⟩``. The registry file is a JSON object mapping event type to template
string. Event types without an entry fall back to a bare slot list over the
role inventory, e.g. ``"<attacker> <target> <place>"``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .exceptions import SequenceError

_SLOT_RE = re.compile(r"<([^<>]+)>|⟨([^⟨⟩]+)⟩")


@dataclass(frozen=True)
class PromptTemplate:
    event_type: str
    text: str
    slots: tuple[str, ...]

    @classmethod
    def parse(cls, event_type: str, text: str) -> "PromptTemplate":
        slots = tuple(m.group(1) or m.group(2) for m in _SLOT_RE.finditer(text))
        return cls(event_type=event_type, text=text, slots=slots)

    def check_against_inventory(self, roles) -> None:
        inventory = set(roles)
        for slot in self.slots:
            if slot not in inventory:
                raise SequenceError(
                    f"template for {self.event_type!r} uses slot {slot!r} "
                    f"absent from role inventory {sorted(inventory)}"
                )

    def tokens(self) -> list[tuple[str, str]]:
        """Whitespace tokens as ("slot", role) or ("word", surface) pairs, in order."""
        out: list[tuple[str, str]] = []
        for tok in self.text.split():
            m = _SLOT_RE.fullmatch(tok)
            if m:
                out.append(("slot", m.group(1) or m.group(2)))
            else:
                out.append(("word", tok))
        return out

    def literal_words(self) -> list[str]:
        return [surface for kind, surface in self.tokens() if kind == "word"]


def fallback_template(event_type: str, roles) -> PromptTemplate:
    text = " ".join(f"<{r}>" for r in roles)
    return PromptTemplate.parse(event_type, text)


def make_template_registry(
    config_file, inventories: dict[str, tuple[str, ...]] | None = None
) -> dict[str, PromptTemplate]:
    """Load templates from a JSON registry file.

    ``inventories`` supplies role inventories for event types missing from the
    file; each such type receives the bare-slot fallback template.
    """
    def reject_duplicates(pairs):
        seen = {}
        for key, value in pairs:
            if key in seen:
                raise SequenceError(f"duplicate template entry for event type {key!r}")
            seen[key] = value
        return seen

    if config_file is None:
        entries = {}
    else:
        with open(config_file, "r", encoding="utf-8") as fh:
            raw = fh.read()
        entries = json.loads(raw, object_pairs_hook=reject_duplicates) if raw.strip() else {}
        if not isinstance(entries, dict):
            raise SequenceError(f"{config_file}: template registry must be a JSON object")
    registry: dict[str, PromptTemplate] = {}
    for event_type, text in entries.items():
        registry[event_type] = PromptTemplate.parse(event_type, str(text))
    for event_type, roles in (inventories or {}).items():
        if event_type not in registry:
            registry[event_type] = fallback_template(event_type, roles)
    return registry
