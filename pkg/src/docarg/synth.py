"""Synthetic corpus with planted signal, sized for desk-scale training runs.

Every event type carries a fixed role inventory; roles are organized in
pairs that share part of their argument lexicon. At most one filled role per
event draws its argument from the shared part: that argument is ambiguous on
surface form alone, and the only way to resolve it is a clue token planted
at a random position elsewhere in the document. With probability
``clue_strength`` a planted clue names the argument's true role, otherwise a
random role, so at ``clue_strength=0`` clue tokens are fully independent of
the labels. Generation is driven by a single ``random.Random(seed)`` stream
and is byte-reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .data import EventInstance
from .exceptions import DataError

ROLE_NAME_POOL = (
    "agent", "victim", "place", "instrument", "target", "origin",
    "buyer", "seller", "carrier", "topic",
)
EVENT_NAME_POOL = ("clash", "transfer", "journey", "deal", "protest", "rescue")

UNIQUE_WORDS_PER_ROLE = 3
SHARED_WORDS_PER_PAIR = 3


@dataclass(frozen=True)
class SynthLexicon:
    """Reserved word pools carved out of the front of the vocabulary."""

    roles: tuple[str, ...]
    event_types: tuple[str, ...]
    inventories: dict[str, tuple[str, ...]]
    triggers: dict[str, str]
    unique_args: dict[str, tuple[str, ...]]
    shared_args: dict[str, tuple[str, ...]]  # keyed by role; pair roles share a tuple
    clues: dict[str, str]
    fillers: tuple[str, ...]


def _names(pool, n: int, prefix: str) -> tuple[str, ...]:
    out = list(pool[:n])
    out.extend(f"{prefix}{i}" for i in range(len(out), n))
    return tuple(out)


def build_lexicon(vocab: int, n_event_types: int, n_roles: int) -> SynthLexicon:
    if n_event_types < 1 or n_roles < 2:
        raise DataError("need at least one event type and two roles")
    roles = _names(ROLE_NAME_POOL, n_roles, "role")
    event_types = _names(EVENT_NAME_POOL, n_event_types, "event")
    n_pairs = (n_roles + 1) // 2
    required = n_event_types + n_roles * UNIQUE_WORDS_PER_ROLE + n_pairs * SHARED_WORDS_PER_PAIR
    if vocab < required + 1:
        raise DataError(
            f"vocabulary of {vocab} words cannot hold {required} reserved marker words"
        )
    words = [f"w{i:03d}" for i in range(vocab)]
    cursor = 0

    def take(n):
        nonlocal cursor
        chunk = tuple(words[cursor : cursor + n])
        cursor += n
        return chunk

    triggers = {e: take(1)[0] for e in event_types}
    unique_args = {r: take(UNIQUE_WORDS_PER_ROLE) for r in roles}
    shared_args: dict[str, tuple[str, ...]] = {}
    for p in range(n_pairs):
        pool = take(SHARED_WORDS_PER_PAIR)
        shared_args[roles[2 * p]] = pool
        if 2 * p + 1 < n_roles:
            shared_args[roles[2 * p + 1]] = pool
    # a role's clue token is its own name appearing in the running text, so
    # role-interactive encodings can tie the mention to the reserved role token
    clues = {r: r for r in roles}
    fillers = tuple(words[cursor:])

    # each inventory holds one full shared-lexicon pair plus a carry-over role
    inventories = {
        e: tuple(
            roles[k % n_roles] for k in (2 * t, 2 * t + 1, 2 * t + 2)
        )
        for t, e in enumerate(event_types)
    }
    inventories = {e: tuple(dict.fromkeys(inv)) for e, inv in inventories.items()}
    return SynthLexicon(
        roles=roles,
        event_types=event_types,
        inventories=inventories,
        triggers=triggers,
        unique_args=unique_args,
        shared_args=shared_args,
        clues=clues,
        fillers=fillers,
    )


def _place(rng: random.Random, free: set[int], length: int, tries: int = 40) -> int | None:
    """A start index whose whole span is free, or None."""
    if not free:
        return None
    hi = max(free) - length + 1
    if hi < 0:
        return None
    for _ in range(tries):
        start = rng.randrange(0, hi + 1)
        if all(start + k in free for k in range(length)):
            return start
    return None


def generate_synthetic(
    seed: int,
    n_docs: int,
    vocab: int = 120,
    n_event_types: int = 3,
    n_roles: int = 6,
    clue_strength: float = 0.9,
    fill_prob: float = 0.85,
    ambiguity: float = 0.35,
    clue_copies: int = 1,
    two_word_prob: float = 0.0,
    doc_len: tuple[int, int] = (18, 32),
) -> list[EventInstance]:
    """Produce ``n_docs`` single-event instances with planted clue structure."""
    if n_docs <= 0 or vocab <= 0:
        raise DataError("n_docs and vocab must be positive")
    lex = build_lexicon(vocab, n_event_types, n_roles)
    rng = random.Random(seed)
    instances = []
    for i in range(n_docs):
        length = rng.randint(*doc_len)
        tokens: list[str | None] = [None] * length
        free = set(range(length))

        event_type = rng.choice(lex.event_types)
        t_pos = _place(rng, free, 1)
        tokens[t_pos] = lex.triggers[event_type]
        free.discard(t_pos)

        gold = []
        ambiguous_used = False
        for role in lex.inventories[event_type]:
            if rng.random() >= fill_prob:
                continue
            span_len = 2 if rng.random() < two_word_prob else 1
            start = _place(rng, free, span_len)
            if start is None:
                continue
            ambiguous = not ambiguous_used and rng.random() < ambiguity
            pool = lex.shared_args[role] if ambiguous else lex.unique_args[role]
            for k in range(span_len):
                tokens[start + k] = rng.choice(pool)
                free.discard(start + k)
            gold.append((role, start, start + span_len - 1))
            # the clue sits far from the span; only document-level aggregation
            # can pair it with an ambiguous argument
            plant = ambiguous or rng.random() < clue_strength
            if ambiguous:
                ambiguous_used = True
            if plant:
                named = role if rng.random() < clue_strength else rng.choice(lex.roles)
                for _ in range(clue_copies):
                    pos = _place(rng, free, 1)
                    if pos is not None:
                        tokens[pos] = lex.clues[named]
                        free.discard(pos)

        for pos in free:
            tokens[pos] = rng.choice(lex.fillers)

        instances.append(
            EventInstance(
                doc_id=f"synth-{i:04d}",
                words=tuple(tokens),
                event_type=event_type,
                trigger=(t_pos, t_pos),
                roles=lex.inventories[event_type],
                gold_args=tuple(gold),
            ).validate()
        )
    return instances


def natural_templates(lex_or_instances) -> dict[str, str]:
    """One short slotted sentence per event type, covering its inventory."""
    if isinstance(lex_or_instances, SynthLexicon):
        inventories = lex_or_instances.inventories
    else:
        inventories = {}
        for inst in lex_or_instances:
            inventories.setdefault(inst.event_type, inst.roles)
    out = {}
    for event_type, roles in inventories.items():
        slots = " then ".join(f"<{r}>" for r in roles)
        out[event_type] = f"{event_type} involved {slots}"
    return out
