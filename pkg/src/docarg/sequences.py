"""Marked input sequences for the span and prompt variants.

Both builders emit a :class:`MarkedSequence` that records every index the
downstream modules need: the context block, trigger pieces, the representative
piece of each reserved role token, prompt slot positions, and the word/piece
alignment.

Span layout (role block appended)::

    [CLS] [EVT] <event-type> [EVT] [SEP]
    w1 ... [TRG] trigger words [TRG] ... wN [SEP]
    [R:r0] r0 [R:r0] [R:r1] r1 [R:r1] ... [SEP]

Prompt layout (role block prepended, filled prompt appended)::

    [CLS] [R:r0] r0 [R:r0] ... [SEP]
    w1 ... [TRG] trigger words [TRG] ... wN [SEP]
    <filled prompt> [SEP]

The separator that closes the role block stands for the "none" category in
both layouts. The role block side is a switch (``role_block``) because the two
variants place it on opposite ends; defaults follow each variant's layout.
"""

from __future__ import annotations

from dataclasses import dataclass

from .data import EventInstance
from .exceptions import SequenceError
from .templates import PromptTemplate
from .tokenizer import CLS, EVT, SEP, TRG, SubwordTokenizer, role_token_name


@dataclass(frozen=True)
class MarkedSequence:
    """A tokenized input with every special-token index map recorded."""

    pieces: tuple[int, ...]
    piece_text: tuple[str, ...]
    variant: str  # "span" | "prompt"
    roles: tuple[str, ...]
    context_range: tuple[int, int]  # inclusive, covers document words + trigger markers
    trigger_pieces: tuple[int, ...]  # pieces of the trigger words, markers excluded
    role_token_index: dict[str, int]  # role -> first wrapper token of its pair
    none_index: int  # separator closing the role block
    word_to_pieces: tuple[tuple[int, int], ...]  # inclusive piece range per word
    piece_to_word: dict[int, int]  # defined on context_range; markers map to trigger edge words
    event_marker_index: int | None = None
    slot_index: tuple[int, ...] = ()  # first piece of each filled slot, appearance order
    slot_roles: tuple[str, ...] = ()
    slot_piece_ranges: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def context_positions(self) -> tuple[int, ...]:
        """Global indices of document-word pieces, trigger markers excluded."""
        cached = getattr(self, "_ctx_positions", None)
        if cached is None:
            out = []
            for lo, hi in self.word_to_pieces:
                out.extend(range(lo, hi + 1))
            cached = tuple(out)
            object.__setattr__(self, "_ctx_positions", cached)
        return cached

    @property
    def role_positions(self) -> tuple[int, ...]:
        """Representative piece per role in inventory order, then the none separator."""
        if not self.role_token_index:
            return ()
        return tuple(self.role_token_index[r] for r in self.roles) + (self.none_index,)

    @property
    def n_role_slots(self) -> int:
        return len(self.roles) + 1

    def context_coord(self, piece_index: int) -> int:
        """Position of a global word-piece index inside the context slice."""
        try:
            return self._ctx_lookup[piece_index]
        except AttributeError:
            lookup = {p: i for i, p in enumerate(self.context_positions)}
            object.__setattr__(self, "_ctx_lookup", lookup)
            return self._ctx_lookup[piece_index]

    def word_span_to_context_range(self, start_word: int, end_word: int) -> tuple[int, int]:
        """Inclusive context-coordinate range covering a word span."""
        if not (0 <= start_word <= end_word < len(self.word_to_pieces)):
            raise SequenceError(f"word span ({start_word}, {end_word}) outside document")
        lo = self.context_coord(self.word_to_pieces[start_word][0])
        hi = self.context_coord(self.word_to_pieces[end_word][1])
        return lo, hi

    def trigger_context_range(self) -> tuple[int, int]:
        lo = self.context_coord(self.trigger_pieces[0])
        hi = self.context_coord(self.trigger_pieces[-1])
        return lo, hi

    def context_word_of(self, context_position: int) -> int:
        """Document word owning the given context-coordinate position."""
        return self.piece_to_word[self.context_positions[context_position]]

    def context_tokens(self) -> list[str]:
        return [self.piece_text[p] for p in self.context_positions]


class _Assembler:
    """Accumulates pieces while tracking indices of interest."""

    def __init__(self, tokenizer: SubwordTokenizer):
        self.tok = tokenizer
        self.ids: list[int] = []
        self.text: list[str] = []

    def special(self, name: str) -> int:
        pos = len(self.ids)
        self.ids.append(self.tok.special_token_id(name))
        self.text.append(name)
        return pos

    def words(self, words) -> list[tuple[int, int]]:
        ids, alignment = self.tok.encode(words)
        offset = len(self.ids)
        self.ids.extend(ids)
        self.text.extend(self.tok.piece_string(i) for i in ids)
        return [(lo + offset, hi + offset) for lo, hi in alignment]


def _role_block(asm: _Assembler, roles) -> tuple[dict[str, int], int]:
    """Emit ``[R:r] r [R:r]`` per role plus the closing separator; return index maps."""
    role_token_index: dict[str, int] = {}
    for role in roles:
        first = asm.special(role_token_name(role))
        asm.words([role])
        asm.special(role_token_name(role))
        role_token_index[role] = first
    none_index = asm.special(SEP)
    return role_token_index, none_index


def _context_block(asm: _Assembler, instance: EventInstance) -> tuple[
    list[tuple[int, int]], tuple[int, ...], dict[int, int]
]:
    """Emit document words with trigger markers; return alignment and trigger info."""
    ts, te = instance.trigger
    word_to_pieces: list[tuple[int, int]] = []
    piece_to_word: dict[int, int] = {}
    trigger_pieces: list[int] = []
    for w, word in enumerate(instance.words):
        if w == ts:
            piece_to_word[asm.special(TRG)] = ts
        (rng,) = asm.words([word])
        word_to_pieces.append(rng)
        for p in range(rng[0], rng[1] + 1):
            piece_to_word[p] = w
        if ts <= w <= te:
            trigger_pieces.extend(range(rng[0], rng[1] + 1))
        if w == te:
            piece_to_word[asm.special(TRG)] = te
    return word_to_pieces, tuple(trigger_pieces), piece_to_word


def build_span_input(
    instance: EventInstance,
    tokenizer: SubwordTokenizer,
    role_block: str = "suffix",
    include_role_block: bool = True,
) -> MarkedSequence:
    """Construct the span-variant input sequence with its index maps.

    ``include_role_block=False`` drops the reserved role tokens entirely (the
    role-guidance ablation); the none category then falls back to the final
    separator.
    """
    instance.validate()
    if not instance.roles:
        raise SequenceError(f"{instance.doc_id}: event type {instance.event_type!r} has no role inventory")
    if role_block not in ("prefix", "suffix"):
        raise SequenceError(f"role_block must be 'prefix' or 'suffix', got {role_block!r}")

    asm = _Assembler(tokenizer)
    asm.special(CLS)
    role_token_index: dict[str, int] = {}
    none_index = None
    if include_role_block and role_block == "prefix":
        role_token_index, none_index = _role_block(asm, instance.roles)
    event_marker_index = asm.special(EVT)
    asm.words([instance.event_type])
    asm.special(EVT)
    asm.special(SEP)

    ctx_start = len(asm.ids)
    word_to_pieces, trigger_pieces, piece_to_word = _context_block(asm, instance)
    ctx_end = len(asm.ids) - 1
    last_sep = asm.special(SEP)

    if include_role_block and role_block == "suffix":
        role_token_index, none_index = _role_block(asm, instance.roles)
    if none_index is None:
        none_index = last_sep

    return MarkedSequence(
        pieces=tuple(asm.ids),
        piece_text=tuple(asm.text),
        variant="span",
        roles=instance.roles,
        context_range=(ctx_start, ctx_end),
        trigger_pieces=trigger_pieces,
        role_token_index=role_token_index,
        none_index=none_index,
        word_to_pieces=tuple(word_to_pieces),
        piece_to_word=piece_to_word,
        event_marker_index=event_marker_index,
    )


def build_prompt_input(
    instance: EventInstance,
    template: PromptTemplate,
    tokenizer: SubwordTokenizer,
    role_block: str = "prefix",
    include_role_block: bool = True,
) -> MarkedSequence:
    """Construct the prompt-variant input: role prefix, context, filled prompt."""
    instance.validate()
    if template is None:
        raise SequenceError(f"{instance.doc_id}: no template for event type {instance.event_type!r}")
    if template.event_type != instance.event_type:
        raise SequenceError(
            f"template event type {template.event_type!r} does not match instance {instance.event_type!r}"
        )
    if not instance.roles:
        raise SequenceError(f"{instance.doc_id}: event type {instance.event_type!r} has no role inventory")
    template.check_against_inventory(instance.roles)
    if role_block not in ("prefix", "suffix"):
        raise SequenceError(f"role_block must be 'prefix' or 'suffix', got {role_block!r}")

    asm = _Assembler(tokenizer)
    asm.special(CLS)
    role_token_index: dict[str, int] = {}
    none_index = None
    if include_role_block and role_block == "prefix":
        role_token_index, none_index = _role_block(asm, instance.roles)

    ctx_start = len(asm.ids)
    word_to_pieces, trigger_pieces, piece_to_word = _context_block(asm, instance)
    ctx_end = len(asm.ids) - 1
    asm.special(SEP)

    slot_index: list[int] = []
    slot_roles: list[str] = []
    slot_ranges: list[tuple[int, int]] = []
    for kind, surface in template.tokens():
        if kind == "slot":
            (rng,) = asm.words([surface])  # slot filled with the role name itself
            slot_index.append(rng[0])
            slot_roles.append(surface)
            slot_ranges.append(rng)
        else:
            asm.words([surface])
    last_sep = asm.special(SEP)

    if include_role_block and role_block == "suffix":
        role_token_index, none_index = _role_block(asm, instance.roles)
    if none_index is None:
        none_index = last_sep

    return MarkedSequence(
        pieces=tuple(asm.ids),
        piece_text=tuple(asm.text),
        variant="prompt",
        roles=instance.roles,
        context_range=(ctx_start, ctx_end),
        trigger_pieces=trigger_pieces,
        role_token_index=role_token_index,
        none_index=none_index,
        word_to_pieces=tuple(word_to_pieces),
        piece_to_word=piece_to_word,
        event_marker_index=None,
        slot_index=tuple(slot_index),
        slot_roles=tuple(slot_roles),
        slot_piece_ranges=tuple(slot_ranges),
    )
