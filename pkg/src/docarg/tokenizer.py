"""Deterministic subword tokenizer with reserved special tokens.

The package never assumes a particular pretrained vocabulary; any object
satisfying :class:`SubwordTokenizer` can be injected. :class:`VocabTokenizer`
is the built-in implementation: it splits long words into fixed-width chunks
(continuations prefixed with ``##``) and assigns ids deterministically, so
two builds over the same corpus produce identical id maps.
"""

from __future__ import annotations

from typing import Iterable, Protocol, Sequence, runtime_checkable

from .exceptions import SequenceError

PAD, UNK, CLS, SEP, EVT, TRG = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[EVT]", "[TRG]"
BASE_SPECIALS = (PAD, UNK, CLS, SEP, EVT, TRG)


def role_token_name(role: str) -> str:
    return f"[R:{role}]"


@runtime_checkable
class SubwordTokenizer(Protocol):
    """What sequence construction needs from a tokenizer."""

    vocab_size: int

    def encode(self, words: Sequence[str]) -> tuple[list[int], list[tuple[int, int]]]:
        """Return piece ids plus one inclusive (lo, hi) piece range per word."""
        ...

    def special_token_id(self, name: str) -> int:
        ...

    def piece_string(self, piece_id: int) -> str:
        ...


class VocabTokenizer:
    """Rule-based subword tokenizer over a fixed, sorted vocabulary.

    Words longer than ``max_piece_len`` characters are split into chunks of
    that width; chunks after the first carry a ``##`` prefix. Ids are laid
    out as: base specials, then one reserved token per role type (sorted by
    role name), then the sorted piece vocabulary.
    """

    def __init__(self, pieces: Iterable[str], roles: Iterable[str], max_piece_len: int = 6):
        if max_piece_len < 1:
            raise ValueError("max_piece_len must be >= 1")
        self.max_piece_len = max_piece_len
        self.role_names = tuple(sorted(set(roles)))
        self._specials = list(BASE_SPECIALS) + [role_token_name(r) for r in self.role_names]
        self._special_ids = {name: i for i, name in enumerate(self._specials)}
        piece_list = sorted(set(pieces))
        base = len(self._specials)
        self._piece_ids = {p: base + i for i, p in enumerate(piece_list)}
        self._strings = self._specials + piece_list
        self.vocab_size = len(self._strings)

    @classmethod
    def build(
        cls,
        word_sources: Iterable[str],
        roles: Iterable[str],
        max_piece_len: int = 6,
    ) -> "VocabTokenizer":
        """Collect the piece vocabulary from an iterable of surface words."""
        pieces: set[str] = set()
        tmp = cls((), roles, max_piece_len=max_piece_len)
        for word in word_sources:
            pieces.update(tmp.split_word(word))
        return cls(pieces, roles, max_piece_len=max_piece_len)

    @classmethod
    def for_dataset(cls, instances, templates=None, max_piece_len: int = 6) -> "VocabTokenizer":
        """Build a vocabulary covering documents, role names, event types, and templates."""
        words: list[str] = []
        roles: set[str] = set()
        for inst in instances:
            words.extend(inst.words)
            words.append(inst.event_type)
            words.extend(inst.roles)
            roles.update(inst.roles)
        if templates:
            for tpl in templates.values():
                words.extend(tpl.literal_words())
        return cls.build(words, roles, max_piece_len=max_piece_len)

    def split_word(self, word: str) -> list[str]:
        if word == "":
            raise SequenceError("cannot tokenize an empty word")
        k = self.max_piece_len
        if len(word) <= k:
            return [word]
        chunks = [word[:k]]
        chunks.extend("##" + word[i : i + k] for i in range(k, len(word), k))
        return chunks

    def encode(self, words: Sequence[str]) -> tuple[list[int], list[tuple[int, int]]]:
        ids: list[int] = []
        alignment: list[tuple[int, int]] = []
        unk = self._special_ids[UNK]
        for word in words:
            lo = len(ids)
            for piece in self.split_word(word):
                ids.append(self._piece_ids.get(piece, unk))
            alignment.append((lo, len(ids) - 1))
        return ids, alignment

    def special_token_id(self, name: str) -> int:
        try:
            return self._special_ids[name]
        except KeyError:
            raise SequenceError(f"unknown special token {name!r}") from None

    def role_token_id(self, role: str) -> int:
        return self.special_token_id(role_token_name(role))

    def piece_string(self, piece_id: int) -> str:
        return self._strings[piece_id]

    def decode(self, piece_ids: Iterable[int]) -> list[str]:
        return [self._strings[i] for i in piece_ids]

    def join_pieces(self, piece_ids: Iterable[int]) -> str:
        """Undo subword splitting: ``["fire", "##truck"] -> "firetruck"``."""
        out = []
        for pid in piece_ids:
            s = self._strings[pid]
            if s.startswith("##") and out:
                out[-1] += s[2:]
            else:
                out.append(s)
        return " ".join(out)
