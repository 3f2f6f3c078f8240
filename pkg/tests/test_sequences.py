import json

import pytest

from docarg.data import EventInstance
from docarg.exceptions import SequenceError
from docarg.sequences import build_prompt_input, build_span_input
from docarg.templates import PromptTemplate, fallback_template, make_template_registry
from docarg.tokenizer import VocabTokenizer


def minimal_instance():
    return EventInstance(
        doc_id="m",
        words=("fired",),
        event_type="attack",
        trigger=(0, 0),
        roles=("attacker", "target"),
    )


def minimal_tokenizer():
    # wide piece limit keeps every word a single piece for layout assertions
    return VocabTokenizer.build(
        ["fired", "attack", "attacker", "target"], ["attacker", "target"], max_piece_len=12
    )


class TestSpanLayout:
    def test_smallest_legal_instance_layout(self):
        seq = build_span_input(minimal_instance(), minimal_tokenizer())
        assert list(seq.piece_text) == [
            "[CLS]", "[EVT]", "attack", "[EVT]", "[SEP]",
            "[TRG]", "fired", "[TRG]", "[SEP]",
            "[R:attacker]", "attacker", "[R:attacker]",
            "[R:target]", "target", "[R:target]", "[SEP]",
        ]
        assert seq.role_token_index == {"attacker": 9, "target": 12}
        assert seq.none_index == 15
        assert seq.trigger_pieces == (6,)
        assert seq.context_range == (5, 7)
        assert seq.context_positions == (6,)

    def test_role_name_wrapped_by_its_own_pair(self):
        inst = EventInstance(
            doc_id="v", words=("x",), event_type="harm", trigger=(0, 0), roles=("Victim",)
        )
        tok = VocabTokenizer.build(["x", "harm", "Victim"], ["Victim"])
        seq = build_span_input(inst, tok)
        k = seq.role_token_index["Victim"]
        assert seq.piece_text[k : k + 3] == ("[R:Victim]", "Victim", "[R:Victim]")

    def test_long_document_length_formula(self):
        # 600 words, mixed lengths so several words split into multiple pieces
        words = tuple(f"word{i:03d}" if i % 3 else f"w{i}" for i in range(600))
        inst = EventInstance(
            doc_id="long", words=words, event_type="attack",
            trigger=(250, 250), roles=("attacker", "target"),
        )
        tok = VocabTokenizer.build(list(words) + ["attack", "attacker", "target"],
                                   ["attacker", "target"])
        seq = build_span_input(inst, tok)
        assert len(seq.word_to_pieces) == 600
        # independent count: piece totals from the tokenizer's own splitting rule
        n_pieces = sum(len(tok.split_word(w)) for w in words)
        n_event = len(tok.split_word("attack"))
        n_roles = sum(len(tok.split_word(r)) for r in ("attacker", "target"))
        n_specials = 12  # CLS, 2xEVT, 3xSEP, 2xTRG, 2 wrappers per role
        assert len(seq) == n_pieces + n_event + n_roles + n_specials

    def test_multiword_trigger_marked_on_both_sides(self, tiny_instance, tiny_tokenizer):
        inst = EventInstance(
            doc_id="t", words=tiny_instance.words, event_type="attack",
            trigger=(2, 4), roles=("attacker",),
        )
        seq = build_span_input(inst, tiny_tokenizer)
        lo = seq.trigger_pieces[0]
        hi = seq.trigger_pieces[-1]
        assert seq.piece_text[lo - 1] == "[TRG]"
        assert seq.piece_text[hi + 1] == "[TRG]"

    def test_idempotent_construction(self, tiny_instance, tiny_tokenizer):
        a = build_span_input(tiny_instance, tiny_tokenizer)
        b = build_span_input(tiny_instance, tiny_tokenizer)
        assert a.pieces == b.pieces
        assert a.role_token_index == b.role_token_index
        assert a.word_to_pieces == b.word_to_pieces

    def test_index_integrity_round_trip(self, tiny_instance, tiny_tokenizer):
        seq = build_span_input(tiny_instance, tiny_tokenizer)
        trigger_surface = tiny_tokenizer.join_pieces(seq.pieces[p] for p in seq.trigger_pieces)
        assert trigger_surface == "ordered"
        for role, pos in seq.role_token_index.items():
            assert seq.piece_text[pos] == f"[R:{role}]"
        # every context piece maps back to exactly one document word
        lo, hi = seq.context_range
        for p in range(lo, hi + 1):
            assert p in seq.piece_to_word
        for w, (plo, phi) in enumerate(seq.word_to_pieces):
            for p in range(plo, phi + 1):
                assert seq.piece_to_word[p] == w

    def test_no_role_inventory_rejected(self, tiny_tokenizer):
        inst = EventInstance(doc_id="x", words=("a",), event_type="attack",
                             trigger=(0, 0), roles=())
        with pytest.raises(SequenceError, match="no role inventory"):
            build_span_input(inst, tiny_tokenizer)

    def test_role_block_prefix_switch(self, tiny_instance, tiny_tokenizer):
        seq = build_span_input(tiny_instance, tiny_tokenizer, role_block="prefix")
        assert seq.piece_text[1] == "[R:attacker]"
        assert seq.role_token_index["attacker"] == 1

    def test_role_block_can_be_dropped(self, tiny_instance, tiny_tokenizer):
        seq = build_span_input(tiny_instance, tiny_tokenizer, include_role_block=False)
        assert seq.role_token_index == {}
        assert seq.role_positions == ()
        assert seq.piece_text[seq.none_index] == "[SEP]"
        assert seq.none_index == len(seq) - 1


class TestPromptLayout:
    def test_slot_order_follows_appearance(self, tiny_instance):
        template = PromptTemplate.parse(
            "attack", "<attacker> struck <target> today"
        )
        tok = VocabTokenizer.for_dataset([tiny_instance], {"attack": template}, max_piece_len=12)
        seq = build_prompt_input(tiny_instance, template, tok)
        assert seq.slot_roles == ("attacker", "target")
        assert len(seq.slot_index) == 2
        assert seq.piece_text[seq.slot_index[0]] == "attacker"
        assert seq.piece_text[seq.slot_index[1]] == "target"

    def test_role_block_prepended_and_none_is_its_separator(self, tiny_instance):
        template = fallback_template("attack", tiny_instance.roles)
        tok = VocabTokenizer.for_dataset([tiny_instance], {"attack": template})
        seq = build_prompt_input(tiny_instance, template, tok)
        assert seq.piece_text[1] == "[R:attacker]"
        assert seq.piece_text[seq.none_index] == "[SEP]"
        assert seq.none_index < seq.context_range[0]

    def test_zero_slot_template_succeeds(self, tiny_instance):
        template = PromptTemplate.parse("attack", "nothing to fill here")
        tok = VocabTokenizer.for_dataset([tiny_instance], {"attack": template})
        seq = build_prompt_input(tiny_instance, template, tok)
        assert seq.slot_index == ()

    def test_repeated_role_gets_two_distinct_slots(self, tiny_instance):
        template = PromptTemplate.parse("attack", "<target> hit near <target>")
        tok = VocabTokenizer.for_dataset([tiny_instance], {"attack": template})
        seq = build_prompt_input(tiny_instance, template, tok)
        assert seq.slot_roles == ("target", "target")
        assert seq.slot_index[0] != seq.slot_index[1]

    def test_event_type_mismatch_rejected(self, tiny_instance, tiny_tokenizer):
        template = PromptTemplate.parse("other", "<attacker>")
        with pytest.raises(SequenceError, match="does not match"):
            build_prompt_input(tiny_instance, template, tiny_tokenizer)

    def test_slot_outside_inventory_rejected(self, tiny_instance, tiny_tokenizer):
        template = PromptTemplate.parse("attack", "<bogus>")
        with pytest.raises(SequenceError, match="absent from role inventory"):
            build_prompt_input(tiny_instance, template, tiny_tokenizer)

    def test_missing_template_rejected(self, tiny_instance, tiny_tokenizer):
        with pytest.raises(SequenceError, match="no template"):
            build_prompt_input(tiny_instance, None, tiny_tokenizer)


class TestTemplateRegistry:
    def test_single_entry_registry(self, tmp_path):
        path = tmp_path / "templates.json"
        path.write_text(json.dumps({"attack": "<attacker> struck <target>"}))
        registry = make_template_registry(path)
        assert set(registry) == {"attack"}
        assert registry["attack"].slots == ("attacker", "target")

    def test_fallback_lists_all_roles_in_inventory_order(self, tmp_path):
        path = tmp_path / "templates.json"
        path.write_text("{}")
        registry = make_template_registry(path, {"sale": ("buyer", "seller")})
        assert registry["sale"].slots == ("buyer", "seller")
        assert registry["sale"].text == "<buyer> <seller>"

    def test_duplicate_event_type_rejected(self, tmp_path):
        path = tmp_path / "templates.json"
        path.write_text('{"attack": "<a>", "attack": "<b>"}')
        with pytest.raises(SequenceError, match="duplicate"):
            make_template_registry(path)

    def test_three_type_corpus_slot_counts(self, tmp_path):
        inventories = {f"ev{k}": tuple(f"r{k}{j}" for j in range(k + 1)) for k in range(3)}
        path = tmp_path / "templates.json"
        path.write_text("{}")
        registry = make_template_registry(path, inventories)
        assert len(registry) == 3
        for event_type, roles in inventories.items():
            assert len(registry[event_type].slots) == len(roles)

    def test_unicode_slot_markers_accepted(self):
        template = PromptTemplate.parse("attack", "⟨killer⟩ killed ⟨victim⟩ at ⟨place⟩")
        assert template.slots == ("killer", "victim", "place")
