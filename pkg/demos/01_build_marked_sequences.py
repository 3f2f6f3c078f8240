"""Walk through input construction for both model variants.

Shows the exact piece layouts, the recorded index maps (trigger pieces, role
token positions, prompt slots), and the round trip from context pieces back
to document words.
"""

from docarg.data import EventInstance
from docarg.sequences import build_prompt_input, build_span_input
from docarg.templates import PromptTemplate
from docarg.tokenizer import VocabTokenizer

instance = EventInstance(
    doc_id="demo-1",
    words=("troops", "shelled", "the", "harbor", "district", "at", "dawn"),
    event_type="attack",
    trigger=(1, 1),
    roles=("attacker", "target", "place"),
    gold_args=(("attacker", 0, 0), ("place", 3, 4)),
)

template = PromptTemplate.parse("attack", "<attacker> attacked <target> at <place>")
tokenizer = VocabTokenizer.for_dataset([instance], {"attack": template}, max_piece_len=12)

print("=== span-variant layout ===")
seq = build_span_input(instance, tokenizer)
print(" ".join(seq.piece_text))
print("trigger pieces:", seq.trigger_pieces, "->", [seq.piece_text[p] for p in seq.trigger_pieces])
print("role token index:", seq.role_token_index)
print("none category anchored at piece", seq.none_index, f"({seq.piece_text[seq.none_index]})")
print("context range:", seq.context_range)

print("\nround trip: context pieces back to words")
lo, hi = seq.context_range
for p in range(lo, hi + 1):
    print(f"  piece {p:2d} {seq.piece_text[p]:>10s} -> word {seq.piece_to_word[p]}"
          f" ({instance.words[seq.piece_to_word[p]]})")

print("\n=== prompt-variant layout ===")
pseq = build_prompt_input(instance, template, tokenizer)
print(" ".join(pseq.piece_text))
print("slots in appearance order:")
for k, (role, piece) in enumerate(zip(pseq.slot_roles, pseq.slot_index)):
    print(f"  slot {k}: role={role} at piece {piece} ({pseq.piece_text[piece]})")
print("role block sits before the context; its separator stands for 'none':",
      pseq.none_index, "<", pseq.context_range[0])
