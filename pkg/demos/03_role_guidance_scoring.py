"""Role guidance end to end on toy numbers: token-to-role attention, role
fusion, dimension reduction, and core-tensor triple scoring."""

import torch

from docarg.data import EventInstance, RoleLabelSet
from docarg.backends import TinyTransformerBackend
from docarg.encoding import encode
from docarg.role_guidance import (
    TripleScoreModel,
    cosine_similarity_matrix,
    extract_role_attention,
    role_fusion,
    tucker_score_all,
)
from docarg.sequences import build_span_input
from docarg.tokenizer import VocabTokenizer

torch.manual_seed(7)

instance = EventInstance(
    doc_id="demo-3",
    words=("rebels", "seized", "the", "port", "overnight"),
    event_type="capture",
    trigger=(1, 1),
    roles=("agent", "target"),
    gold_args=(("agent", 0, 0), ("target", 3, 3)),
)
tokenizer = VocabTokenizer.for_dataset([instance])
seq = build_span_input(instance, tokenizer)
backend = TinyTransformerBackend(tokenizer.vocab_size, d=32, num_heads=2,
                                 num_layers=2, max_tokens=64).eval()
enc = encode(seq, backend)

roles_plus_none = list(seq.roles) + ["<none>"]
print("role attention profiles (mass from a span onto each role token):")
for span in [(0, 0), (3, 3)]:
    prof = extract_role_attention(enc.A, seq, span)
    print(f"  span {span} ({instance.words[span[0]]}):",
          {r: round(float(w), 4) for r, w in zip(roles_plus_none, prof.weights)})

trig = extract_role_attention(enc.A, seq, "trigger")
fused = role_fusion(enc.H_R, extract_role_attention(enc.A, seq, (0, 0)), trig)
print("\nfused role weights for span (0,0):",
      {r: round(float(w), 4) for r, w in zip(roles_plus_none, fused.attn)})

labels = RoleLabelSet.from_instances([instance])
scorer = TripleScoreModel(32, 8, 16, labels.n_labels, none_label=labels.none_id)
H_red = scorer.reduced_roles(enc.H_R)
print("\nreduced role features:", tuple(H_red.shape), "(from d=32 to d'=8)")

h_t = enc.H_C[seq.trigger_context_range()[0]]
span_reps = torch.stack([enc.H_C[0], enc.H_C[3]])
label_ids = torch.tensor([labels.label_id(r) for r in seq.roles] + [labels.none_id])
with torch.no_grad():
    probs = torch.sigmoid(tucker_score_all(scorer, h_t, span_reps, H_red, label_ids))
print("triple scores sigma(I Z r_k + b_k) for two spans x three labels:")
for name, row in zip(["rebels", "port"], probs):
    print(f"  {name:>7s}:", {r: round(float(p), 4) for r, p in zip(roles_plus_none, row)})

print("\nrole-representation cosine similarities:")
sim = cosine_similarity_matrix(enc.H_R)
for r, row in zip(roles_plus_none, sim):
    print(f"  {r:>8s}:", [round(float(x), 3) for x in row])
