"""Train the prompt variant: templates with role slots, start/end selectors,
bipartite matching loss. Prints per-slot picks for a few test events."""

import os
import tempfile

from docarg import config
from docarg.exports import metrics_table_text
from docarg.synth import generate_synthetic, natural_templates
from docarg.templates import PromptTemplate
from docarg.training import (
    evaluate_model,
    load_checkpoint,
    predict_instances,
    save_checkpoint,
    train,
)

train_set = generate_synthetic(13, 120)
test_set = generate_synthetic(14, 30)
templates = {
    event_type: PromptTemplate.parse(event_type, text)
    for event_type, text in natural_templates(train_set).items()
}
print("templates:")
for event_type, tpl in templates.items():
    print(f"  {event_type}: {tpl.text}")

cfg = config.toy("prompt")
cfg.optimizer.steps = 900  # shortened for the demo
cfg.seed = 1

print(f"\ntraining prompt variant ({cfg.optimizer.steps} steps, "
      f"{cfg.backend.layers}+{cfg.backend.decoder_layers} layers) ...")
checkpoint = train(cfg, train_set, templates=templates, quiet=True)

with tempfile.TemporaryDirectory() as workdir:
    path = os.path.join(workdir, "prompt.ckpt")
    save_checkpoint(checkpoint, path)
    model, assets, _ = load_checkpoint(path)

    report = evaluate_model(model, assets, test_set)
    print("\ntest-set report:")
    print(metrics_table_text(report))

    print("\nslot fills for three test events:")
    for inst, ev in zip(test_set[:3], predict_instances(model, assets, test_set[:3])):
        golds = {f"{r}={inst.words[s]}" for r, s, e in inst.gold_args}
        picks = {f"{p.role}={' '.join(inst.words[p.start:p.end + 1])}" for p in ev.predictions}
        print(f"  {inst.doc_id}: gold {sorted(golds)} -> predicted {sorted(picks)}")
