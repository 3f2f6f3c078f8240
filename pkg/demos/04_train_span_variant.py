"""Train the span variant on a small planted-clue corpus and inspect results.

Runs in about a minute on a laptop CPU. For the full-strength schedule used
by the acceptance suite, keep the default toy() epochs.
"""

import os
import tempfile

from docarg import config
from docarg.exports import export_visuals, metrics_table_text
from docarg.synth import generate_synthetic
from docarg.training import (
    evaluate_model,
    load_checkpoint,
    parameter_manifest,
    save_checkpoint,
    train,
)

train_set = generate_synthetic(13, 120)
test_set = generate_synthetic(14, 30)

cfg = config.toy("span")
cfg.optimizer.epochs = 25  # shortened for the demo
cfg.seed = 1

print(f"training span variant on {len(train_set)} events "
      f"({cfg.optimizer.epochs} epochs, d={cfg.backend.d}) ...")
checkpoint = train(cfg, train_set, quiet=False)

with tempfile.TemporaryDirectory() as workdir:
    path = os.path.join(workdir, "span.ckpt")
    save_checkpoint(checkpoint, path)
    model, assets, _ = load_checkpoint(path)

    print("\nparameter groups:", parameter_manifest(model))

    report = evaluate_model(model, assets, test_set)
    print("\ntest-set report:")
    print(metrics_table_text(report))

    viz_dir = os.path.join(workdir, "viz")
    paths = export_visuals(model, assets, test_set[0], viz_dir)
    print("\nvisualization exports for the first test event:")
    for key, p in sorted(paths.items()):
        print(f"  {key}: {os.path.basename(p)}")
    with open(paths["clue_heatmap"]) as fh:
        print("\nclue heatmap head:")
        for line in fh.readlines()[:3]:
            cells = line.strip().split(",")
            print("  ", ",".join(cells[:6]), "..." if len(cells) > 6 else "")
