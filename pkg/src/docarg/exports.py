"""File writers for visualization data and reports.

All CSVs are plain comma-separated text with a header row. Clue weights come
in two layouts: per-argument files (one row per context token) and a heatmap
matrix (one row per candidate span, each row a weight distribution summing
to 1).
"""

from __future__ import annotations

import csv
import json
import os

import torch

from .data import EventInstance
from .metrics import role_cooccurrence
from .role_guidance import cosine_similarity_matrix
from .span_model import SpanArgumentModel
from .training import TrainAssets, prepare_sequence

HEATMAP_SPAN_LIMIT = 30


def write_clue_weights_csv(path, tokens, weights) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["token", "weight"])
        for tok, wt in zip(tokens, weights):
            w.writerow([tok, f"{float(wt):.10g}"])


def write_clue_weights_json(path, tokens, weights) -> None:
    payload = [{"token": tok, "weight": float(wt)} for tok, wt in zip(tokens, weights)]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_clue_heatmap_csv(path, tokens, row_labels, matrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["span"] + list(tokens))
        for label, row in zip(row_labels, matrix):
            w.writerow([label] + [f"{float(x):.10g}" for x in row])


def write_role_similarity_csv(path, role_names, matrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["role"] + list(role_names))
        for name, row in zip(role_names, matrix):
            w.writerow([name] + [f"{float(x):.10g}" for x in row])


def write_embeddings_csv(path, rows) -> None:
    """Rows of (kind, label, vector) for downstream 2-d projection."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        first = True
        for kind, label, vec in rows:
            vec = [float(x) for x in vec]
            if first:
                w.writerow(["kind", "label"] + [f"v{i}" for i in range(len(vec))])
                first = False
            w.writerow([kind, label] + [f"{x:.10g}" for x in vec])


def write_cooccurrence_csv(path, instances: list[EventInstance]) -> list[str]:
    matrix, roles = role_cooccurrence(instances)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["role"] + roles)
        for name, row in zip(roles, matrix):
            w.writerow([name] + [f"{float(x):.10g}" for x in row])
    return roles


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def metrics_table_text(report: dict) -> str:
    lines = [f"events: {report['n_events']}   predictions: {report['n_predictions']}   gold: {report['n_gold']}"]
    lines.append(f"{'metric':<10}{'P':>8}{'R':>8}{'F1':>8}")
    for key, label in (
        ("arg_if", "Arg-I"),
        ("arg_cf", "Arg-C"),
        ("head_if", "Head-I"),
        ("head_cf", "Head-C"),
    ):
        m = report[key]
        lines.append(f"{label:<10}{m['precision']:>8.4f}{m['recall']:>8.4f}{m['f1']:>8.4f}")
    err = report.get("errors")
    if err:
        parts = "  ".join(f"{k}: {v}" for k, v in err["counts"].items())
        lines.append(f"errors ({err['total']}): {parts}")
    return "\n".join(lines)


def export_visuals(model, assets: TrainAssets, instance: EventInstance, out_dir) -> dict[str, str]:
    """Dump clue weights, the span/slot heatmap, role similarities, and raw
    role/argument embeddings for one instance."""
    os.makedirs(out_dir, exist_ok=True)
    seq = prepare_sequence(instance, assets)
    paths: dict[str, str] = {}
    with torch.no_grad():
        if isinstance(model, SpanArgumentModel):
            enc = model.encode_sequence(seq)
            scores = model(seq, enc)
            tokens = seq.context_tokens()
            if scores.clue_attn is not None:
                span_of = {sp: i for i, sp in enumerate(scores.spans)}
                for role, s, e in instance.gold_args:
                    row = scores.clue_attn[span_of[(s, e)]] if (s, e) in span_of else None
                    if row is None:
                        continue
                    p = os.path.join(out_dir, f"clue_weights_{role}_{s}_{e}.csv")
                    write_clue_weights_csv(p, tokens, row)
                    paths[f"clue_weights:{role}:{s}:{e}"] = p
                labels = [f"{s}-{e}" for s, e in scores.spans[:HEATMAP_SPAN_LIMIT]]
                p = os.path.join(out_dir, "clue_heatmap.csv")
                write_clue_heatmap_csv(p, tokens, labels, scores.clue_attn[: len(labels)])
                paths["clue_heatmap"] = p
            H_R = enc.H_R
            role_names = list(seq.roles) + ["<none>"]
            arg_rows = [
                ("argument", f"{role}:{s}-{e}", scores.reps[scores.spans.index((s, e))])
                for role, s, e in instance.gold_args
                if (s, e) in set(scores.spans)
            ]
        else:
            enc = model.encode_sequence(seq)
            out = model(seq, enc)
            tokens = seq.context_tokens()
            if out.clue_attn is not None:
                for k, role in enumerate(seq.slot_roles):
                    p = os.path.join(out_dir, f"clue_weights_slot{k}_{role}.csv")
                    write_clue_weights_csv(p, tokens, out.clue_attn[k])
                    paths[f"clue_weights:slot{k}:{role}"] = p
                p = os.path.join(out_dir, "clue_heatmap.csv")
                labels = [f"slot{k}:{r}" for k, r in enumerate(seq.slot_roles)]
                write_clue_heatmap_csv(p, tokens, labels, out.clue_attn)
                paths["clue_heatmap"] = p
            H_R = enc.H_R
            role_names = list(seq.roles) + ["<none>"]
            arg_rows = [
                ("argument", f"slot{k}:{r}", out.h_tilde[k])
                for k, r in enumerate(seq.slot_roles)
            ]
        if H_R.shape[0]:
            p = os.path.join(out_dir, "role_similarity.csv")
            write_role_similarity_csv(p, role_names, cosine_similarity_matrix(H_R))
            paths["role_similarity"] = p
            p = os.path.join(out_dir, "embeddings.csv")
            rows = [("role", name, H_R[i]) for i, name in enumerate(role_names)]
            write_embeddings_csv(p, rows + arg_rows)
            paths["embeddings"] = p
    return paths
