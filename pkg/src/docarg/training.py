"""Training loop, checkpointing, evaluation, and parameter accounting.

Determinism contract: with ``config.deterministic`` (the default) training
pins torch to a single thread and reseeds every generator from
``config.seed``, so two runs over the same data produce byte-identical
checkpoints. Checkpoints are written with the legacy (non-zip) serializer,
which carries no timestamps.
"""

from __future__ import annotations

import math
import pickle
import random
from dataclasses import dataclass

import torch
from torch import nn

from .backends import TinyTransformerBackend
from .config import RunConfig
from .data import EventInstance, EventPredictions, RoleLabelSet, role_inventories
from .exceptions import DivergenceError
from .metrics import count_errors, head_f1, span_f1
from .prompt_model import PromptArgumentModel
from .sequences import MarkedSequence, build_prompt_input, build_span_input
from .span_model import (
    FocalLossConfig,
    SpanArgumentModel,
    decode_predictions,
    focal_loss,
    gold_span_labels,
)
from .templates import PromptTemplate, fallback_template
from .tokenizer import VocabTokenizer


@dataclass
class TrainAssets:
    """Everything besides the weights needed to run a trained model."""

    config: RunConfig
    tokenizer: VocabTokenizer
    labels: RoleLabelSet
    templates: dict[str, PromptTemplate] | None


def set_determinism(seed: int, single_thread: bool = True) -> None:
    if single_thread:
        torch.set_num_threads(1)
    torch.manual_seed(seed)


def build_backend(config: RunConfig, vocab_size: int) -> TinyTransformerBackend:
    b = config.backend
    return TinyTransformerBackend(
        vocab_size=vocab_size,
        d=b.d,
        num_heads=b.heads,
        num_layers=b.layers,
        max_tokens=b.max_tokens,
        decoder_layers=b.decoder_layers,
        ffn_mult=b.ffn_mult,
        dropout=b.dropout,
    )


def build_model(config: RunConfig, vocab_size: int, labels: RoleLabelSet) -> nn.Module:
    backend = build_backend(config, vocab_size)
    window = config.structure.window
    stride = config.structure.stride
    if config.variant == "span":
        return SpanArgumentModel(
            backend,
            labels,
            d_reduced=config.d_reduced,
            d_interaction=config.d_interaction,
            use_cca=not config.disable_cca,
            use_rlig=not config.disable_rlig,
            max_span_length=config.structure.max_span_length,
            window=window,
            stride=stride,
        )
    return PromptArgumentModel(
        backend,
        use_cca=not config.disable_cca,
        use_rlig=not config.disable_rlig,
        max_span_length=config.structure.max_span_length,
        window=window,
        stride=stride,
    )


def prepare_assets(
    config: RunConfig,
    instances: list[EventInstance],
    templates: dict[str, PromptTemplate] | None = None,
) -> TrainAssets:
    labels = RoleLabelSet.from_instances(instances)
    if config.variant == "prompt":
        inventories = role_inventories(instances)
        templates = dict(templates or {})
        for event_type, roles in inventories.items():
            if event_type not in templates:
                templates[event_type] = fallback_template(event_type, roles)
    tokenizer = VocabTokenizer.for_dataset(
        instances,
        templates if config.variant == "prompt" else None,
        max_piece_len=config.backend.max_piece_len,
    )
    return TrainAssets(config=config, tokenizer=tokenizer, labels=labels, templates=templates)


def prepare_sequence(instance: EventInstance, assets: TrainAssets) -> MarkedSequence:
    config = assets.config
    include_roles = not config.disable_rlig
    if config.variant == "span":
        return build_span_input(
            instance,
            assets.tokenizer,
            role_block=config.structure.role_block,
            include_role_block=include_roles,
        )
    template = assets.templates.get(instance.event_type)
    if template is None:
        template = fallback_template(instance.event_type, instance.roles)
    return build_prompt_input(
        instance,
        template,
        assets.tokenizer,
        role_block=config.structure.role_block,
        include_role_block=include_roles,
    )


def instance_loss(model, assets: TrainAssets, seq, instance, counters: dict) -> torch.Tensor:
    if assets.config.variant == "span":
        scores = model(seq)
        labels = gold_span_labels(instance, scores.spans, counters)
        cfg = FocalLossConfig(alpha=assets.config.loss.alpha, gamma=assets.config.loss.gamma)
        return focal_loss(scores.logits, labels, cfg, counters)
    out = model(seq)
    return model.loss(seq, out, instance, counters)


def _length_batches(lengths: list[int], batch_size: int) -> list[list[int]]:
    order = sorted(range(len(lengths)), key=lambda i: (lengths[i], i))
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def _lr_lambda(total_steps: int, warmup_ratio: float):
    warmup = max(1, int(round(total_steps * warmup_ratio)))

    def fn(step: int) -> float:
        if step < warmup:
            return (step + 1) / warmup
        remaining = max(1, total_steps - warmup)
        return max(0.0, (total_steps - step) / remaining)

    return fn


def train(
    config: RunConfig,
    train_instances: list[EventInstance],
    dev_instances: list[EventInstance] | None = None,
    templates: dict[str, PromptTemplate] | None = None,
    quiet: bool = True,
    eval_every: int | None = None,
) -> dict:
    """Train a model from scratch and return an in-memory checkpoint.

    With ``dev_instances`` the trainer scores Arg-C F1 every ``eval_every``
    epochs and the checkpoint keeps the best-scoring parameters instead of
    whatever the final step left behind.
    """
    config.validate()
    set_determinism(config.seed, config.deterministic)
    assets = prepare_assets(config, train_instances, templates)
    model = build_model(config, assets.tokenizer.vocab_size, assets.labels)

    sequences = [prepare_sequence(inst, assets) for inst in train_instances]
    batches = _length_batches([len(s) for s in sequences], config.optimizer.batch_size)

    steps_per_epoch = len(batches)
    if config.optimizer.steps is not None:
        total_steps = config.optimizer.steps
        n_epochs = math.ceil(total_steps / steps_per_epoch)
    else:
        n_epochs = config.optimizer.epochs
        total_steps = n_epochs * steps_per_epoch

    backbone = list(model.backend.parameters())
    backbone_ids = {id(p) for p in backbone}
    heads = [p for p in model.parameters() if id(p) not in backbone_ids]
    optimizer = torch.optim.AdamW(
        [
            {"params": backbone, "lr": config.optimizer.transformer_lr},
            {"params": heads, "lr": config.optimizer.head_lr},
        ]
    )
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, _lr_lambda(total_steps, config.optimizer.warmup_ratio)
    )

    rng = random.Random(config.seed)
    counters: dict = {}
    history: list[dict] = []
    step = 0
    best_f1 = -1.0
    best_state = None
    if eval_every is None:
        eval_every = max(1, n_epochs // 12)
    model.train()
    for epoch in range(n_epochs):
        order = list(range(len(batches)))
        rng.shuffle(order)
        epoch_loss = 0.0
        epoch_batches = 0
        for b in order:
            batch = batches[b]
            optimizer.zero_grad()
            loss = torch.zeros(())
            for idx in batch:
                loss = loss + instance_loss(model, assets, sequences[idx], train_instances[idx], counters)
            loss = loss / len(batch)
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at step {step} (epoch {epoch}): {float(loss.detach())}"
                )
            if not loss.requires_grad:  # e.g. a batch of zero-slot prompts
                continue
            loss.backward()
            if config.optimizer.max_grad_norm is not None:
                nn.utils.clip_grad_norm_(model.parameters(), config.optimizer.max_grad_norm)
            optimizer.step()
            scheduler.step()
            epoch_loss += float(loss.detach())
            epoch_batches += 1
            step += 1
            if step >= total_steps:
                break
        record = {"epoch": epoch, "mean_loss": epoch_loss / max(1, epoch_batches)}
        done = step >= total_steps or epoch == n_epochs - 1
        if dev_instances and (epoch % eval_every == eval_every - 1 or done):
            dev_f1 = evaluate_model(model, assets, dev_instances)["arg_cf"]["f1"]
            record["dev_f1"] = dev_f1
            # ties go to the later epoch: more optimization at equal dev score
            if dev_f1 >= best_f1:
                best_f1 = dev_f1
                best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            model.train()
        history.append(record)
        if not quiet:
            print(f"epoch {epoch}: mean loss {record['mean_loss']:.4f}"
                  + (f" dev F1 {record['dev_f1']:.4f}" if "dev_f1" in record else ""))
        if step >= total_steps:
            break
    model.eval()

    if best_state is not None:
        model.load_state_dict(best_state)
        history.append({"selected_dev_f1": best_f1})

    return make_checkpoint(model, assets, history, counters)


def make_checkpoint(model, assets: TrainAssets, history: list, counters: dict) -> dict:
    state = {k: v.clone() for k, v in model.state_dict().items()}
    return {
        "config": assets.config.to_dict(),
        "tokenizer": {
            "pieces": sorted(assets.tokenizer._piece_ids),
            "roles": list(assets.tokenizer.role_names),
            "max_piece_len": assets.tokenizer.max_piece_len,
        },
        "labels": list(assets.labels.roles),
        "templates": (
            {e: t.text for e, t in assets.templates.items()} if assets.templates else None
        ),
        "state": state,
        "shapes": {k: list(v.shape) for k, v in state.items()},
        "history": history,
        "counters": dict(counters),
        "rng": {"torch": torch.get_rng_state()},
        "parameters": parameter_manifest(model),
    }


def save_checkpoint(checkpoint: dict, path) -> None:
    """Byte-reproducible serialization: tensors go through numpy, which
    pickles by value (torch's own formats key storages by memory address)."""
    def to_plain(obj):
        if isinstance(obj, torch.Tensor):
            return ("__tensor__", obj.detach().cpu().numpy())
        if isinstance(obj, dict):
            return {k: to_plain(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [to_plain(v) for v in obj]
        return obj

    with open(path, "wb") as fh:
        pickle.dump(to_plain(checkpoint), fh, protocol=4)


def _from_plain(obj):
    if isinstance(obj, tuple) and len(obj) == 2 and obj[0] == "__tensor__":
        return torch.from_numpy(obj[1].copy())
    if isinstance(obj, dict):
        return {k: _from_plain(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_from_plain(v) for v in obj]
    return obj


def load_checkpoint(path) -> tuple[nn.Module, TrainAssets, dict]:
    with open(path, "rb") as fh:
        checkpoint = _from_plain(pickle.load(fh))
    config = RunConfig.from_dict(checkpoint["config"])
    tok = checkpoint["tokenizer"]
    tokenizer = VocabTokenizer(tok["pieces"], tok["roles"], max_piece_len=tok["max_piece_len"])
    labels = RoleLabelSet(roles=tuple(checkpoint["labels"]))
    templates = None
    if checkpoint["templates"] is not None:
        templates = {
            e: PromptTemplate.parse(e, text) for e, text in checkpoint["templates"].items()
        }
    assets = TrainAssets(config=config, tokenizer=tokenizer, labels=labels, templates=templates)
    model = build_model(config, tokenizer.vocab_size, labels)
    model.load_state_dict(checkpoint["state"])
    model.eval()
    return model, assets, checkpoint


def predict_instances(
    model, assets: TrainAssets, instances: list[EventInstance]
) -> list[EventPredictions]:
    model.eval()
    out = []
    with torch.no_grad():
        for inst in instances:
            seq = prepare_sequence(inst, assets)
            if assets.config.variant == "span":
                scores = model(seq)
                preds = decode_predictions(scores, seq.roles)
            else:
                preds = model.predict(seq, model(seq))
            out.append(
                EventPredictions(
                    doc_id=inst.doc_id,
                    event_type=inst.event_type,
                    trigger=inst.trigger,
                    predictions=preds,
                )
            )
    return out


def evaluate_model(model, assets: TrainAssets, instances: list[EventInstance]) -> dict:
    """Span/Head F1 in both modes plus the error-category counts."""
    events = predict_instances(model, assets, instances)
    pred_lists = [ev.predictions for ev in events]
    gold_lists = [list(inst.gold_args) for inst in instances]

    def block(triple):
        p, r, f = triple
        return {"precision": p, "recall": r, "f1": f}

    report = {
        "n_events": len(instances),
        "n_predictions": sum(len(p) for p in pred_lists),
        "n_gold": sum(len(g) for g in gold_lists),
        "arg_if": block(span_f1(pred_lists, gold_lists, "identification")),
        "arg_cf": block(span_f1(pred_lists, gold_lists, "classification")),
        "head_if": block(head_f1(pred_lists, gold_lists, mode="identification")),
        "head_cf": block(head_f1(pred_lists, gold_lists, mode="classification")),
        "errors": count_errors(pred_lists, gold_lists).to_dict(),
    }
    return report


# ---------------------------------------------------------------------------
# parameter accounting


def parameter_manifest(model) -> dict:
    """Per-module parameter counts, with reserved role-token embeddings
    attributed to the role-guidance additions rather than the backbone."""
    groups = {"backbone": 0, "fusion": 0, "cca": 0, "rlig": 0, "baseline_head": 0, "selectors": 0}
    for name, p in model.named_parameters():
        n = p.numel()
        if name.startswith("backend."):
            groups["backbone"] += n
        elif name.startswith(("W_span", "W_prompt")):
            groups["fusion"] += n
        elif name.startswith("scorer."):
            groups["rlig"] += n
        elif name.startswith("classifier."):
            groups["baseline_head"] += n
        elif name.startswith(("w_start", "w_end")):
            groups["selectors"] += n
        else:
            groups.setdefault("other", 0)
            groups["other"] += n
    labels = getattr(model, "labels", None)
    uses_role_tokens = getattr(model, "use_rlig", False)
    if uses_role_tokens:
        n_role_types = len(labels.roles) if labels is not None else 0
        emb = getattr(model.backend, "tok_emb", None)
        if emb is not None and n_role_types:
            role_rows = n_role_types * emb.weight.shape[1]
            groups["backbone"] -= role_rows
            groups["rlig"] += role_rows
    groups["total"] = sum(v for k, v in groups.items() if k != "total")
    return groups


def manifest_from_config(
    config: RunConfig, vocab_size: int = 50_000, n_role_types: int = 65
) -> dict:
    """Structural parameter counts straight from the configured shapes."""
    b = config.backend
    d = b.d
    emb = vocab_size * d + b.max_tokens * d
    per_attn = (d * 3 * d + 3 * d) + (d * d + d)
    per_cross = (d * d + d) + (d * 2 * d + 2 * d) + (d * d + d)
    per_ffn = (d * b.ffn_mult * d + b.ffn_mult * d) + (b.ffn_mult * d * d + d)
    ln = 2 * d
    enc_layer = per_attn + per_ffn + 2 * ln
    dec_layer = per_attn + per_cross + per_ffn + 3 * ln
    backbone = emb + b.layers * enc_layer + ln
    if b.decoder_layers:
        backbone += b.decoder_layers * dec_layer + ln

    n_parts = 1 + int(not config.disable_cca) + int(not config.disable_rlig)
    fusion = (n_parts * d) * d if n_parts > 1 else 0
    rlig = 0
    if not config.disable_rlig:
        rlig = (
            n_role_types * d  # reserved role-token embedding rows
            + d * config.d_reduced + config.d_reduced
            + config.d_interaction * config.d_reduced
            + (n_role_types + 1)
            + 2 * d * config.d_interaction + config.d_interaction
        )
    selectors = 2 * d if config.variant == "prompt" else 0
    baseline_head = 0
    if config.variant == "span" and config.disable_rlig:
        baseline_head = 2 * d * (n_role_types + 1) + (n_role_types + 1)
    total = backbone + fusion + rlig + selectors + baseline_head
    return {
        "backbone": backbone,
        "fusion": fusion,
        "cca": 0,
        "rlig": rlig,
        "selectors": selectors,
        "baseline_head": baseline_head,
        "total": total,
        "rlig_fraction": rlig / total,
    }
