"""Adapter fine-tuning loop.

Causal-LM loss over the response tokens only, AdamW on the adapter
parameters, linear warmup, gradient accumulation to the effective batch
size. Writes the adapter weights, the config, and a per-step loss curve
CSV to the artifact directory.
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

import torch
import torch.nn.functional as F

from sft_adapter.config import SftConfig
from sft_adapter.data import Example, encode_example, load_instructions
from sft_adapter.model import (
    ByteTokenizer,
    Decoder,
    adapter_state,
    attach_adapters,
    build_base,
)


def _batch_loss(model: Decoder, batch: list[tuple[list[int], list[int]]]) -> torch.Tensor:
    pad = ByteTokenizer.pad_id
    width = max(len(ids) for ids, _ in batch)
    ids = torch.full((len(batch), width), pad, dtype=torch.long)
    mask = torch.zeros((len(batch), width - 1))
    for i, (seq, m) in enumerate(batch):
        ids[i, : len(seq)] = torch.tensor(seq)
        mask[i, : len(m)] = torch.tensor(m, dtype=torch.float)
    logits = model(ids)[:, :-1]
    targets = ids[:, 1:]
    losses = F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), targets.reshape(-1), reduction="none"
    ).view(targets.shape)
    return (losses * mask).sum() / mask.sum().clamp(min=1.0)


def train(instructions_path: str | Path, cfg: SftConfig, out_dir: str | Path,
          max_seq_len: int | None = None) -> Path:
    """Run ``cfg.training_steps`` optimizer steps; returns the artifact dir."""
    examples = load_instructions(instructions_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(cfg.seed)
    model = attach_adapters(
        build_base(cfg.base_model, cfg.seed),
        cfg.adapter_rank, cfg.adapter_alpha, cfg.adapter_target_modules,
    )
    seq_len = min(max_seq_len or cfg.max_seq_len, model.spec.max_seq_len)
    tok = ByteTokenizer()
    encoded = [encode_example(ex, tok, seq_len) for ex in examples]

    trainable = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.AdamW(trainable, lr=cfg.learning_rate)
    sched = torch.optim.lr_scheduler.LambdaLR(
        opt, lambda step: min(1.0, (step + 1) / max(1, cfg.warmup_steps))
    )
    rng = random.Random(cfg.seed)

    curve: list[tuple[int, float]] = []
    model.train()
    for step in range(1, cfg.training_steps + 1):
        opt.zero_grad()
        total = 0.0
        for _ in range(cfg.gradient_accumulation_steps):
            batch = [rng.choice(encoded) for _ in range(cfg.micro_batch_size)]
            loss = _batch_loss(model, batch) / cfg.gradient_accumulation_steps
            total += float(loss.detach())
            loss.backward()
        opt.step()
        sched.step()
        curve.append((step, total))

    torch.save(adapter_state(model), out / "adapter.pt")
    cfg.save(out / "sft_config.json")
    with (out / "loss_curve.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        writer.writerows(curve)
    return out


def load_trained(artifact_dir: str | Path) -> tuple[Decoder, SftConfig]:
    art = Path(artifact_dir)
    cfg = SftConfig.load(art / "sft_config.json")
    model = attach_adapters(
        build_base(cfg.base_model, cfg.seed),
        cfg.adapter_rank, cfg.adapter_alpha, cfg.adapter_target_modules,
    )
    from sft_adapter.model import load_adapter_state

    load_adapter_state(model, torch.load(art / "adapter.pt", weights_only=True))
    model.eval()
    return model, cfg
