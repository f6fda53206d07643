"""A small causal decoder with low-rank adapters on the attention
query/value projections. Base weights are frozen during fine-tuning;
only the adapter matrices train and only they are saved.

The byte-level tokenizer needs no external vocabulary files, so the
whole stack runs offline. Registry entries size the base model; the
``toy-decoder`` entry is small enough for CPU smoke training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

PAD, BOS, EOS = 256, 257, 258
VOCAB_SIZE = 259


class ByteTokenizer:
    """UTF-8 bytes plus PAD/BOS/EOS specials."""

    pad_id = PAD
    bos_id = BOS
    eos_id = EOS

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids: list[int]) -> str:
        return bytes(i for i in ids if i < 256).decode("utf-8", errors="replace")


@dataclass(frozen=True)
class ModelSpec:
    dim: int
    n_layers: int
    n_heads: int
    max_seq_len: int


REGISTRY = {
    "toy-decoder": ModelSpec(dim=64, n_layers=2, n_heads=2, max_seq_len=512),
    "small-decoder": ModelSpec(dim=256, n_layers=4, n_heads=4, max_seq_len=2048),
}


class LoraLinear(nn.Module):
    """Frozen linear layer plus a trainable low-rank update."""

    def __init__(self, base: nn.Linear, rank: int, alpha: int):
        super().__init__()
        self.base = base
        for p in self.base.parameters():
            p.requires_grad_(False)
        self.rank = rank
        self.scaling = alpha / rank
        self.lora_a = nn.Parameter(torch.zeros(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.normal_(self.lora_a, std=1.0 / rank)
        # lora_b starts at zero so the adapted model equals the base model

    def forward(self, x):
        return self.base(x) + F.linear(F.linear(x, self.lora_a), self.lora_b) * self.scaling


class Attention(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.n_heads = spec.n_heads
        self.head_dim = spec.dim // spec.n_heads
        self.q_proj = nn.Linear(spec.dim, spec.dim, bias=False)
        self.k_proj = nn.Linear(spec.dim, spec.dim, bias=False)
        self.v_proj = nn.Linear(spec.dim, spec.dim, bias=False)
        self.o_proj = nn.Linear(spec.dim, spec.dim, bias=False)

    def forward(self, x):
        b, t, d = x.shape
        shape = (b, t, self.n_heads, self.head_dim)
        q = self.q_proj(x).view(shape).transpose(1, 2)
        k = self.k_proj(x).view(shape).transpose(1, 2)
        v = self.v_proj(x).view(shape).transpose(1, 2)
        out = F.scaled_dot_product_attention(q, k, v, is_causal=True)
        return self.o_proj(out.transpose(1, 2).reshape(b, t, d))


class Block(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.ln1 = nn.LayerNorm(spec.dim)
        self.attn = Attention(spec)
        self.ln2 = nn.LayerNorm(spec.dim)
        self.mlp = nn.Sequential(
            nn.Linear(spec.dim, 4 * spec.dim), nn.GELU(), nn.Linear(4 * spec.dim, spec.dim)
        )

    def forward(self, x):
        x = x + self.attn(self.ln1(x))
        return x + self.mlp(self.ln2(x))


class Decoder(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.tok_emb = nn.Embedding(VOCAB_SIZE, spec.dim)
        self.pos_emb = nn.Embedding(spec.max_seq_len, spec.dim)
        self.blocks = nn.ModuleList(Block(spec) for _ in range(spec.n_layers))
        self.ln_f = nn.LayerNorm(spec.dim)
        self.head = nn.Linear(spec.dim, VOCAB_SIZE, bias=False)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        t = ids.shape[1]
        pos = torch.arange(t, device=ids.device)
        x = self.tok_emb(ids) + self.pos_emb(pos)
        for block in self.blocks:
            x = block(x)
        return self.head(self.ln_f(x))


def build_base(base_model: str, seed: int) -> Decoder:
    if base_model not in REGISTRY:
        raise ValueError(f"unknown base model {base_model!r}; known: {sorted(REGISTRY)}")
    torch.manual_seed(seed)
    return Decoder(REGISTRY[base_model])


def attach_adapters(model: Decoder, rank: int, alpha: int,
                    target_modules: tuple[str, ...]) -> Decoder:
    """Wrap the named attention projections with LoRA and freeze the rest."""
    for p in model.parameters():
        p.requires_grad_(False)
    for block in model.blocks:
        for name in target_modules:
            base = getattr(block.attn, name, None)
            if base is None:
                raise ValueError(f"no attention projection named {name!r}")
            setattr(block.attn, name, LoraLinear(base, rank, alpha))
    return model


def adapter_state(model: Decoder) -> dict[str, torch.Tensor]:
    return {k: v for k, v in model.state_dict().items() if "lora_" in k}


def load_adapter_state(model: Decoder, state: dict[str, torch.Tensor]) -> None:
    missing, unexpected = model.load_state_dict(state, strict=False)
    if unexpected:
        raise ValueError(f"unexpected adapter tensors: {unexpected[:3]}")
    lora_keys = {k for k in model.state_dict() if "lora_" in k}
    if lora_keys - set(state):
        raise ValueError("adapter state does not cover all adapter tensors")


@torch.no_grad()
def sequence_logprob(model: Decoder, prompt_ids: list[int], answer_ids: list[int]) -> float:
    """Total log-likelihood of ``answer_ids`` given ``prompt_ids``."""
    ids = torch.tensor([[BOS] + prompt_ids + answer_ids + [EOS]])
    logits = model(ids)[0]
    logp = F.log_softmax(logits, dim=-1)
    start = len(prompt_ids)  # predictions for answer tokens + EOS
    targets = answer_ids + [EOS]
    return float(sum(logp[start + i, tok] for i, tok in enumerate(targets)))


@torch.no_grad()
def greedy_generate(model: Decoder, prompt_ids: list[int], max_new_tokens: int = 32) -> list[int]:
    ids = [BOS] + prompt_ids
    out: list[int] = []
    for _ in range(max_new_tokens):
        window = ids[-model.spec.max_seq_len :]
        logits = model(torch.tensor([window]))[0, -1]
        nxt = int(logits.argmax())
        if nxt == EOS:
            break
        out.append(nxt)
        ids.append(nxt)
    return out
